//! PriML: a parallel functional language with partially ordered thread
//! priorities, its core calculus, and tools for cost analysis.

pub mod alpha;
pub mod ast;
pub mod cost;
pub mod dag;
pub mod dagfmt;
pub mod elab;
pub mod eval;
pub mod parser;
pub mod pipeline;
pub mod prelude;
pub mod pretty;
pub mod prio;
pub mod runtime;
pub mod sched;
pub mod subst;
pub mod surface;
pub mod typeck;
