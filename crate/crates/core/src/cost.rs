//! Cost semantics: evaluates a closed command into a value and a cost DAG.
//!
//! Spawned threads are costed eagerly and completely at the spawn, so the
//! order in which `input` is read differs from a real run. Inputs are
//! therefore addressed by (thread, vertex) through an [`InputSource`].

use std::collections::{BTreeMap, VecDeque};

use num_bigint::BigUint;
use num_traits::Zero;
use thiserror::Error;

use crate::ast::{Cmd, CmdKind, Expr, ExprKind, Name, Priority};
use crate::dag::{CostDag, DagError};
use crate::eval::{first_nonvalue_operand, reduce, replace_operand, Io, StepError};
use crate::prio::PartialOrder;
use crate::subst::subst_expr;
use crate::typeck::Signature;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("stuck: {0}")]
    Stuck(String),
    #[error("fuel exhausted after {0} vertices")]
    FuelExhausted(u64),
    #[error("sync on unknown thread {0}")]
    UnknownThread(Name),
    #[error(transparent)]
    Dag(#[from] DagError),
}

/// Supplies the value read by the `input` at a given vertex.
pub trait InputSource {
    fn input(&mut self, thread: &str, vertex: usize) -> BigUint;
}

/// Hands out values in order, then zeros (with a warning each time).
#[derive(Clone, Debug, Default)]
pub struct QueueInput {
    queue: VecDeque<BigUint>,
    pub warnings: Vec<String>,
}

impl QueueInput {
    pub fn new(values: impl IntoIterator<Item = BigUint>) -> Self {
        QueueInput {
            queue: values.into_iter().collect(),
            warnings: Vec::new(),
        }
    }
}

impl InputSource for QueueInput {
    fn input(&mut self, thread: &str, vertex: usize) -> BigUint {
        self.queue.pop_front().unwrap_or_else(|| {
            self.warnings
                .push(format!("input exhausted at {thread}:{vertex}, reading 0"));
            BigUint::zero()
        })
    }
}

/// Replays the inputs a run consumed, keyed by where they were read.
#[derive(Clone, Debug, Default)]
pub struct ReplayInput {
    pub values: BTreeMap<(String, usize), BigUint>,
}

impl ReplayInput {
    pub fn new(log: &[(String, usize, BigUint)]) -> Self {
        ReplayInput {
            values: log
                .iter()
                .map(|(t, v, n)| ((t.clone(), *v), n.clone()))
                .collect(),
        }
    }
}

impl InputSource for ReplayInput {
    fn input(&mut self, thread: &str, vertex: usize) -> BigUint {
        self.values
            .get(&(thread.to_string(), vertex))
            .cloned()
            .unwrap_or_default()
    }
}

/// What a finished thread leaves behind: its value and the threads it knows.
#[derive(Clone, Debug)]
pub struct RecordEntry {
    pub value: Expr,
    pub sig: Signature,
}

#[derive(Clone, Debug)]
pub struct CostOutput {
    pub value: Expr,
    pub dag: CostDag,
    pub record: BTreeMap<Name, RecordEntry>,
    pub sig: Signature,
    pub outputs: Vec<BigUint>,
}

struct ThreadIo<'a> {
    input: &'a mut dyn InputSource,
    outputs: &'a mut Vec<BigUint>,
    thread: &'a str,
    vertex: usize,
}

impl Io for ThreadIo<'_> {
    fn input(&mut self) -> BigUint {
        self.input.input(self.thread, self.vertex)
    }
    fn output(&mut self, n: &BigUint) {
        self.outputs.push(n.clone());
    }
}

pub struct Coster<'i> {
    pub dag: CostDag,
    pub record: BTreeMap<Name, RecordEntry>,
    pub outputs: Vec<BigUint>,
    input: &'i mut dyn InputSource,
    fuel: u64,
    used: u64,
}

fn stuck(e: StepError) -> CostError {
    CostError::Stuck(e.to_string())
}

impl<'i> Coster<'i> {
    pub fn new(store: &PartialOrder, input: &'i mut dyn InputSource, fuel: u64) -> Self {
        Coster {
            dag: CostDag::new(store.clone()),
            record: BTreeMap::new(),
            outputs: Vec::new(),
            input,
            fuel,
            used: 0,
        }
    }

    fn vertex(&mut self, thread: &str) -> Result<usize, CostError> {
        if self.used >= self.fuel {
            return Err(CostError::FuelExhausted(self.used));
        }
        self.used += 1;
        let index = self.dag.thread(thread)?.vertices.len();
        self.dag.push_vertex(thread)?;
        Ok(index)
    }

    /// Evaluates `e` to a value, one vertex of `thread` per rule instance.
    pub fn cost_expr(&mut self, thread: &str, e: &Expr) -> Result<Expr, CostError> {
        let mut frames: Vec<(Expr, usize)> = Vec::new();
        let mut cur = e.clone();
        loop {
            if cur.is_value() {
                match frames.pop() {
                    Some((parent, i)) => cur = replace_operand(&parent, i, cur),
                    None => return Ok(cur),
                }
                continue;
            }
            if let Some((i, op)) = first_nonvalue_operand(&cur) {
                frames.push((cur, i));
                cur = op;
                continue;
            }
            let vertex = self.vertex(thread)?;
            let mut io = ThreadIo {
                input: &mut *self.input,
                outputs: &mut self.outputs,
                thread,
                vertex,
            };
            cur = reduce(&cur, &mut io).map_err(stuck)?;
        }
    }

    /// Costs `m` as the body of `thread`, which must already exist, and
    /// returns its value and the threads it ends up knowing about.
    pub fn cost_cmd(
        &mut self,
        thread: &str,
        m: &Cmd,
        sig: Signature,
    ) -> Result<(Expr, Signature), CostError> {
        let mut sig = sig;
        let mut conts: Vec<(Name, Cmd)> = Vec::new();
        let mut cur = m.clone();
        loop {
            let value = match cur.kind() {
                CmdKind::Bind(e, x, rest) => {
                    let v = self.cost_expr(thread, e)?;
                    let ExprKind::CmdV(_, inner) = v.kind() else {
                        return Err(CostError::Stuck(format!("bind of a non-command {v}")));
                    };
                    conts.push((x.clone(), rest.clone()));
                    cur = inner.clone();
                    continue;
                }
                CmdKind::Spawn(p, t, body) => {
                    let k = self.vertex(thread)?;
                    let child = format!("{thread}.{k}");
                    let prio = match p {
                        Priority::Const(c) => c.clone(),
                        Priority::Var(v) => {
                            return Err(CostError::Stuck(format!("spawn at priority variable {v}")))
                        }
                    };
                    self.dag.add_thread(&child, &prio)?;
                    self.dag.add_spawn(thread, k, &child)?;
                    let (cv, csig) = self.cost_cmd(&child, body, sig.clone())?;
                    let id = Name::from(child);
                    self.record.insert(
                        id.clone(),
                        RecordEntry {
                            value: cv,
                            sig: csig,
                        },
                    );
                    sig.insert(id.clone(), t.clone(), p.clone());
                    Expr::new(ExprKind::Tid(id))
                }
                CmdKind::Sync(e) => {
                    let v = self.cost_expr(thread, e)?;
                    let ExprKind::Tid(b) = v.kind() else {
                        return Err(CostError::Stuck(format!("sync on a non-thread {v}")));
                    };
                    let entry = self
                        .record
                        .get(b)
                        .cloned()
                        .ok_or_else(|| CostError::UnknownThread(b.clone()))?;
                    let k = self.vertex(thread)?;
                    self.dag.add_join(b.as_str(), thread, k)?;
                    sig = sig.extended(&entry.sig);
                    entry.value
                }
                CmdKind::Ret(e) => self.cost_expr(thread, e)?,
            };
            match conts.pop() {
                Some((x, rest)) => {
                    self.vertex(thread)?;
                    cur = subst_expr(&value, &x, &rest);
                }
                None => return Ok((value, sig)),
            }
        }
    }
}

/// Costs `main` as the root thread at `bot`.
pub fn cost_program(
    store: &PartialOrder,
    main: &Cmd,
    input: &mut dyn InputSource,
    fuel: u64,
) -> Result<CostOutput, CostError> {
    let mut c = Coster::new(store, input, fuel);
    c.dag.add_thread("main", &Name::new(crate::ast::BOT))?;
    let (value, sig) = c.cost_cmd("main", main, Signature::new())?;
    Ok(CostOutput {
        value,
        dag: c.dag,
        record: c.record,
        sig,
        outputs: c.outputs,
    })
}

/// Value and vertex count of a closed expression.
pub fn cost_expr(e: &Expr, fuel: u64) -> Result<(Expr, usize), CostError> {
    let mut input = QueueInput::default();
    let mut c = Coster::new(&PartialOrder::new(), &mut input, fuel);
    c.dag.add_thread("main", &Name::new(crate::ast::BOT))?;
    let v = c.cost_expr("main", e)?;
    Ok((v, c.dag.work()))
}
