//! Source text to a typed core command, with driver-facing diagnostics.

use std::fmt;

use crate::ast::{Cmd, Name, Priority, Type};
use crate::elab::{elab_program, ElabError, Elaborated};
use crate::parser::{parse, SyntaxError};
use crate::prelude::with_prelude;
use crate::prio::PartialOrder;
use crate::surface::{Program, Span, Toplevel};
use crate::typeck::{type_cmd, Signature, TypeContext};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub severity: Severity,
    pub span: Option<Span>,
    pub code: &'static str,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}[{}]: {}", self.code, self.message)
    }
}

impl From<SyntaxError> for Diagnostic {
    fn from(e: SyntaxError) -> Self {
        Diagnostic {
            severity: Severity::Error,
            span: Some(e.span),
            code: "E-SYNTAX",
            message: e.to_string(),
        }
    }
}

impl From<ElabError> for Diagnostic {
    fn from(e: ElabError) -> Self {
        Diagnostic {
            severity: Severity::Error,
            span: Some(e.span()),
            code: e.code(),
            message: e.to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Options {
    pub prelude: bool,
}

impl Default for Options {
    fn default() -> Self {
        Options { prelude: true }
    }
}

/// A program that parsed, elaborated and typechecked at `bot`.
#[derive(Clone, Debug)]
pub struct Checked {
    pub program: Program,
    pub elab: Elaborated,
    pub ty: Type,
    /// Number of library declarations prepended to the program.
    pub library: usize,
}

impl Checked {
    pub fn cmd(&self) -> &Cmd {
        &self.elab.cmd
    }

    pub fn store(&self) -> &PartialOrder {
        &self.elab.store
    }

    /// Top-level bindings written in the source, without library ones.
    pub fn own_bindings(&self) -> &[(Name, Type)] {
        &self.elab.bindings[self.library..]
    }
}

pub fn check_program(own: &Program, opts: Options) -> Result<Checked, Diagnostic> {
    let program = if opts.prelude {
        with_prelude(own)
    } else {
        own.clone()
    };
    let library = program
        .toplevels
        .iter()
        .filter(|t| matches!(t, Toplevel::Decl(_)))
        .count()
        - own
            .toplevels
            .iter()
            .filter(|t| matches!(t, Toplevel::Decl(_)))
            .count();
    let elab = elab_program(PartialOrder::new(), &program)?;
    let ty = type_cmd(
        &elab.store,
        &Signature::new(),
        &mut TypeContext::new(),
        &elab.cmd,
        &Priority::bot(),
    )
    .map_err(|e| Diagnostic {
        severity: Severity::Error,
        span: None,
        code: "E-INTERNAL",
        message: format!("elaborated program does not typecheck: {e}"),
    })?;
    Ok(Checked {
        program,
        elab,
        ty,
        library,
    })
}

pub fn check_source(src: &str, opts: Options) -> Result<Checked, Diagnostic> {
    check_program(&parse(src)?, opts)
}
