//! Surface syntax of PriML programs, with source spans.
//!
//! Types reuse the core representation; every priority name in a surface type
//! is a `Priority::Const` until elaboration decides which names are bound
//! priority variables.

use std::fmt::{self, Display, Write};

use num_bigint::BigUint;

use crate::ast::{Name, Type};

/// A 1-based, end-inclusive source region.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Span {
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
}

impl Span {
    pub fn new(start_line: u32, start_col: u32, end_line: u32, end_col: u32) -> Self {
        Span {
            start_line,
            start_col,
            end_line,
            end_col,
        }
    }

    /// The smallest span covering both.
    pub fn to(self, other: Span) -> Span {
        Span {
            start_line: self.start_line,
            start_col: self.start_col,
            end_line: other.end_line,
            end_col: other.end_col,
        }
    }
}

impl Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}.{}-{}.{}",
            self.start_line, self.start_col, self.end_line, self.end_col
        )
    }
}

/// A priority name as written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PrioRef {
    pub name: Name,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct SExpr {
    pub kind: SExprKind,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub enum SExprKind {
    Var(Name),
    Unit,
    Num(BigUint),
    Lam(Name, Option<Type>, Box<SExpr>),
    App(Box<SExpr>, Box<SExpr>),
    Pair(Box<SExpr>, Box<SExpr>),
    Fst(Box<SExpr>),
    Snd(Box<SExpr>),
    Inl(Box<SExpr>),
    Inr(Box<SExpr>),
    Case(Box<SExpr>, Name, Box<SExpr>, Name, Box<SExpr>),
    Ifz(Box<SExpr>, Box<SExpr>, Name, Box<SExpr>),
    Let(Vec<Decl>, Box<SExpr>),
    Cmd(PrioRef, SCmd),
    PApp(PrioRef, Box<SExpr>),
    Output(Box<SExpr>),
    Input,
    Fix(Name, Type, Box<SExpr>),
    Annot(Box<SExpr>, Type),
}

#[derive(Clone, Debug)]
pub enum InstrKind {
    Do(SExpr),
    Sync(SExpr),
    Spawn(PrioRef, SCmd),
    Ret(SExpr),
}

#[derive(Clone, Debug)]
pub struct Instr {
    pub kind: InstrKind,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct Stmt {
    pub binder: Option<Name>,
    pub instr: Instr,
}

/// A nonempty instruction sequence; the last statement has no binder.
#[derive(Clone, Debug)]
pub struct SCmd {
    pub stmts: Vec<Stmt>,
    pub span: Span,
}

/// `p : lo <= p, p <= hi` inside `fun[...]`.
#[derive(Clone, Debug)]
pub struct PrioBinder {
    pub name: Name,
    pub constraints: Vec<(PrioRef, PrioRef)>,
    pub span: Span,
}

#[derive(Clone, Debug)]
pub struct FunDecl {
    pub name: Name,
    pub params: Vec<(Name, Type)>,
    pub ret: Type,
    pub body: SExpr,
}

#[derive(Clone, Debug)]
pub enum DeclKind {
    Val {
        name: Name,
        ty: Option<Type>,
        body: SExpr,
    },
    Fun(FunDecl),
    PolyFun(Vec<PrioBinder>, FunDecl),
}

#[derive(Clone, Debug)]
pub struct Decl {
    pub kind: DeclKind,
    pub span: Span,
}

impl Decl {
    pub fn name(&self) -> &Name {
        match &self.kind {
            DeclKind::Val { name, .. } => name,
            DeclKind::Fun(f) | DeclKind::PolyFun(_, f) => &f.name,
        }
    }
}

#[derive(Clone, Debug)]
pub enum Toplevel {
    Priority(PrioRef),
    Order(PrioRef, PrioRef),
    Decl(Decl),
}

#[derive(Clone, Debug)]
pub struct Program {
    pub toplevels: Vec<Toplevel>,
    pub main: SCmd,
    pub main_span: Span,
}

struct Printer {
    out: String,
    indent: usize,
}

impl Printer {
    fn nl(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
    }

    fn paren(&mut self, wrap: bool, f: impl FnOnce(&mut Self)) {
        if wrap {
            self.out.push('(');
        }
        f(self);
        if wrap {
            self.out.push(')');
        }
    }

    /// Levels: 0 binding forms, 1 application, 2 atoms.
    fn expr(&mut self, e: &SExpr, level: u8) {
        use SExprKind::*;
        match &e.kind {
            Var(x) => self.out.push_str(x.as_str()),
            Unit => self.out.push_str("()"),
            Num(n) => {
                let _ = write!(self.out, "{n}");
            }
            Input => self.out.push_str("input"),
            Pair(a, b) => {
                self.out.push('(');
                self.expr(a, 0);
                self.out.push_str(", ");
                self.expr(b, 0);
                self.out.push(')');
            }
            Annot(a, t) => {
                self.out.push('(');
                self.expr(a, 0);
                let _ = write!(self.out, " : {t})");
            }
            Let(decls, body) => {
                self.out.push_str("let");
                self.indent += 1;
                for d in decls {
                    self.nl();
                    self.decl(d);
                }
                self.indent -= 1;
                self.nl();
                self.out.push_str("in");
                self.indent += 1;
                self.nl();
                self.expr(body, 0);
                self.indent -= 1;
                self.nl();
                self.out.push_str("end");
            }
            Cmd(p, m) => {
                let _ = write!(self.out, "cmd[{}] ", p.name);
                self.block(m);
            }
            PApp(p, a) => {
                let _ = write!(self.out, "[{}]", p.name);
                self.expr(a, 2);
            }
            App(a, b) => self.paren(level > 1, |s| {
                s.expr(a, 1);
                s.out.push(' ');
                s.expr(b, 2);
            }),
            Fst(a) | Snd(a) | Inl(a) | Inr(a) | Output(a) => {
                let kw = match &e.kind {
                    Fst(_) => "fst",
                    Snd(_) => "snd",
                    Inl(_) => "inl",
                    Inr(_) => "inr",
                    _ => "output",
                };
                self.paren(level > 1, |s| {
                    let _ = write!(s.out, "{kw} ");
                    s.expr(a, 2);
                });
            }
            Lam(x, t, body) => self.paren(level > 0, |s| {
                match t {
                    Some(t) => {
                        let _ = write!(s.out, "fn ({x} : {t}) => ");
                    }
                    None => {
                        let _ = write!(s.out, "fn {x} => ");
                    }
                }
                s.expr(body, 0);
            }),
            Ifz(v, a, x, b) => self.paren(level > 0, |s| {
                s.out.push_str("ifz ");
                s.expr(v, 0);
                s.out.push_str(" then ");
                s.expr(a, 0);
                let _ = write!(s.out, " else {x} => ");
                s.expr(b, 0);
            }),
            Case(v, x, a, y, b) => self.paren(level > 0, |s| {
                s.out.push_str("case ");
                s.expr(v, 0);
                let _ = write!(s.out, " of inl {x} => ");
                s.expr(a, 1);
                let _ = write!(s.out, " | inr {y} => ");
                s.expr(b, 0);
            }),
            Fix(x, t, body) => self.paren(level > 0, |s| {
                let _ = write!(s.out, "fix {x} : {t} is ");
                s.expr(body, 0);
            }),
        }
    }

    fn block(&mut self, m: &SCmd) {
        self.out.push('{');
        self.indent += 1;
        for (i, st) in m.stmts.iter().enumerate() {
            self.nl();
            if let Some(x) = &st.binder {
                let _ = write!(self.out, "{x} <- ");
            }
            self.instr(&st.instr);
            if i + 1 < m.stmts.len() {
                self.out.push(';');
            }
        }
        self.indent -= 1;
        self.nl();
        self.out.push('}');
    }

    fn instr(&mut self, i: &Instr) {
        match &i.kind {
            InstrKind::Do(e) => {
                self.out.push_str("do ");
                self.expr(e, 0);
            }
            InstrKind::Sync(e) => {
                self.out.push_str("sync ");
                self.expr(e, 0);
            }
            InstrKind::Ret(e) => {
                self.out.push_str("ret ");
                self.expr(e, 0);
            }
            InstrKind::Spawn(p, m) => {
                let _ = write!(self.out, "spawn[{}] ", p.name);
                self.block(m);
            }
        }
    }

    fn decl(&mut self, d: &Decl) {
        match &d.kind {
            DeclKind::Val { name, ty, body } => {
                let _ = write!(self.out, "val {name}");
                if let Some(t) = ty {
                    let _ = write!(self.out, " : {t}");
                }
                self.out.push_str(" =");
                self.body(body);
            }
            DeclKind::Fun(f) => self.fun(&[], f),
            DeclKind::PolyFun(bs, f) => self.fun(bs, f),
        }
    }

    fn body(&mut self, e: &SExpr) {
        self.indent += 1;
        self.nl();
        self.expr(e, 0);
        self.indent -= 1;
    }

    fn fun(&mut self, binders: &[PrioBinder], f: &FunDecl) {
        self.out.push_str("fun");
        if !binders.is_empty() {
            self.out.push('[');
            for (i, b) in binders.iter().enumerate() {
                if i > 0 {
                    self.out.push_str(", ");
                }
                self.out.push_str(b.name.as_str());
                for (j, (lo, hi)) in b.constraints.iter().enumerate() {
                    self.out.push_str(if j == 0 { " : " } else { ", " });
                    let _ = write!(self.out, "{} <= {}", lo.name, hi.name);
                }
            }
            self.out.push(']');
        }
        let _ = write!(self.out, " {}", f.name);
        for (x, t) in &f.params {
            let _ = write!(self.out, " ({x} : {t})");
        }
        let _ = write!(self.out, " : {} =", f.ret);
        self.body(&f.body);
    }
}

impl Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut p = Printer {
            out: String::new(),
            indent: 0,
        };
        p.expr(self, 0);
        f.write_str(&p.out)
    }
}

impl Display for Decl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut p = Printer {
            out: String::new(),
            indent: 0,
        };
        p.decl(self);
        f.write_str(&p.out)
    }
}

impl Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut p = Printer {
            out: String::new(),
            indent: 0,
        };
        for t in &self.toplevels {
            match t {
                Toplevel::Priority(n) => {
                    let _ = write!(p.out, "priority {}", n.name);
                }
                Toplevel::Order(lo, hi) => {
                    let _ = write!(p.out, "order {} < {}", lo.name, hi.name);
                }
                Toplevel::Decl(d) => p.decl(d),
            }
            p.out.push('\n');
        }
        p.out.push_str("main ");
        p.block(&self.main);
        p.out.push('\n');
        f.write_str(&p.out)
    }
}
