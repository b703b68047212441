//! Concrete notation for core terms, used by diagnostics and `--dump-core`.

use std::fmt::{self, Display, Write};

use crate::ast::{Cmd, CmdKind, Constraint, Expr, ExprKind, Priority, Side, Type};

impl Display for Priority {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.name())
    }
}

impl Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, b)) in self.conjuncts.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a} <= {b}")?;
        }
        Ok(())
    }
}

fn write_type(out: &mut String, t: &Type, level: u8) {
    let wrap = |lvl: u8| lvl < level;
    match t {
        Type::Unit => out.push_str("unit"),
        Type::Nat => out.push_str("nat"),
        Type::Forall(v, c, body) => {
            if wrap(0) {
                out.push('(');
            }
            let _ = write!(out, "forall {v} : {c}. ");
            write_type(out, body, 0);
            if wrap(0) {
                out.push(')');
            }
        }
        Type::Arrow(a, b) => {
            if wrap(0) {
                out.push('(');
            }
            write_type(out, a, 1);
            out.push_str(" -> ");
            write_type(out, b, 0);
            if wrap(0) {
                out.push(')');
            }
        }
        Type::Sum(a, b) => {
            if wrap(1) {
                out.push('(');
            }
            write_type(out, a, 1);
            out.push_str(" + ");
            write_type(out, b, 2);
            if wrap(1) {
                out.push(')');
            }
        }
        Type::Prod(a, b) => {
            if wrap(2) {
                out.push('(');
            }
            write_type(out, a, 2);
            out.push_str(" * ");
            write_type(out, b, 3);
            if wrap(2) {
                out.push(')');
            }
        }
        Type::Thread(a, p) => {
            write_type(out, a, 3);
            let _ = write!(out, " thread[{p}]");
        }
        Type::Cmd(a, p) => {
            write_type(out, a, 3);
            let _ = write!(out, " cmd[{p}]");
        }
    }
}

impl Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_type(&mut s, self, 0);
        f.write_str(&s)
    }
}

struct Printer {
    out: String,
    indent: usize,
}

/// Expression levels: 0 binding forms, 1 application, 2 atoms.
impl Printer {
    fn newline(&mut self) {
        self.out.push('\n');
        for _ in 0..self.indent {
            self.out.push_str("  ");
        }
    }

    fn side(s: Side) -> &'static str {
        match s {
            Side::Left => "inl",
            Side::Right => "inr",
        }
    }

    fn expr(&mut self, e: &Expr, level: u8) {
        use ExprKind::*;
        let needs = |l: u8| l < level;
        match e.kind() {
            Var(x) => self.out.push_str(x.as_str()),
            Unit => self.out.push_str("()"),
            Num(n) => {
                let _ = write!(self.out, "{n}");
            }
            Tid(a) => {
                let _ = write!(self.out, "tid({a})");
            }
            Input => self.out.push_str("input"),
            PairV(a, b) => {
                self.out.push('<');
                self.expr(a, 0);
                self.out.push_str(", ");
                self.expr(b, 0);
                self.out.push('>');
            }
            Pair(a, b) => {
                self.out.push('(');
                self.expr(a, 0);
                self.out.push_str(", ");
                self.expr(b, 0);
                self.out.push(')');
            }
            CmdV(p, m) => {
                let _ = write!(self.out, "cmd[{p}] {{");
                self.indent += 1;
                self.newline();
                self.cmd(m);
                self.indent -= 1;
                self.newline();
                self.out.push('}');
            }
            App(a, b) => {
                self.paren(needs(1), |p| {
                    p.expr(a, 1);
                    p.out.push(' ');
                    p.expr(b, 2);
                });
            }
            Fst(a) | Snd(a) | Output(a) => {
                let kw = match e.kind() {
                    Fst(_) => "fst",
                    Snd(_) => "snd",
                    _ => "output",
                };
                self.paren(needs(1), |p| {
                    p.out.push_str(kw);
                    p.out.push(' ');
                    p.expr(a, 2);
                });
            }
            Inj(s, t, v) | InjV(s, t, v) => {
                let (open, close) = if matches!(e.kind(), Inj(..)) {
                    ('[', ']')
                } else {
                    ('<', '>')
                };
                self.paren(needs(1), |p| {
                    let _ = write!(p.out, "{}{open}{t}{close} ", Self::side(*s));
                    p.expr(v, 2);
                });
            }
            PApp(v, r) => {
                let _ = write!(self.out, "[{r}]");
                self.expr(v, 2);
            }
            Lam(x, t, b) => self.paren(needs(0), |p| {
                let _ = write!(p.out, "fn ({x} : {t}) => ");
                p.expr(b, 0);
            }),
            PLam(v, c, b) => self.paren(needs(0), |p| {
                let _ = write!(p.out, "/\\({v} : {c}) => ");
                p.expr(b, 0);
            }),
            Fix(x, t, b) => self.paren(needs(0), |p| {
                let _ = write!(p.out, "fix {x} : {t} is ");
                p.expr(b, 0);
            }),
            Let(x, a, b) => self.paren(needs(0), |p| {
                let _ = write!(p.out, "let {x} = ");
                p.expr(a, 0);
                p.out.push_str(" in");
                p.newline();
                p.expr(b, 0);
            }),
            Ifz(v, a, x, b) => self.paren(needs(0), |p| {
                p.out.push_str("ifz ");
                p.expr(v, 0);
                p.out.push_str(" then ");
                p.expr(a, 0);
                let _ = write!(p.out, " else {x} => ");
                p.expr(b, 0);
            }),
            Case(v, x, a, y, b) => self.paren(needs(0), |p| {
                p.out.push_str("case ");
                p.expr(v, 0);
                let _ = write!(p.out, " of inl {x} => ");
                p.expr(a, 0);
                let _ = write!(p.out, " | inr {y} => ");
                p.expr(b, 0);
            }),
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

    fn cmd(&mut self, m: &Cmd) {
        match m.kind() {
            CmdKind::Bind(e, x, rest) => {
                let _ = write!(self.out, "bind {x} <- ");
                self.expr(e, 0);
                self.out.push(';');
                self.newline();
                self.cmd(rest);
            }
            CmdKind::Spawn(p, t, body) => {
                let _ = write!(self.out, "spawn[{p}; {t}] {{");
                self.indent += 1;
                self.newline();
                self.cmd(body);
                self.indent -= 1;
                self.newline();
                self.out.push('}');
            }
            CmdKind::Sync(e) => {
                self.out.push_str("sync ");
                self.expr(e, 2);
            }
            CmdKind::Ret(e) => {
                self.out.push_str("ret ");
                self.expr(e, 2);
            }
        }
    }
}

impl Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut p = Printer {
            out: String::new(),
            indent: 0,
        };
        p.expr(self, 0);
        f.write_str(&p.out)
    }
}

impl Display for Cmd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut p = Printer {
            out: String::new(),
            indent: 0,
        };
        p.cmd(self);
        f.write_str(&p.out)
    }
}
