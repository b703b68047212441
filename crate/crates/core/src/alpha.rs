//! Alpha-equivalence on core terms.
//!
//! Bound names are compared by binding depth: two variables match when both
//! refer to the binder at the same position of their environments, or both are
//! free with the same name.

use crate::ast::{Cmd, CmdKind, Constraint, Expr, ExprKind, Name, Priority, Type};

#[derive(Default)]
struct Env {
    vars: Vec<(Name, Name)>,
    pvars: Vec<(Name, Name)>,
}

fn lookup(stack: &[(Name, Name)], a: &Name, b: &Name) -> bool {
    let ia = stack.iter().rposition(|(l, _)| l == a);
    let ib = stack.iter().rposition(|(_, r)| r == b);
    match (ia, ib) {
        (None, None) => a == b,
        (Some(i), Some(j)) => i == j,
        _ => false,
    }
}

impl Env {
    fn prio(&self, a: &Priority, b: &Priority) -> bool {
        match (a, b) {
            (Priority::Const(x), Priority::Const(y)) => x == y,
            (Priority::Var(x), Priority::Var(y)) => lookup(&self.pvars, x, y),
            _ => false,
        }
    }

    fn constraint(&self, a: &Constraint, b: &Constraint) -> bool {
        a.conjuncts.len() == b.conjuncts.len()
            && a.conjuncts
                .iter()
                .zip(&b.conjuncts)
                .all(|((l1, r1), (l2, r2))| self.prio(l1, l2) && self.prio(r1, r2))
    }

    fn ty(&mut self, a: &Type, b: &Type) -> bool {
        match (a, b) {
            (Type::Unit, Type::Unit) | (Type::Nat, Type::Nat) => true,
            (Type::Arrow(a1, a2), Type::Arrow(b1, b2))
            | (Type::Prod(a1, a2), Type::Prod(b1, b2))
            | (Type::Sum(a1, a2), Type::Sum(b1, b2)) => self.ty(a1, b1) && self.ty(a2, b2),
            (Type::Thread(a1, p), Type::Thread(b1, q)) | (Type::Cmd(a1, p), Type::Cmd(b1, q)) => {
                self.prio(p, q) && self.ty(a1, b1)
            }
            (Type::Forall(v, c, t), Type::Forall(w, d, u)) => {
                self.pvars.push((v.clone(), w.clone()));
                let ok = self.constraint(c, d) && self.ty(t, u);
                self.pvars.pop();
                ok
            }
            _ => false,
        }
    }

    fn bound<T>(&mut self, x: &Name, y: &Name, f: impl FnOnce(&mut Self) -> T) -> T {
        self.vars.push((x.clone(), y.clone()));
        let r = f(self);
        self.vars.pop();
        r
    }

    fn expr(&mut self, a: &Expr, b: &Expr) -> bool {
        use ExprKind::*;
        if a.ptr_eq(b) && a.is_closed() {
            return true;
        }
        match (a.kind(), b.kind()) {
            (Var(x), Var(y)) => lookup(&self.vars, x, y),
            (Unit, Unit) | (Input, Input) => true,
            (Num(m), Num(n)) => m == n,
            (Tid(x), Tid(y)) => x == y,
            (Lam(x, t, e), Lam(y, u, f)) | (Fix(x, t, e), Fix(y, u, f)) => {
                self.ty(t, u) && self.bound(x, y, |s| s.expr(e, f))
            }
            (PairV(a1, a2), PairV(b1, b2))
            | (App(a1, a2), App(b1, b2))
            | (Pair(a1, a2), Pair(b1, b2)) => self.expr(a1, b1) && self.expr(a2, b2),
            (InjV(s1, t, e), InjV(s2, u, f)) | (Inj(s1, t, e), Inj(s2, u, f)) => {
                s1 == s2 && self.ty(t, u) && self.expr(e, f)
            }
            (CmdV(p, m), CmdV(q, n)) => self.prio(p, q) && self.cmd(m, n),
            (PLam(v, c, e), PLam(w, d, f)) => {
                self.pvars.push((v.clone(), w.clone()));
                let ok = self.constraint(c, d) && self.expr(e, f);
                self.pvars.pop();
                ok
            }
            (Let(x, a1, a2), Let(y, b1, b2)) => {
                self.expr(a1, b1) && self.bound(x, y, |s| s.expr(a2, b2))
            }
            (Ifz(v, a1, x, a2), Ifz(w, b1, y, b2)) => {
                self.expr(v, w) && self.expr(a1, b1) && self.bound(x, y, |s| s.expr(a2, b2))
            }
            (Fst(e), Fst(f)) | (Snd(e), Snd(f)) | (Output(e), Output(f)) => self.expr(e, f),
            (Case(v, x1, a1, y1, a2), Case(w, x2, b1, y2, b2)) => {
                self.expr(v, w)
                    && self.bound(x1, x2, |s| s.expr(a1, b1))
                    && self.bound(y1, y2, |s| s.expr(a2, b2))
            }
            (PApp(e, p), PApp(f, q)) => self.prio(p, q) && self.expr(e, f),
            _ => false,
        }
    }

    fn cmd(&mut self, a: &Cmd, b: &Cmd) -> bool {
        if a.ptr_eq(b) && a.is_closed() {
            return true;
        }
        match (a.kind(), b.kind()) {
            (CmdKind::Bind(e, x, m), CmdKind::Bind(f, y, n)) => {
                self.expr(e, f) && self.bound(x, y, |s| s.cmd(m, n))
            }
            (CmdKind::Spawn(p, t, m), CmdKind::Spawn(q, u, n)) => {
                self.prio(p, q) && self.ty(t, u) && self.cmd(m, n)
            }
            (CmdKind::Sync(e), CmdKind::Sync(f)) | (CmdKind::Ret(e), CmdKind::Ret(f)) => {
                self.expr(e, f)
            }
            _ => false,
        }
    }
}

pub fn alpha_eq_type(a: &Type, b: &Type) -> bool {
    Env::default().ty(a, b)
}

pub fn alpha_eq_expr(a: &Expr, b: &Expr) -> bool {
    Env::default().expr(a, b)
}

pub fn alpha_eq_cmd(a: &Cmd, b: &Cmd) -> bool {
    Env::default().cmd(a, b)
}

/// Equality of terms is alpha-equivalence.
impl PartialEq for Expr {
    fn eq(&self, other: &Expr) -> bool {
        alpha_eq_expr(self, other)
    }
}

impl PartialEq for Cmd {
    fn eq(&self, other: &Cmd) -> bool {
        alpha_eq_cmd(self, other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn id(x: &str) -> Expr {
        Expr::lam(x, Type::Nat, Expr::var(x))
    }

    #[test]
    fn renamed_binders_are_equal() {
        assert!(alpha_eq_expr(&id("x"), &id("y")));
    }

    #[test]
    fn free_names_must_agree() {
        assert!(!alpha_eq_expr(&Expr::var("x"), &Expr::var("y")));
        let a = Expr::lam("x", Type::Nat, Expr::var("z"));
        let b = Expr::lam("z", Type::Nat, Expr::var("z"));
        assert!(!alpha_eq_expr(&a, &b));
    }

    #[test]
    fn forall_types_compare_up_to_renaming() {
        let mk = |v: &str| {
            Type::forall(
                Name::new(v),
                Constraint::le(Priority::bot(), Priority::var(v)),
                Type::cmd(Type::Unit, Priority::var(v)),
            )
        };
        assert!(alpha_eq_type(&mk("p"), &mk("q")));
        let open = Type::forall(
            Name::new("p"),
            Constraint::le(Priority::bot(), Priority::var("p")),
            Type::cmd(Type::Unit, Priority::var("q")),
        );
        assert!(!alpha_eq_type(&mk("p"), &open));
    }

    #[test]
    fn var_and_const_priorities_differ() {
        let a = Type::cmd(Type::Unit, Priority::var("p"));
        let b = Type::cmd(Type::Unit, Priority::constant("p"));
        assert!(!alpha_eq_type(&a, &b));
    }
}
