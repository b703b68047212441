//! Capture-avoiding substitution of values for term variables and of
//! priorities for priority variables.

use std::collections::BTreeSet;

use crate::ast::{
    fresh_name, Cmd, CmdKind, Constraint, Expr, ExprKind, Name, Priority, Type, VarSet,
};

/// Terms that admit `[v/x]`.
pub trait SubstExpr: Sized {
    fn subst_with(&self, s: &ExprSubst<'_>) -> Self;
}

/// Terms that admit `[rho/pi]`.
pub trait SubstPrio: Sized {
    fn subst_prio_with(&self, s: &PrioSubst<'_>) -> Self;
}

/// `[v/x]target`.
pub fn subst_expr<T: SubstExpr>(v: &Expr, x: &Name, target: &T) -> T {
    target.subst_with(&ExprSubst { v, x })
}

/// `[rho/pi]target`.
pub fn subst_prio<T: SubstPrio>(rho: &Priority, pi: &Name, target: &T) -> T {
    target.subst_prio_with(&PrioSubst { rho, pi })
}

pub struct ExprSubst<'a> {
    v: &'a Expr,
    x: &'a Name,
}

pub struct PrioSubst<'a> {
    rho: &'a Priority,
    pi: &'a Name,
}

fn rename_var<T: SubstExpr>(from: &Name, to: &Name, t: &T) -> T {
    subst_expr(&Expr::var_n(to), from, t)
}

fn rename_pvar<T: SubstPrio>(from: &Name, to: &Name, t: &T) -> T {
    subst_prio(&Priority::Var(to.clone()), from, t)
}

fn avoid(sets: &[&VarSet], extra: &[&Name]) -> impl Fn(&Name) -> bool {
    let mut all: BTreeSet<Name> = sets.iter().flat_map(|s| s.iter().cloned()).collect();
    all.extend(extra.iter().map(|n| (*n).clone()));
    move |n| all.contains(n)
}

impl ExprSubst<'_> {
    /// Renames binder `y` in `body` when it would capture a free variable of `v`.
    fn open(&self, y: &Name, body: &Expr) -> (Name, Expr) {
        if self.v.fv().contains(y) {
            let y2 = fresh_name(y, avoid(&[self.v.fv(), body.fv()], &[self.x]));
            let b2 = rename_var(y, &y2, body);
            (y2, b2)
        } else {
            (y.clone(), body.clone())
        }
    }

    fn open_cmd(&self, y: &Name, body: &Cmd) -> (Name, Cmd) {
        if self.v.fv().contains(y) {
            let y2 = fresh_name(y, avoid(&[self.v.fv(), body.fv()], &[self.x]));
            let b2 = rename_var(y, &y2, body);
            (y2, b2)
        } else {
            (y.clone(), body.clone())
        }
    }

    /// Substitutes under a term binder, respecting shadowing.
    fn under(&self, y: &Name, body: &Expr) -> (Name, Expr) {
        if y == self.x {
            return (y.clone(), body.clone());
        }
        if !body.has_free_var(self.x) {
            return (y.clone(), body.clone());
        }
        let (y2, b2) = self.open(y, body);
        (y2, b2.subst_with(self))
    }
}

impl SubstExpr for Expr {
    fn subst_with(&self, s: &ExprSubst<'_>) -> Expr {
        use ExprKind::*;
        if !self.has_free_var(s.x) {
            return self.clone();
        }
        let k = match self.kind() {
            Var(_) => return s.v.clone(),
            Unit | Num(_) | Tid(_) | Input => unreachable!("no free variables"),
            Lam(y, t, e) => {
                let (y, e) = s.under(y, e);
                Lam(y, t.clone(), e)
            }
            Fix(y, t, e) => {
                let (y, e) = s.under(y, e);
                Fix(y, t.clone(), e)
            }
            PairV(a, b) => PairV(a.subst_with(s), b.subst_with(s)),
            App(a, b) => App(a.subst_with(s), b.subst_with(s)),
            Pair(a, b) => Pair(a.subst_with(s), b.subst_with(s)),
            InjV(side, t, e) => InjV(*side, t.clone(), e.subst_with(s)),
            Inj(side, t, e) => Inj(*side, t.clone(), e.subst_with(s)),
            CmdV(p, m) => CmdV(p.clone(), m.subst_with(s)),
            PLam(pv, c, e) => {
                if s.v.fpv().contains(pv) {
                    let mut cv = BTreeSet::new();
                    c.free_prio_vars(&mut cv);
                    let taken = avoid(&[s.v.fpv(), e.fpv()], &[]);
                    let pv2 = fresh_name(pv, |n| taken(n) || cv.contains(n));
                    let c2 = rename_pvar(pv, &pv2, c);
                    let e2 = rename_pvar(pv, &pv2, e);
                    PLam(pv2, c2, e2.subst_with(s))
                } else {
                    PLam(pv.clone(), c.clone(), e.subst_with(s))
                }
            }
            Let(y, e1, e2) => {
                let e1 = e1.subst_with(s);
                let (y, e2) = s.under(y, e2);
                Let(y, e1, e2)
            }
            Ifz(v, e1, y, e2) => {
                let (y, e2) = s.under(y, e2);
                Ifz(v.subst_with(s), e1.subst_with(s), y, e2)
            }
            Fst(e) => Fst(e.subst_with(s)),
            Snd(e) => Snd(e.subst_with(s)),
            Output(e) => Output(e.subst_with(s)),
            Case(v, y, e1, z, e2) => {
                let (y, e1) = s.under(y, e1);
                let (z, e2) = s.under(z, e2);
                Case(v.subst_with(s), y, e1, z, e2)
            }
            PApp(e, p) => PApp(e.subst_with(s), p.clone()),
        };
        Expr::new(k)
    }
}

impl SubstExpr for Cmd {
    fn subst_with(&self, s: &ExprSubst<'_>) -> Cmd {
        if !self.has_free_var(s.x) {
            return self.clone();
        }
        let k = match self.kind() {
            CmdKind::Bind(e, y, m) => {
                let e = e.subst_with(s);
                if y == s.x || !m.has_free_var(s.x) {
                    CmdKind::Bind(e, y.clone(), m.clone())
                } else {
                    let (y, m) = s.open_cmd(y, m);
                    CmdKind::Bind(e, y, m.subst_with(s))
                }
            }
            CmdKind::Spawn(p, t, m) => CmdKind::Spawn(p.clone(), t.clone(), m.subst_with(s)),
            CmdKind::Sync(e) => CmdKind::Sync(e.subst_with(s)),
            CmdKind::Ret(e) => CmdKind::Ret(e.subst_with(s)),
        };
        Cmd::new(k)
    }
}

impl PrioSubst<'_> {
    fn captures(&self, binder: &Name) -> bool {
        self.rho.as_var() == Some(binder)
    }
}

impl SubstPrio for Priority {
    fn subst_prio_with(&self, s: &PrioSubst<'_>) -> Priority {
        match self {
            Priority::Var(n) if n == s.pi => s.rho.clone(),
            _ => self.clone(),
        }
    }
}

impl SubstPrio for Constraint {
    fn subst_prio_with(&self, s: &PrioSubst<'_>) -> Constraint {
        Constraint {
            conjuncts: self
                .conjuncts
                .iter()
                .map(|(a, b)| (a.subst_prio_with(s), b.subst_prio_with(s)))
                .collect(),
        }
    }
}

impl SubstPrio for Type {
    fn subst_prio_with(&self, s: &PrioSubst<'_>) -> Type {
        match self {
            Type::Unit | Type::Nat => self.clone(),
            Type::Arrow(a, b) => Type::arrow(a.subst_prio_with(s), b.subst_prio_with(s)),
            Type::Prod(a, b) => Type::prod(a.subst_prio_with(s), b.subst_prio_with(s)),
            Type::Sum(a, b) => Type::sum(a.subst_prio_with(s), b.subst_prio_with(s)),
            Type::Thread(a, p) => Type::thread(a.subst_prio_with(s), p.subst_prio_with(s)),
            Type::Cmd(a, p) => Type::cmd(a.subst_prio_with(s), p.subst_prio_with(s)),
            Type::Forall(v, c, body) => {
                if v == s.pi {
                    return self.clone();
                }
                if s.captures(v) {
                    let mut taken = BTreeSet::new();
                    c.free_prio_vars(&mut taken);
                    body.free_prio_vars(&mut taken);
                    taken.insert(s.pi.clone());
                    let v2 = fresh_name(v, |n| taken.contains(n) || s.captures(n));
                    let c2 = rename_pvar(v, &v2, c);
                    let b2 = rename_pvar(v, &v2, body.as_ref());
                    Type::forall(v2, c2.subst_prio_with(s), b2.subst_prio_with(s))
                } else {
                    Type::forall(v.clone(), c.subst_prio_with(s), body.subst_prio_with(s))
                }
            }
        }
    }
}

impl SubstPrio for Expr {
    fn subst_prio_with(&self, s: &PrioSubst<'_>) -> Expr {
        use ExprKind::*;
        if !self.has_free_prio_var(s.pi) {
            return self.clone();
        }
        let k = match self.kind() {
            Var(_) | Unit | Num(_) | Tid(_) | Input => unreachable!("no free priority variables"),
            Lam(y, t, e) => Lam(y.clone(), t.subst_prio_with(s), e.subst_prio_with(s)),
            Fix(y, t, e) => Fix(y.clone(), t.subst_prio_with(s), e.subst_prio_with(s)),
            PairV(a, b) => PairV(a.subst_prio_with(s), b.subst_prio_with(s)),
            App(a, b) => App(a.subst_prio_with(s), b.subst_prio_with(s)),
            Pair(a, b) => Pair(a.subst_prio_with(s), b.subst_prio_with(s)),
            InjV(side, t, e) => InjV(*side, t.subst_prio_with(s), e.subst_prio_with(s)),
            Inj(side, t, e) => Inj(*side, t.subst_prio_with(s), e.subst_prio_with(s)),
            CmdV(p, m) => CmdV(p.subst_prio_with(s), m.subst_prio_with(s)),
            PLam(v, c, e) => {
                if s.captures(v) {
                    let mut cv = BTreeSet::new();
                    c.free_prio_vars(&mut cv);
                    let taken = avoid(&[e.fpv()], &[s.pi, v]);
                    let v2 = fresh_name(v, |n| taken(n) || cv.contains(n));
                    let c2 = rename_pvar(v, &v2, c);
                    let e2 = rename_pvar(v, &v2, e);
                    PLam(v2, c2.subst_prio_with(s), e2.subst_prio_with(s))
                } else {
                    PLam(v.clone(), c.subst_prio_with(s), e.subst_prio_with(s))
                }
            }
            Let(y, e1, e2) => Let(y.clone(), e1.subst_prio_with(s), e2.subst_prio_with(s)),
            Ifz(v, e1, y, e2) => Ifz(
                v.subst_prio_with(s),
                e1.subst_prio_with(s),
                y.clone(),
                e2.subst_prio_with(s),
            ),
            Fst(e) => Fst(e.subst_prio_with(s)),
            Snd(e) => Snd(e.subst_prio_with(s)),
            Output(e) => Output(e.subst_prio_with(s)),
            Case(v, y, e1, z, e2) => Case(
                v.subst_prio_with(s),
                y.clone(),
                e1.subst_prio_with(s),
                z.clone(),
                e2.subst_prio_with(s),
            ),
            PApp(e, p) => PApp(e.subst_prio_with(s), p.subst_prio_with(s)),
        };
        Expr::new(k)
    }
}

impl SubstPrio for Cmd {
    fn subst_prio_with(&self, s: &PrioSubst<'_>) -> Cmd {
        if !self.has_free_prio_var(s.pi) {
            return self.clone();
        }
        let k = match self.kind() {
            CmdKind::Bind(e, y, m) => {
                CmdKind::Bind(e.subst_prio_with(s), y.clone(), m.subst_prio_with(s))
            }
            CmdKind::Spawn(p, t, m) => CmdKind::Spawn(
                p.subst_prio_with(s),
                t.subst_prio_with(s),
                m.subst_prio_with(s),
            ),
            CmdKind::Sync(e) => CmdKind::Sync(e.subst_prio_with(s)),
            CmdKind::Ret(e) => CmdKind::Ret(e.subst_prio_with(s)),
        };
        Cmd::new(k)
    }
}
