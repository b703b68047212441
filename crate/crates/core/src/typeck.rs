//! Static semantics of the core calculus: expressions, commands, thread pools
//! and actions.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::alpha::alpha_eq_type;
use crate::ast::{Cmd, CmdKind, Constraint, Expr, ExprKind, Name, Priority, Side, Type};
use crate::eval::Action;
use crate::prio::{first_unentailed, EntailContext, PartialOrder, PrioError};
use crate::subst::subst_prio;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("type mismatch: expected {expected}, found {found}")]
    TypeMismatch { expected: String, found: String },
    #[error("unbound variable {0}")]
    UnboundVariable(Name),
    #[error("unknown thread {0}")]
    UnknownThread(Name),
    #[error("unknown priority {0}")]
    UnknownPriority(Name),
    #[error("constraint violated: {lhs} <= {rhs}")]
    ConstraintViolation { lhs: Priority, rhs: Priority },
    #[error("priority inversion: sync at {at} on a thread at {target}")]
    PriorityInversion { at: Priority, target: Priority },
    #[error("thread {0} is introduced twice")]
    DuplicateThread(Name),
    #[error("malformed term: {0}")]
    Malformed(String),
}

impl From<PrioError> for TypeError {
    fn from(e: PrioError) -> Self {
        match e {
            PrioError::UnknownPriority(n) => TypeError::UnknownPriority(n),
            other => TypeError::Malformed(other.to_string()),
        }
    }
}

fn mismatch(expected: impl ToString, found: &Type) -> TypeError {
    TypeError::TypeMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

/// Live thread names with their return types and priorities.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Signature {
    entries: BTreeMap<Name, (Type, Priority)>,
}

impl Signature {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: Name, ty: Type, prio: Priority) {
        self.entries.insert(a, (ty, prio));
    }

    pub fn get(&self, a: &Name) -> Option<&(Type, Priority)> {
        self.entries.get(a)
    }

    pub fn contains(&self, a: &Name) -> bool {
        self.entries.contains_key(a)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &(Type, Priority))> {
        self.entries.iter()
    }

    pub fn remove(&mut self, a: &Name) -> Option<(Type, Priority)> {
        self.entries.remove(a)
    }

    /// Union; fails on a shared name.
    pub fn disjoint_union(&self, other: &Signature) -> Result<Signature, TypeError> {
        let mut out = self.clone();
        for (a, e) in other.iter() {
            if out.entries.insert(a.clone(), e.clone()).is_some() {
                return Err(TypeError::DuplicateThread(a.clone()));
            }
        }
        Ok(out)
    }

    /// Union where entries of `other` replace equal names.
    pub fn extended(&self, other: &Signature) -> Signature {
        let mut out = self.clone();
        out.entries
            .extend(other.entries.iter().map(|(a, e)| (a.clone(), e.clone())));
        out
    }
}

/// Term-variable typings and priority hypotheses.
#[derive(Clone, Debug, Default)]
pub struct TypeContext {
    vars: Vec<(Name, Type)>,
    pub entail: EntailContext,
}

impl TypeContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_entail(entail: EntailContext) -> Self {
        TypeContext {
            vars: Vec::new(),
            entail,
        }
    }

    pub fn push(&mut self, x: Name, t: Type) {
        self.vars.push((x, t));
    }

    pub fn pop(&mut self) {
        self.vars.pop();
    }

    pub fn lookup(&self, x: &Name) -> Option<&Type> {
        self.vars.iter().rev().find(|(y, _)| y == x).map(|(_, t)| t)
    }
}

/// A type-checking session over one store and signature. Types of closed
/// subterms are memoized by node identity, which keeps re-checking runtime
/// states cheap when large values are shared between many positions.
pub struct Checker<'a> {
    store: &'a PartialOrder,
    sig: &'a Signature,
    memo: RefCell<HashMap<usize, (Expr, Type)>>,
}

impl<'a> Checker<'a> {
    pub fn new(store: &'a PartialOrder, sig: &'a Signature) -> Self {
        Checker {
            store,
            sig,
            memo: RefCell::new(HashMap::new()),
        }
    }

    fn prio_ok(&self, ctx: &TypeContext, p: &Priority) -> Result<(), TypeError> {
        let known = match p {
            Priority::Const(n) => self.store.contains(n) || ctx.entail.prio_vars.contains(n),
            Priority::Var(n) => ctx.entail.prio_vars.contains(n),
        };
        if known {
            Ok(())
        } else {
            Err(TypeError::UnknownPriority(p.name().clone()))
        }
    }

    fn constraint_ok(&self, ctx: &TypeContext, c: &Constraint) -> Result<(), TypeError> {
        c.conjuncts.iter().try_for_each(|(a, b)| {
            self.prio_ok(ctx, a)?;
            self.prio_ok(ctx, b)
        })
    }

    /// Checks that all priorities mentioned by a type are in scope.
    pub fn type_ok(&self, ctx: &mut TypeContext, t: &Type) -> Result<(), TypeError> {
        match t {
            Type::Unit | Type::Nat => Ok(()),
            Type::Arrow(a, b) | Type::Prod(a, b) | Type::Sum(a, b) => {
                self.type_ok(ctx, a)?;
                self.type_ok(ctx, b)
            }
            Type::Thread(a, p) | Type::Cmd(a, p) => {
                self.prio_ok(ctx, p)?;
                self.type_ok(ctx, a)
            }
            Type::Forall(v, c, body) => self.with_prio_var(ctx, v, c, |s, ctx| {
                s.constraint_ok(ctx, c)?;
                s.type_ok(ctx, body)
            }),
        }
    }

    fn with_prio_var<T>(
        &self,
        ctx: &mut TypeContext,
        v: &Name,
        c: &Constraint,
        f: impl FnOnce(&Self, &mut TypeContext) -> Result<T, TypeError>,
    ) -> Result<T, TypeError> {
        let saved = ctx.entail.clone();
        ctx.entail.with_var(v);
        ctx.entail.assume(c);
        let r = f(self, ctx);
        ctx.entail = saved;
        r
    }

    fn with_var<T>(
        &self,
        ctx: &mut TypeContext,
        x: &Name,
        t: Type,
        f: impl FnOnce(&Self, &mut TypeContext) -> Result<T, TypeError>,
    ) -> Result<T, TypeError> {
        ctx.push(x.clone(), t);
        let r = f(self, ctx);
        ctx.pop();
        r
    }

    fn expect_eq(&self, expected: &Type, found: &Type) -> Result<(), TypeError> {
        if alpha_eq_type(expected, found) {
            Ok(())
        } else {
            Err(mismatch(expected, found))
        }
    }

    pub fn expr(&self, ctx: &mut TypeContext, e: &Expr) -> Result<Type, TypeError> {
        let memo_key = e.is_closed().then(|| e.addr());
        if let Some(k) = memo_key {
            if let Some((_, t)) = self.memo.borrow().get(&k) {
                return Ok(t.clone());
            }
        }
        let t = self.expr_uncached(ctx, e)?;
        if let Some(k) = memo_key {
            // The stored clone keeps the node alive so its address stays unique.
            self.memo.borrow_mut().insert(k, (e.clone(), t.clone()));
        }
        Ok(t)
    }

    fn expr_uncached(&self, ctx: &mut TypeContext, e: &Expr) -> Result<Type, TypeError> {
        use ExprKind::*;
        match e.kind() {
            Var(x) => ctx
                .lookup(x)
                .cloned()
                .ok_or_else(|| TypeError::UnboundVariable(x.clone())),
            Unit => Ok(Type::Unit),
            Num(_) => Ok(Type::Nat),
            Input => Ok(Type::Nat),
            Lam(x, t1, body) => {
                self.type_ok(ctx, t1)?;
                let t2 = self.with_var(ctx, x, t1.clone(), |s, ctx| s.expr(ctx, body))?;
                Ok(Type::arrow(t1.clone(), t2))
            }
            PairV(a, b) | Pair(a, b) => {
                if matches!(e.kind(), PairV(..)) && !(a.is_value() && b.is_value()) {
                    return Err(TypeError::Malformed(format!(
                        "pair value with non-value component: {e}"
                    )));
                }
                let ta = self.expr(ctx, a)?;
                let tb = self.expr(ctx, b)?;
                Ok(Type::prod(ta, tb))
            }
            InjV(side, t, v) | Inj(side, t, v) => {
                if matches!(e.kind(), InjV(..)) && !v.is_value() {
                    return Err(TypeError::Malformed(format!(
                        "injection value with non-value payload: {e}"
                    )));
                }
                self.type_ok(ctx, t)?;
                let Type::Sum(l, r) = t else {
                    return Err(mismatch("a sum type", t));
                };
                let tv = self.expr(ctx, v)?;
                self.expect_eq(if *side == Side::Left { l } else { r }, &tv)?;
                Ok(t.clone())
            }
            Tid(a) => {
                let (t, p) = self
                    .sig
                    .get(a)
                    .ok_or_else(|| TypeError::UnknownThread(a.clone()))?;
                Ok(Type::thread(t.clone(), p.clone()))
            }
            CmdV(p, m) => {
                self.prio_ok(ctx, p)?;
                let t = self.cmd(ctx, m, p)?;
                Ok(Type::cmd(t, p.clone()))
            }
            PLam(v, c, body) => {
                let t = self.with_prio_var(ctx, v, c, |s, ctx| {
                    s.constraint_ok(ctx, c)?;
                    s.expr(ctx, body)
                })?;
                Ok(Type::forall(v.clone(), c.clone(), t))
            }
            Let(x, e1, e2) => {
                let t1 = self.expr(ctx, e1)?;
                self.with_var(ctx, x, t1, |s, ctx| s.expr(ctx, e2))
            }
            Ifz(v, e1, x, e2) => {
                let tv = self.expr(ctx, v)?;
                self.expect_eq(&Type::Nat, &tv)?;
                let t1 = self.expr(ctx, e1)?;
                let t2 = self.with_var(ctx, x, Type::Nat, |s, ctx| s.expr(ctx, e2))?;
                self.expect_eq(&t1, &t2)?;
                Ok(t1)
            }
            App(f, a) => {
                let tf = self.expr(ctx, f)?;
                let Type::Arrow(dom, cod) = tf else {
                    return Err(mismatch("a function type", &tf));
                };
                let ta = self.expr(ctx, a)?;
                self.expect_eq(&dom, &ta)?;
                Ok(*cod)
            }
            Fst(v) | Snd(v) => {
                let t = self.expr(ctx, v)?;
                let Type::Prod(l, r) = t else {
                    return Err(mismatch("a product type", &t));
                };
                Ok(if matches!(e.kind(), Fst(_)) { *l } else { *r })
            }
            Case(v, x, e1, y, e2) => {
                let t = self.expr(ctx, v)?;
                let Type::Sum(l, r) = t else {
                    return Err(mismatch("a sum type", &t));
                };
                let t1 = self.with_var(ctx, x, *l, |s, ctx| s.expr(ctx, e1))?;
                let t2 = self.with_var(ctx, y, *r, |s, ctx| s.expr(ctx, e2))?;
                self.expect_eq(&t1, &t2)?;
                Ok(t1)
            }
            Output(v) => {
                let t = self.expr(ctx, v)?;
                self.expect_eq(&Type::Nat, &t)?;
                Ok(Type::Unit)
            }
            PApp(f, rho) => {
                self.prio_ok(ctx, rho)?;
                let tf = self.expr(ctx, f)?;
                let Type::Forall(pi, c, body) = tf else {
                    return Err(mismatch("a priority-polymorphic type", &tf));
                };
                let inst = subst_prio(rho, &pi, &c);
                if let Some((lhs, rhs)) = first_unentailed(self.store, &ctx.entail, &inst)? {
                    return Err(TypeError::ConstraintViolation {
                        lhs: lhs.clone(),
                        rhs: rhs.clone(),
                    });
                }
                Ok(subst_prio(rho, &pi, body.as_ref()))
            }
            Fix(x, t, body) => {
                self.type_ok(ctx, t)?;
                let tb = self.with_var(ctx, x, t.clone(), |s, ctx| s.expr(ctx, body))?;
                self.expect_eq(t, &tb)?;
                Ok(t.clone())
            }
        }
    }

    pub fn cmd(&self, ctx: &mut TypeContext, m: &Cmd, at: &Priority) -> Result<Type, TypeError> {
        // Long bind chains are walked iteratively.
        let mut pushed = 0;
        let mut cur = m.clone();
        let result = loop {
            match cur.kind() {
                CmdKind::Bind(e, x, rest) => {
                    let te = match self.expr(ctx, e) {
                        Ok(t) => t,
                        Err(err) => break Err(err),
                    };
                    match te {
                        Type::Cmd(t, p) if p == *at => {
                            ctx.push(x.clone(), *t);
                            pushed += 1;
                            cur = rest.clone();
                        }
                        other => {
                            break Err(mismatch(
                                Type::cmd(Type::Unit, at.clone())
                                    .to_string()
                                    .replace("unit", "_"),
                                &other,
                            ))
                        }
                    }
                }
                CmdKind::Spawn(p, t, body) => {
                    break (|| {
                        self.prio_ok(ctx, p)?;
                        self.type_ok(ctx, t)?;
                        let tb = self.cmd(ctx, body, p)?;
                        self.expect_eq(t, &tb)?;
                        Ok(Type::thread(t.clone(), p.clone()))
                    })();
                }
                CmdKind::Sync(e) => {
                    break (|| {
                        let te = self.expr(ctx, e)?;
                        let Type::Thread(t, target) = te else {
                            return Err(mismatch("a thread type", &te));
                        };
                        if !crate::prio::entails_le(self.store, &ctx.entail, at, &target)? {
                            return Err(TypeError::PriorityInversion {
                                at: at.clone(),
                                target,
                            });
                        }
                        Ok(*t)
                    })();
                }
                CmdKind::Ret(e) => break self.expr(ctx, e),
            }
        };
        for _ in 0..pushed {
            ctx.pop();
        }
        result
    }
}

pub fn type_expr(
    store: &PartialOrder,
    sig: &Signature,
    ctx: &mut TypeContext,
    e: &Expr,
) -> Result<Type, TypeError> {
    Checker::new(store, sig).expr(ctx, e)
}

pub fn type_cmd(
    store: &PartialOrder,
    sig: &Signature,
    ctx: &mut TypeContext,
    m: &Cmd,
    at: &Priority,
) -> Result<Type, TypeError> {
    Checker::new(store, sig).cmd(ctx, m, at)
}

/// Thread-pool terms, with threads annotated by their declared return type.
#[derive(Clone, Debug)]
pub enum PoolTerm {
    Empty,
    Thread {
        id: Name,
        prio: Priority,
        ret: Type,
        cmd: Cmd,
    },
    Concat(Box<PoolTerm>, Box<PoolTerm>),
    Extend(Signature, Box<PoolTerm>),
}

impl PoolTerm {
    /// Balanced concatenation of threads.
    pub fn concat_all(mut items: Vec<PoolTerm>) -> PoolTerm {
        match items.len() {
            0 => PoolTerm::Empty,
            1 => items.pop().unwrap(),
            n => {
                let right = items.split_off(n / 2);
                PoolTerm::Concat(
                    Box::new(Self::concat_all(items)),
                    Box::new(Self::concat_all(right)),
                )
            }
        }
    }

    /// The signature a pool introduces, read off its annotations.
    fn introduced(&self) -> Result<Signature, TypeError> {
        match self {
            PoolTerm::Empty => Ok(Signature::new()),
            PoolTerm::Thread { id, prio, ret, .. } => {
                let mut s = Signature::new();
                s.insert(id.clone(), ret.clone(), prio.clone());
                Ok(s)
            }
            PoolTerm::Concat(a, b) => a.introduced()?.disjoint_union(&b.introduced()?),
            PoolTerm::Extend(bound, inner) => {
                let mut s = inner.introduced()?;
                for (a, _) in bound.iter() {
                    s.remove(a);
                }
                Ok(s)
            }
        }
    }
}

fn check_pool(
    store: &PartialOrder,
    ambient: &Signature,
    pool: &PoolTerm,
) -> Result<Signature, TypeError> {
    match pool {
        PoolTerm::Empty => Ok(Signature::new()),
        PoolTerm::Thread { id, prio, ret, cmd } => {
            if ambient.contains(id) {
                return Err(TypeError::DuplicateThread(id.clone()));
            }
            if !prio.is_const() {
                return Err(TypeError::Malformed(format!(
                    "thread {id} runs at a priority variable"
                )));
            }
            let t = type_cmd(store, ambient, &mut TypeContext::new(), cmd, prio)?;
            if !alpha_eq_type(ret, &t) {
                return Err(mismatch(ret, &t));
            }
            pool.introduced()
        }
        PoolTerm::Concat(a, b) => {
            let sa = a.introduced()?;
            let sb = b.introduced()?;
            let both = sa.disjoint_union(&sb)?;
            check_pool(store, &ambient.extended(&sb), a)?;
            check_pool(store, &ambient.extended(&sa), b)?;
            Ok(both)
        }
        PoolTerm::Extend(bound, inner) => {
            for (a, _) in bound.iter() {
                if ambient.contains(a) {
                    return Err(TypeError::DuplicateThread(a.clone()));
                }
            }
            let mut s = check_pool(store, ambient, inner)?;
            for (a, (t, p)) in bound.iter() {
                match s.remove(a) {
                    Some((t2, p2)) if alpha_eq_type(t, &t2) && *p == p2 => {}
                    Some((t2, _)) => return Err(mismatch(t, &t2)),
                    None => return Err(TypeError::UnknownThread(a.clone())),
                }
            }
            Ok(s)
        }
    }
}

/// Types a thread pool under an ambient signature and returns the signature of
/// the threads it introduces.
pub fn type_threadpool(
    store: &PartialOrder,
    ambient: &Signature,
    pool: &PoolTerm,
) -> Result<Signature, TypeError> {
    check_pool(store, ambient, pool)
}

/// Checks that the value carried by an action has the payload type of its thread.
pub fn type_action(
    store: &PartialOrder,
    sig: &Signature,
    action: &Action,
) -> Result<(), TypeError> {
    let (b, v) = match action {
        Action::Silent => return Ok(()),
        Action::SyncFrom(b, v) | Action::RetOf(b, v) => (b, v),
    };
    let (t, _) = sig
        .get(b)
        .ok_or_else(|| TypeError::UnknownThread(b.clone()))?;
    if !v.is_value() {
        return Err(TypeError::Malformed(format!(
            "action carries a non-value {v}"
        )));
    }
    let tv = type_expr(store, sig, &mut TypeContext::new(), v)?;
    if alpha_eq_type(t, &tv) {
        Ok(())
    } else {
        Err(mismatch(t, &tv))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(s: &str) -> Priority {
        Priority::constant(s)
    }

    fn n(s: &str) -> Name {
        Name::new(s)
    }

    fn check(store: &PartialOrder, sig: &Signature, e: &Expr) -> Result<Type, TypeError> {
        type_expr(store, sig, &mut TypeContext::new(), e)
    }

    #[test]
    fn identity_function() {
        let s = PartialOrder::new();
        let id = Expr::lam("x", Type::Nat, Expr::var("x"));
        assert_eq!(
            check(&s, &Signature::new(), &id).unwrap(),
            Type::arrow(Type::Nat, Type::Nat)
        );
    }

    #[test]
    fn thread_ids_come_from_the_signature() {
        let s = PartialOrder::from_decls(&["alert"], &[]).unwrap();
        let mut sig = Signature::new();
        sig.insert(n("a"), Type::Nat, c("alert"));
        assert_eq!(
            check(&s, &sig, &Expr::tid("a")).unwrap(),
            Type::thread(Type::Nat, c("alert"))
        );
        assert_eq!(
            check(&s, &Signature::new(), &Expr::tid("a")),
            Err(TypeError::UnknownThread(n("a")))
        );
    }

    fn display_example() -> (PartialOrder, Expr) {
        let s = PartialOrder::from_decls(
            &["loop_p", "display_p", "sort_p"],
            &[("sort_p", "loop_p"), ("sort_p", "display_p")],
        )
        .unwrap();
        let body = Expr::cmd(Priority::var("p"), Cmd::ret(Expr::unit()));
        let f = Expr::plam(
            "p",
            Constraint::le(c("display_p"), Priority::var("p")),
            body,
        );
        (s, f)
    }

    #[test]
    fn instantiation_checks_the_constraint() {
        let (s, f) = display_example();
        let bad = Expr::papp(f.clone(), c("sort_p"));
        assert_eq!(
            check(&s, &Signature::new(), &bad),
            Err(TypeError::ConstraintViolation {
                lhs: c("display_p"),
                rhs: c("sort_p")
            })
        );
        let good = Expr::papp(f, c("display_p"));
        assert_eq!(
            check(&s, &Signature::new(), &good).unwrap(),
            Type::cmd(Type::Unit, c("display_p"))
        );
    }

    #[test]
    fn spawn_is_allowed_at_any_priority() {
        let s =
            PartialOrder::from_decls(&["alert", "background"], &[("background", "alert")]).unwrap();
        let m = Cmd::spawn(c("background"), Type::Nat, Cmd::ret(Expr::num(0)));
        let t = type_cmd(
            &s,
            &Signature::new(),
            &mut TypeContext::new(),
            &m,
            &c("alert"),
        )
        .unwrap();
        assert_eq!(t, Type::thread(Type::Nat, c("background")));
    }

    #[test]
    fn sync_on_lower_priority_is_an_inversion() {
        let s = PartialOrder::from_decls(&["loop_p", "sort_p"], &[("sort_p", "loop_p")]).unwrap();
        let mut sig = Signature::new();
        sig.insert(n("t"), Type::Nat, c("sort_p"));
        let m = Cmd::sync(Expr::tid("t"));
        let err = type_cmd(&s, &sig, &mut TypeContext::new(), &m, &c("loop_p")).unwrap_err();
        assert_eq!(
            err,
            TypeError::PriorityInversion {
                at: c("loop_p"),
                target: c("sort_p")
            }
        );
        let mut sig2 = Signature::new();
        sig2.insert(n("t"), Type::Nat, c("loop_p"));
        assert!(type_cmd(&s, &sig2, &mut TypeContext::new(), &m, &c("bot")).is_ok());
    }

    #[test]
    fn bind_requires_matching_priority() {
        let s = PartialOrder::from_decls(&["a"], &[]).unwrap();
        let m = Cmd::bind(
            Expr::cmd(c("a"), Cmd::ret(Expr::num(1))),
            "x",
            Cmd::ret(Expr::var("x")),
        );
        assert!(type_cmd(&s, &Signature::new(), &mut TypeContext::new(), &m, &c("a")).is_ok());
        assert!(matches!(
            type_cmd(
                &s,
                &Signature::new(),
                &mut TypeContext::new(),
                &m,
                &c("bot")
            ),
            Err(TypeError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn pool_rules() {
        let s = PartialOrder::from_decls(&["r"], &[]).unwrap();
        assert!(type_threadpool(&s, &Signature::new(), &PoolTerm::Empty)
            .unwrap()
            .is_empty());
        let one = PoolTerm::Thread {
            id: n("a"),
            prio: c("r"),
            ret: Type::Nat,
            cmd: Cmd::ret(Expr::num(5)),
        };
        let sig = type_threadpool(&s, &Signature::new(), &one).unwrap();
        assert_eq!(sig.get(&n("a")), Some(&(Type::Nat, c("r"))));
    }

    #[test]
    fn concat_allows_mutual_references() {
        let s = PartialOrder::from_decls(&["r"], &[]).unwrap();
        let a = PoolTerm::Thread {
            id: n("a"),
            prio: c("r"),
            ret: Type::thread(Type::Unit, c("r")),
            cmd: Cmd::ret(Expr::tid("b")),
        };
        let b = PoolTerm::Thread {
            id: n("b"),
            prio: c("r"),
            ret: Type::Unit,
            cmd: Cmd::bind(
                Expr::cmd(c("r"), Cmd::ret(Expr::tid("a"))),
                "x",
                Cmd::ret(Expr::unit()),
            ),
        };
        let pool = PoolTerm::Concat(Box::new(a.clone()), Box::new(b.clone()));
        let sig = type_threadpool(&s, &Signature::new(), &pool).unwrap();
        assert_eq!(sig.len(), 2);
        let mut bound = Signature::new();
        bound.insert(n("a"), Type::thread(Type::Unit, c("r")), c("r"));
        bound.insert(n("b"), Type::Unit, c("r"));
        let closed = PoolTerm::Extend(bound, Box::new(pool));
        assert!(type_threadpool(&s, &Signature::new(), &closed)
            .unwrap()
            .is_empty());
        let dup = PoolTerm::Concat(Box::new(a.clone()), Box::new(a));
        assert_eq!(
            type_threadpool(&s, &Signature::new(), &dup),
            Err(TypeError::DuplicateThread(n("a")))
        );
    }

    #[test]
    fn action_typing() {
        let s = PartialOrder::from_decls(&["r"], &[]).unwrap();
        let mut sig = Signature::new();
        sig.insert(n("b"), Type::Nat, c("r"));
        assert!(type_action(&s, &sig, &Action::Silent).is_ok());
        assert!(type_action(&s, &sig, &Action::RetOf(n("b"), Expr::num(5))).is_ok());
        assert!(matches!(
            type_action(&s, &sig, &Action::SyncFrom(n("b"), Expr::unit())),
            Err(TypeError::TypeMismatch { .. })
        ));
        assert_eq!(
            type_action(&s, &sig, &Action::SyncFrom(n("z"), Expr::unit())),
            Err(TypeError::UnknownThread(n("z")))
        );
    }
}
