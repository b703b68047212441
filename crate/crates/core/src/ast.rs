//! Core calculus syntax.
//!
//! Expressions and commands are immutable, reference-counted trees. Every node
//! caches the sets of its free term variables and free priority variables, so
//! substitution can skip closed subtrees and share them between terms.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::Zero;

/// An identifier: variables, priority names and thread names.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Name(Arc<str>);

impl Name {
    pub fn new(s: &str) -> Self {
        Name(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Name {
    fn from(s: &str) -> Self {
        Name::new(s)
    }
}

impl From<String> for Name {
    fn from(s: String) -> Self {
        Name(Arc::from(s))
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// The name of the least priority.
pub const BOT: &str = "bot";

#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Priority {
    Const(Name),
    Var(Name),
}

impl Priority {
    pub fn bot() -> Self {
        Priority::Const(Name::new(BOT))
    }

    pub fn constant(s: &str) -> Self {
        Priority::Const(Name::new(s))
    }

    pub fn var(s: &str) -> Self {
        Priority::Var(Name::new(s))
    }

    pub fn name(&self) -> &Name {
        match self {
            Priority::Const(n) | Priority::Var(n) => n,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self, Priority::Const(_))
    }

    pub fn as_var(&self) -> Option<&Name> {
        match self {
            Priority::Var(n) => Some(n),
            Priority::Const(_) => None,
        }
    }
}

/// A conjunction of `lhs <= rhs` facts. Never empty.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Constraint {
    pub conjuncts: Vec<(Priority, Priority)>,
}

impl Constraint {
    pub fn new(conjuncts: Vec<(Priority, Priority)>) -> Self {
        assert!(
            !conjuncts.is_empty(),
            "constraints have at least one conjunct"
        );
        Constraint { conjuncts }
    }

    pub fn le(lhs: Priority, rhs: Priority) -> Self {
        Constraint {
            conjuncts: vec![(lhs, rhs)],
        }
    }

    pub fn free_prio_vars(&self, out: &mut BTreeSet<Name>) {
        for (a, b) in &self.conjuncts {
            for p in [a, b] {
                if let Priority::Var(n) = p {
                    out.insert(n.clone());
                }
            }
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Type {
    Unit,
    Nat,
    Arrow(Box<Type>, Box<Type>),
    Prod(Box<Type>, Box<Type>),
    Sum(Box<Type>, Box<Type>),
    Thread(Box<Type>, Priority),
    Cmd(Box<Type>, Priority),
    Forall(Name, Constraint, Box<Type>),
}

impl Type {
    pub fn arrow(a: Type, b: Type) -> Type {
        Type::Arrow(Box::new(a), Box::new(b))
    }

    pub fn prod(a: Type, b: Type) -> Type {
        Type::Prod(Box::new(a), Box::new(b))
    }

    pub fn sum(a: Type, b: Type) -> Type {
        Type::Sum(Box::new(a), Box::new(b))
    }

    pub fn thread(a: Type, p: Priority) -> Type {
        Type::Thread(Box::new(a), p)
    }

    pub fn cmd(a: Type, p: Priority) -> Type {
        Type::Cmd(Box::new(a), p)
    }

    pub fn forall(v: Name, c: Constraint, body: Type) -> Type {
        Type::Forall(v, c, Box::new(body))
    }

    pub fn free_prio_vars(&self, out: &mut BTreeSet<Name>) {
        match self {
            Type::Unit | Type::Nat => {}
            Type::Arrow(a, b) | Type::Prod(a, b) | Type::Sum(a, b) => {
                a.free_prio_vars(out);
                b.free_prio_vars(out);
            }
            Type::Thread(a, p) | Type::Cmd(a, p) => {
                a.free_prio_vars(out);
                if let Priority::Var(n) = p {
                    out.insert(n.clone());
                }
            }
            Type::Forall(v, c, body) => {
                let mut inner = BTreeSet::new();
                c.free_prio_vars(&mut inner);
                body.free_prio_vars(&mut inner);
                inner.remove(v);
                out.extend(inner);
            }
        }
    }
}

/// A persistent set of names shared between nodes; `None` is the empty set.
#[derive(Clone, Default)]
pub(crate) struct VarSet(Option<Arc<BTreeSet<Name>>>);

impl VarSet {
    fn single(n: &Name) -> Self {
        VarSet(Some(Arc::new(BTreeSet::from([n.clone()]))))
    }

    fn from_set(s: BTreeSet<Name>) -> Self {
        if s.is_empty() {
            VarSet(None)
        } else {
            VarSet(Some(Arc::new(s)))
        }
    }

    pub(crate) fn contains(&self, n: &Name) -> bool {
        self.0.as_ref().is_some_and(|s| s.contains(n))
    }

    pub(crate) fn is_empty(&self) -> bool {
        self.0.is_none()
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = &Name> {
        self.0.iter().flat_map(|s| s.iter())
    }

    fn union(&self, other: &VarSet) -> VarSet {
        match (&self.0, &other.0) {
            (None, _) => other.clone(),
            (_, None) => self.clone(),
            (Some(a), Some(b)) if Arc::ptr_eq(a, b) => self.clone(),
            (Some(a), Some(b)) => {
                if b.is_subset(a) {
                    self.clone()
                } else if a.is_subset(b) {
                    other.clone()
                } else {
                    VarSet(Some(Arc::new(a.union(b).cloned().collect())))
                }
            }
        }
    }

    fn without(&self, n: &Name) -> VarSet {
        if !self.contains(n) {
            return self.clone();
        }
        let mut s: BTreeSet<Name> = self.iter().cloned().collect();
        s.remove(n);
        VarSet::from_set(s)
    }

    fn with_type(&self, t: &Type) -> VarSet {
        let mut s = BTreeSet::new();
        t.free_prio_vars(&mut s);
        self.union(&VarSet::from_set(s))
    }

    fn with_prio(&self, p: &Priority) -> VarSet {
        match p {
            Priority::Var(n) => self.union(&VarSet::single(n)),
            Priority::Const(_) => self.clone(),
        }
    }

    fn with_constraint(&self, c: &Constraint) -> VarSet {
        let mut s = BTreeSet::new();
        c.free_prio_vars(&mut s);
        self.union(&VarSet::from_set(s))
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Side {
    Left,
    Right,
}

/// Expression productions. `PairV` and `InjV` are the runtime value forms;
/// `Pair` and `Inj` are the corresponding allocating expressions.
#[derive(Clone, Debug)]
pub enum ExprKind {
    Var(Name),
    Unit,
    Num(BigUint),
    Lam(Name, Type, Expr),
    PairV(Expr, Expr),
    /// Injection value; the type is the whole sum type.
    InjV(Side, Type, Expr),
    Tid(Name),
    CmdV(Priority, Cmd),
    PLam(Name, Constraint, Expr),
    Let(Name, Expr, Expr),
    /// `ifz(v; e1; x.e2)`
    Ifz(Expr, Expr, Name, Expr),
    App(Expr, Expr),
    Pair(Expr, Expr),
    Fst(Expr),
    Snd(Expr),
    Inj(Side, Type, Expr),
    /// `case(v; x.e1; y.e2)`
    Case(Expr, Name, Expr, Name, Expr),
    Output(Expr),
    Input,
    PApp(Expr, Priority),
    Fix(Name, Type, Expr),
}

struct ExprNode {
    kind: ExprKind,
    fv: VarSet,
    fpv: VarSet,
}

#[derive(Clone)]
pub struct Expr(Arc<ExprNode>);

#[derive(Clone, Debug)]
pub enum CmdKind {
    Bind(Expr, Name, Cmd),
    Spawn(Priority, Type, Cmd),
    Sync(Expr),
    Ret(Expr),
}

struct CmdNode {
    kind: CmdKind,
    fv: VarSet,
    fpv: VarSet,
}

#[derive(Clone)]
pub struct Cmd(Arc<CmdNode>);

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Debug for Cmd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl Expr {
    pub fn new(kind: ExprKind) -> Expr {
        use ExprKind::*;
        let (fv, fpv) = match &kind {
            Var(x) => (VarSet::single(x), VarSet::default()),
            Unit | Num(_) | Tid(_) | Input => (VarSet::default(), VarSet::default()),
            Lam(x, t, e) | Fix(x, t, e) => (e.0.fv.without(x), e.0.fpv.with_type(t)),
            PairV(a, b) | App(a, b) | Pair(a, b) => {
                (a.0.fv.union(&b.0.fv), a.0.fpv.union(&b.0.fpv))
            }
            InjV(_, t, e) | Inj(_, t, e) => (e.0.fv.clone(), e.0.fpv.with_type(t)),
            CmdV(p, m) => (m.0.fv.clone(), m.0.fpv.with_prio(p)),
            PLam(v, c, e) => (e.0.fv.clone(), e.0.fpv.with_constraint(c).without(v)),
            Let(x, e1, e2) => (
                e1.0.fv.union(&e2.0.fv.without(x)),
                e1.0.fpv.union(&e2.0.fpv),
            ),
            Ifz(v, e1, x, e2) => (
                v.0.fv.union(&e1.0.fv).union(&e2.0.fv.without(x)),
                v.0.fpv.union(&e1.0.fpv).union(&e2.0.fpv),
            ),
            Fst(e) | Snd(e) | Output(e) => (e.0.fv.clone(), e.0.fpv.clone()),
            Case(v, x, e1, y, e2) => (
                v.0.fv.union(&e1.0.fv.without(x)).union(&e2.0.fv.without(y)),
                v.0.fpv.union(&e1.0.fpv).union(&e2.0.fpv),
            ),
            PApp(e, p) => (e.0.fv.clone(), e.0.fpv.with_prio(p)),
        };
        Expr(Arc::new(ExprNode { kind, fv, fpv }))
    }

    pub fn kind(&self) -> &ExprKind {
        &self.0.kind
    }

    pub fn ptr_eq(&self, other: &Expr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub(crate) fn addr(&self) -> usize {
        Arc::as_ptr(&self.0) as *const () as usize
    }

    pub fn has_free_var(&self, x: &Name) -> bool {
        self.0.fv.contains(x)
    }

    pub fn has_free_prio_var(&self, p: &Name) -> bool {
        self.0.fpv.contains(p)
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        self.0.fv.iter().cloned().collect()
    }

    pub fn free_prio_vars(&self) -> BTreeSet<Name> {
        self.0.fpv.iter().cloned().collect()
    }

    pub(crate) fn fv(&self) -> &VarSet {
        &self.0.fv
    }

    pub(crate) fn fpv(&self) -> &VarSet {
        &self.0.fpv
    }

    /// No free term variables and no free priority variables.
    pub fn is_closed(&self) -> bool {
        self.0.fv.is_empty() && self.0.fpv.is_empty()
    }

    /// Membership in the syntactic value class.
    pub fn is_value(&self) -> bool {
        match self.kind() {
            ExprKind::Var(_)
            | ExprKind::Unit
            | ExprKind::Num(_)
            | ExprKind::Lam(..)
            | ExprKind::Tid(_)
            | ExprKind::CmdV(..)
            | ExprKind::PLam(..) => true,
            ExprKind::PairV(a, b) => a.is_value() && b.is_value(),
            ExprKind::InjV(_, _, v) => v.is_value(),
            _ => false,
        }
    }

    pub fn var(x: &str) -> Expr {
        Expr::new(ExprKind::Var(Name::new(x)))
    }

    pub fn var_n(x: &Name) -> Expr {
        Expr::new(ExprKind::Var(x.clone()))
    }

    pub fn unit() -> Expr {
        Expr::new(ExprKind::Unit)
    }

    pub fn num(n: u64) -> Expr {
        Expr::new(ExprKind::Num(BigUint::from(n)))
    }

    pub fn nat(n: BigUint) -> Expr {
        Expr::new(ExprKind::Num(n))
    }

    pub fn lam(x: &str, t: Type, body: Expr) -> Expr {
        Expr::new(ExprKind::Lam(Name::new(x), t, body))
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::new(ExprKind::App(f, a))
    }

    pub fn let_(x: &str, e1: Expr, e2: Expr) -> Expr {
        Expr::new(ExprKind::Let(Name::new(x), e1, e2))
    }

    pub fn tid(a: &str) -> Expr {
        Expr::new(ExprKind::Tid(Name::new(a)))
    }

    pub fn cmd(p: Priority, m: Cmd) -> Expr {
        Expr::new(ExprKind::CmdV(p, m))
    }

    pub fn pair_v(a: Expr, b: Expr) -> Expr {
        Expr::new(ExprKind::PairV(a, b))
    }

    pub fn pair(a: Expr, b: Expr) -> Expr {
        Expr::new(ExprKind::Pair(a, b))
    }

    pub fn ifz(v: Expr, e1: Expr, x: &str, e2: Expr) -> Expr {
        Expr::new(ExprKind::Ifz(v, e1, Name::new(x), e2))
    }

    pub fn fix(x: &str, t: Type, e: Expr) -> Expr {
        Expr::new(ExprKind::Fix(Name::new(x), t, e))
    }

    pub fn plam(v: &str, c: Constraint, e: Expr) -> Expr {
        Expr::new(ExprKind::PLam(Name::new(v), c, e))
    }

    pub fn papp(e: Expr, p: Priority) -> Expr {
        Expr::new(ExprKind::PApp(e, p))
    }

    pub fn as_num(&self) -> Option<&BigUint> {
        match self.kind() {
            ExprKind::Num(n) => Some(n),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_num().is_some_and(Zero::is_zero)
    }

    /// Thread ids occurring anywhere inside the term.
    pub fn thread_ids(&self, out: &mut BTreeSet<Name>) {
        use ExprKind::*;
        match self.kind() {
            Var(_) | Unit | Num(_) | Input => {}
            Tid(a) => {
                out.insert(a.clone());
            }
            Lam(_, _, e)
            | Fix(_, _, e)
            | InjV(_, _, e)
            | Inj(_, _, e)
            | PLam(_, _, e)
            | Fst(e)
            | Snd(e)
            | Output(e)
            | PApp(e, _) => e.thread_ids(out),
            PairV(a, b) | App(a, b) | Pair(a, b) | Let(_, a, b) => {
                a.thread_ids(out);
                b.thread_ids(out);
            }
            Ifz(a, b, _, c) | Case(a, _, b, _, c) => {
                a.thread_ids(out);
                b.thread_ids(out);
                c.thread_ids(out);
            }
            CmdV(_, m) => m.thread_ids(out),
        }
    }
}

impl Cmd {
    pub fn new(kind: CmdKind) -> Cmd {
        let (fv, fpv) = match &kind {
            CmdKind::Bind(e, x, m) => (e.0.fv.union(&m.0.fv.without(x)), e.0.fpv.union(&m.0.fpv)),
            CmdKind::Spawn(p, t, m) => (m.0.fv.clone(), m.0.fpv.with_prio(p).with_type(t)),
            CmdKind::Sync(e) | CmdKind::Ret(e) => (e.0.fv.clone(), e.0.fpv.clone()),
        };
        Cmd(Arc::new(CmdNode { kind, fv, fpv }))
    }

    pub fn kind(&self) -> &CmdKind {
        &self.0.kind
    }

    pub fn ptr_eq(&self, other: &Cmd) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    pub fn has_free_var(&self, x: &Name) -> bool {
        self.0.fv.contains(x)
    }

    pub fn has_free_prio_var(&self, p: &Name) -> bool {
        self.0.fpv.contains(p)
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        self.0.fv.iter().cloned().collect()
    }

    pub(crate) fn fv(&self) -> &VarSet {
        &self.0.fv
    }

    pub fn is_closed(&self) -> bool {
        self.0.fv.is_empty() && self.0.fpv.is_empty()
    }

    pub fn bind(e: Expr, x: &str, m: Cmd) -> Cmd {
        Cmd::new(CmdKind::Bind(e, Name::new(x), m))
    }

    pub fn spawn(p: Priority, t: Type, m: Cmd) -> Cmd {
        Cmd::new(CmdKind::Spawn(p, t, m))
    }

    pub fn sync(e: Expr) -> Cmd {
        Cmd::new(CmdKind::Sync(e))
    }

    pub fn ret(e: Expr) -> Cmd {
        Cmd::new(CmdKind::Ret(e))
    }

    /// The returned value of a finished command `ret v`.
    pub fn finished_value(&self) -> Option<&Expr> {
        match self.kind() {
            CmdKind::Ret(v) if v.is_value() => Some(v),
            _ => None,
        }
    }

    pub fn thread_ids(&self, out: &mut BTreeSet<Name>) {
        match self.kind() {
            CmdKind::Bind(e, _, m) => {
                e.thread_ids(out);
                m.thread_ids(out);
            }
            CmdKind::Spawn(_, _, m) => m.thread_ids(out),
            CmdKind::Sync(e) | CmdKind::Ret(e) => e.thread_ids(out),
        }
    }
}

/// Well-formed value with respect to a set of known thread names: a member of
/// the value class whose thread ids are all bound.
pub fn value_check(e: &Expr, sig: &crate::typeck::Signature) -> bool {
    if !e.is_value() {
        return false;
    }
    let mut ids = BTreeSet::new();
    e.thread_ids(&mut ids);
    ids.iter().all(|a| sig.contains(a))
}

/// Picks `base_k` (for the smallest k >= 1) that `taken` rejects, stripping an
/// existing numeric suffix from `base` first.
pub fn fresh_name(base: &Name, taken: impl Fn(&Name) -> bool) -> Name {
    let s = base.as_str();
    let root = match s.rfind('_') {
        Some(i) if i > 0 && s[i + 1..].chars().all(|c| c.is_ascii_digit()) && i + 1 < s.len() => {
            &s[..i]
        }
        _ => s,
    };
    (1u64..)
        .map(|k| Name::from(format!("{root}_{k}")))
        .find(|n| !taken(n))
        .expect("unbounded supply of names")
}
