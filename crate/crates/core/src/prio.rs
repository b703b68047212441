//! Priority constants, their partial order, and constraint entailment.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::ast::{Constraint, Name, Priority, BOT};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrioError {
    #[error("priority {0} is already declared")]
    DuplicatePriority(Name),
    #[error("ordering {lo} < {hi} would create a cycle")]
    CycleDetected { lo: Name, hi: Name },
    #[error("unknown priority {0}")]
    UnknownPriority(Name),
}

/// Declared constants with the reflexive-transitive closure of the declared
/// edges (plus `bot <= c` for every constant) and a compatible total order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialOrder {
    consts: Vec<Name>,
    index: BTreeMap<Name, usize>,
    edges: Vec<(Name, Name)>,
    closure: Vec<Vec<bool>>,
    total: Vec<Name>,
    rank: Vec<usize>,
}

impl Default for PartialOrder {
    fn default() -> Self {
        Self::new()
    }
}

/// Reflexive-transitive closure by Warshall's algorithm over `n` nodes.
#[allow(clippy::needless_range_loop)]
pub fn warshall(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Vec<Vec<bool>> {
    let mut c = vec![vec![false; n]; n];
    for (i, row) in c.iter_mut().enumerate() {
        row[i] = true;
    }
    for (a, b) in edges {
        c[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if c[i][k] {
                for j in 0..n {
                    if c[k][j] {
                        c[i][j] = true;
                    }
                }
            }
        }
    }
    c
}

impl PartialOrder {
    /// The store containing only `bot`.
    pub fn new() -> Self {
        let mut s = PartialOrder {
            consts: Vec::new(),
            index: BTreeMap::new(),
            edges: Vec::new(),
            closure: Vec::new(),
            total: Vec::new(),
            rank: Vec::new(),
        };
        s.consts.push(Name::new(BOT));
        s.index.insert(Name::new(BOT), 0);
        s.recompute();
        s
    }

    /// Builds a store from names (in declaration order, `bot` implicit) and
    /// `lo < hi` edges.
    pub fn from_decls(names: &[&str], order: &[(&str, &str)]) -> Result<Self, PrioError> {
        let mut s = Self::new();
        for n in names {
            s.declare_priority(&Name::new(n))?;
        }
        for (lo, hi) in order {
            s.declare_order(&Name::new(lo), &Name::new(hi))?;
        }
        Ok(s)
    }

    fn recompute(&mut self) {
        let n = self.consts.len();
        let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (0, i)).collect();
        edges.extend(
            self.edges
                .iter()
                .map(|(a, b)| (self.index[a], self.index[b])),
        );
        self.closure = warshall(n, edges);
        self.total = self.topological();
        self.rank = vec![0; n];
        for (r, c) in self.total.iter().enumerate() {
            self.rank[self.index[c]] = r;
        }
    }

    /// Kahn's algorithm; among available nodes the earliest declared wins.
    fn topological(&self) -> Vec<Name> {
        let n = self.consts.len();
        let mut placed = vec![false; n];
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let next = (0..n)
                .find(|&i| !placed[i] && (0..n).all(|j| j == i || placed[j] || !self.closure[j][i]))
                .expect("closure of an acyclic store");
            placed[next] = true;
            out.push(self.consts[next].clone());
        }
        out
    }

    pub fn declare_priority(&mut self, name: &Name) -> Result<(), PrioError> {
        if self.index.contains_key(name) {
            return Err(PrioError::DuplicatePriority(name.clone()));
        }
        self.index.insert(name.clone(), self.consts.len());
        self.consts.push(name.clone());
        self.recompute();
        Ok(())
    }

    pub fn declare_order(&mut self, lo: &Name, hi: &Name) -> Result<(), PrioError> {
        let (l, h) = (self.idx(lo)?, self.idx(hi)?);
        if self.closure[h][l] {
            return Err(PrioError::CycleDetected {
                lo: lo.clone(),
                hi: hi.clone(),
            });
        }
        self.edges.push((lo.clone(), hi.clone()));
        self.recompute();
        Ok(())
    }

    fn idx(&self, n: &Name) -> Result<usize, PrioError> {
        self.index
            .get(n)
            .copied()
            .ok_or_else(|| PrioError::UnknownPriority(n.clone()))
    }

    pub fn contains(&self, n: &Name) -> bool {
        self.index.contains_key(n)
    }

    /// Constants in declaration order, `bot` first.
    pub fn consts(&self) -> &[Name] {
        &self.consts
    }

    /// Declared `lo < hi` edges in declaration order.
    pub fn edges(&self) -> &[(Name, Name)] {
        &self.edges
    }

    pub fn index_of(&self, n: &Name) -> Option<usize> {
        self.index.get(n).copied()
    }

    pub fn len(&self) -> usize {
        self.consts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.consts.is_empty()
    }

    /// `a <= b` for two declared constants.
    pub fn le(&self, a: &Name, b: &Name) -> bool {
        match (self.index.get(a), self.index.get(b)) {
            (Some(&i), Some(&j)) => self.closure[i][j],
            _ => false,
        }
    }

    pub fn lt(&self, a: &Name, b: &Name) -> bool {
        a != b && self.le(a, b)
    }

    pub fn le_idx(&self, i: usize, j: usize) -> bool {
        self.closure[i][j]
    }

    pub fn lt_idx(&self, i: usize, j: usize) -> bool {
        i != j && self.closure[i][j]
    }

    pub fn closure(&self) -> &[Vec<bool>] {
        &self.closure
    }

    /// A linear extension of the order, ties broken by declaration order.
    pub fn total_order(&self) -> &[Name] {
        &self.total
    }

    /// Position of a constant in `total_order`.
    pub fn rank(&self, n: &Name) -> Option<usize> {
        self.index.get(n).map(|&i| self.rank[i])
    }

    pub fn rank_idx(&self, i: usize) -> usize {
        self.rank[i]
    }

    /// A constant above every other constant, if one exists.
    pub fn top(&self) -> Option<&Name> {
        let n = self.consts.len();
        (0..n)
            .find(|&i| (0..n).all(|j| self.closure[j][i]))
            .map(|i| &self.consts[i])
    }
}

/// Priority hypotheses in scope: bound priority variables and assumed facts.
#[derive(Clone, Debug, Default)]
pub struct EntailContext {
    pub prio_vars: BTreeSet<Name>,
    pub assumed: Vec<(Priority, Priority)>,
}

impl EntailContext {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_var(&mut self, v: &Name) {
        self.prio_vars.insert(v.clone());
    }

    pub fn assume(&mut self, c: &Constraint) {
        self.assumed.extend(c.conjuncts.iter().cloned());
    }

    fn known(&self, store: &PartialOrder, p: &Priority) -> bool {
        match p {
            Priority::Const(n) => store.contains(n) || self.prio_vars.contains(n),
            Priority::Var(n) => self.prio_vars.contains(n),
        }
    }
}

/// Decides `lhs <= rhs` by reachability over the store's closure and the
/// assumed facts.
pub fn entails_le(
    store: &PartialOrder,
    ctx: &EntailContext,
    lhs: &Priority,
    rhs: &Priority,
) -> Result<bool, PrioError> {
    for p in [lhs, rhs] {
        if !ctx.known(store, p) {
            return Err(PrioError::UnknownPriority(p.name().clone()));
        }
    }
    if lhs == rhs {
        return Ok(true);
    }
    let mut seen = BTreeSet::from([lhs.clone()]);
    let mut queue = VecDeque::from([lhs.clone()]);
    while let Some(p) = queue.pop_front() {
        let mut next: Vec<Priority> = ctx
            .assumed
            .iter()
            .filter(|(a, _)| *a == p)
            .map(|(_, b)| b.clone())
            .collect();
        if let Priority::Const(c) = &p {
            if let Some(i) = store.index_of(c) {
                next.extend(
                    (0..store.len())
                        .filter(|&j| store.le_idx(i, j))
                        .map(|j| Priority::Const(store.consts[j].clone())),
                );
            }
        }
        for q in next {
            if &q == rhs {
                return Ok(true);
            }
            if seen.insert(q.clone()) {
                queue.push_back(q);
            }
        }
    }
    Ok(false)
}

/// The first conjunct of `goal` that is not derivable, if any.
pub fn first_unentailed<'c>(
    store: &PartialOrder,
    ctx: &EntailContext,
    goal: &'c Constraint,
) -> Result<Option<&'c (Priority, Priority)>, PrioError> {
    for c in &goal.conjuncts {
        if !entails_le(store, ctx, &c.0, &c.1)? {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

pub fn entails(
    store: &PartialOrder,
    ctx: &EntailContext,
    goal: &Constraint,
) -> Result<bool, PrioError> {
    Ok(first_unentailed(store, ctx, goal)?.is_none())
}

/// Loads a store into a context: every constant as a priority name, `bot`
/// below each constant, and every declared edge.
pub fn ctxify(store: &PartialOrder) -> EntailContext {
    let mut ctx = EntailContext::new();
    for c in store.consts() {
        ctx.prio_vars.insert(c.clone());
    }
    for c in store.consts().iter().skip(1) {
        ctx.assumed
            .push((Priority::bot(), Priority::Const(c.clone())));
    }
    for (lo, hi) in store.edges() {
        ctx.assumed
            .push((Priority::Const(lo.clone()), Priority::Const(hi.clone())));
    }
    ctx
}
