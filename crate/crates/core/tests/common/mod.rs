//! Helpers shared by the integration test targets: the example corpus,
//! random generators and brute-force oracles.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;
use std::path::PathBuf;

use num_bigint::BigUint;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use priml::ast::Name;
use priml::dag::CostDag;
use priml::prio::PartialOrder;

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

/// Every corpus program as (stem, source), sorted by name.
pub fn corpus() -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "priml").then(|| {
                (
                    p.file_stem().unwrap().to_string_lossy().into_owned(),
                    std::fs::read_to_string(&p).unwrap(),
                )
            })
        })
        .collect();
    out.sort();
    out
}

/// Programs that are meant to be rejected, with the exact message.
pub const REJECTED: &[(&str, &str)] = &[
    (
        "loop_sync",
        "constraint violated at 26.10-26.15: loop_p <= sort_p",
    ),
    (
        "display",
        "constraint violated at 9.10-9.15: display_p <= p_1",
    ),
    (
        "display_fixed",
        "constraint violated at 34.33-34.44: display_p <= sort_p",
    ),
];

pub fn corpus_inputs() -> Vec<BigUint> {
    [3u32, 5, 6].into_iter().map(BigUint::from).collect()
}

/// Stores with a constant above all others, of 2 to 4 priorities besides
/// `bot`.
pub fn topped_stores() -> Vec<PartialOrder> {
    vec![
        PartialOrder::from_decls(&["hi"], &[]).unwrap(),
        PartialOrder::from_decls(&["lo", "hi"], &[("lo", "hi")]).unwrap(),
        PartialOrder::from_decls(&["a", "b", "top"], &[("a", "top"), ("b", "top")]).unwrap(),
        PartialOrder::from_decls(&["a", "b", "c"], &[("a", "b"), ("b", "c")]).unwrap(),
    ]
}

/// Random stores over 1 to `max` fresh constants, edges only from lower
/// to higher index so the result is acyclic.
pub fn random_store(rng: &mut ChaCha8Rng, max: usize) -> PartialOrder {
    let k = rng.gen_range(1..=max);
    let names: Vec<String> = (0..k).map(|i| format!("q{i}")).collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut edges = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            if rng.gen_bool(0.3) {
                edges.push((refs[i], refs[j]));
            }
        }
    }
    PartialOrder::from_decls(&refs, &edges).unwrap()
}

/// A random acyclic graph of up to `max_threads` threads with a spawn tree
/// and arbitrary joins, which may or may not be well-formed.
pub fn random_dag(
    rng: &mut ChaCha8Rng,
    store: &PartialOrder,
    max_threads: usize,
    max_len: usize,
) -> CostDag {
    let n_threads = rng.gen_range(1..=max_threads);
    let consts = store.consts().to_vec();
    let mut g = CostDag::new(store.clone());
    let mut names = vec!["main".to_string()];
    g.add_chain(
        "main",
        consts.choose(rng).unwrap(),
        rng.gen_range(1..=max_len),
    )
    .unwrap();
    let mut used: BTreeSet<(String, usize)> = BTreeSet::new();
    for _ in 1..n_threads {
        let p = names.choose(rng).unwrap().clone();
        let len = g.threads[&p].vertices.len();
        if len == 0 {
            continue;
        }
        let k = rng.gen_range(0..len);
        if !used.insert((p.clone(), k)) {
            continue;
        }
        let child = format!("{p}.{k}");
        let clen = if rng.gen_bool(0.1) {
            0
        } else {
            rng.gen_range(1..=max_len)
        };
        g.add_chain(&child, consts.choose(rng).unwrap(), clen)
            .unwrap();
        g.add_spawn(&p, k, &child).unwrap();
        names.push(child);
    }
    for _ in 0..rng.gen_range(0..=n_threads) {
        let b = names.choose(rng).unwrap().clone();
        let t = names.choose(rng).unwrap().clone();
        let len = g.threads[&t].vertices.len();
        if t == b || len == 0 {
            continue;
        }
        let before = g.clone();
        g.add_join(&b, &t, rng.gen_range(0..len)).unwrap();
        if g.graph().is_err() {
            g = before;
        }
    }
    g
}

/// Transitive-reflexive closure by depth-first search from each constant.
pub fn dfs_closure(order: &PartialOrder) -> Vec<Vec<bool>> {
    let n = order.len();
    let idx = |c: &Name| order.index_of(c).unwrap();
    let mut adj = vec![Vec::new(); n];
    for j in 1..n {
        adj[0].push(j);
    }
    for (lo, hi) in order.edges() {
        adj[idx(lo)].push(idx(hi));
    }
    (0..n)
        .map(|s| {
            let mut seen = vec![false; n];
            fn go(v: usize, adj: &[Vec<usize>], seen: &mut [bool]) {
                if seen[v] {
                    return;
                }
                seen[v] = true;
                for &w in &adj[v] {
                    go(w, adj, seen);
                }
            }
            go(s, &adj, &mut seen);
            seen
        })
        .collect()
}

/// Facts derivable from `facts` with reflexivity and transitivity, by
/// iterating derivations of growing depth up to `atoms^2`.
#[allow(clippy::needless_range_loop)]
pub fn derivable(atoms: usize, facts: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut d = vec![vec![false; atoms]; atoms];
    for depth in 0..=atoms * atoms {
        let mut next = vec![vec![false; atoms]; atoms];
        for (a, row) in next.iter_mut().enumerate() {
            row[a] = true;
        }
        for &(a, b) in facts {
            next[a][b] = true;
        }
        if depth > 0 {
            for a in 0..atoms {
                for b in 0..atoms {
                    if d[a][b] {
                        for c in 0..atoms {
                            if d[b][c] {
                                next[a][c] = true;
                            }
                        }
                    }
                }
            }
        }
        if next == d {
            break;
        }
        d = next;
    }
    d
}

/// Longest path in vertices ending at `target`, by enumerating every path.
pub fn longest_path_to(pred: &[Vec<usize>], target: usize) -> usize {
    1 + pred[target]
        .iter()
        .map(|&p| longest_path_to(pred, p))
        .max()
        .unwrap_or(0)
}

/// Minimum response time of the thread whose vertices are `first..=last`
/// over all valid schedules, by recursive enumeration.
pub fn min_response_recursive(
    pred: &[Vec<usize>],
    procs: usize,
    first: usize,
    last: usize,
) -> usize {
    let n = pred.len();
    fn go(
        pred: &[Vec<usize>],
        procs: usize,
        first: usize,
        last: usize,
        time: &mut Vec<usize>,
        now: usize,
        best: &mut usize,
    ) {
        let n = pred.len();
        let ready: Vec<usize> = (0..n)
            .filter(|&v| time[v] == 0 && pred[v].iter().all(|&p| time[p] != 0 && time[p] < now + 1))
            .collect();
        for sub in 1u32..(1 << ready.len()) {
            if sub.count_ones() as usize > procs {
                continue;
            }
            let chosen: Vec<usize> = (0..ready.len())
                .filter(|i| sub & (1 << i) != 0)
                .map(|i| ready[i])
                .collect();
            for &v in &chosen {
                time[v] = now + 1;
            }
            if time[last] != 0 {
                let r = pred[first].iter().map(|&p| time[p]).max().unwrap_or(0);
                *best = (*best).min(time[last] - r);
            } else {
                go(pred, procs, first, last, time, now + 1, best);
            }
            for &v in &chosen {
                time[v] = 0;
            }
        }
    }
    let mut best = usize::MAX;
    go(pred, procs, first, last, &mut vec![0; n], 0, &mut best);
    best
}

/// Source text of random, well-scoped, terminating programs. Most of them
/// are well-typed; roughly one in ten syncs against the order.
pub struct ProgramGen {
    rng: ChaCha8Rng,
    prios: Vec<String>,
    le: Vec<Vec<bool>>,
    fresh: usize,
    polys: Vec<String>,
    cmd_vals: Vec<(String, usize)>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum At {
    Const(usize),
    Var,
}

#[derive(Clone)]
struct Scope {
    nats: Vec<String>,
    funs: Vec<String>,
    threads: Vec<(String, At)>,
    var: Option<String>,
}

impl ProgramGen {
    pub fn new(seed: u64) -> Self {
        ProgramGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            prios: Vec::new(),
            le: Vec::new(),
            fresh: 0,
            polys: Vec::new(),
            cmd_vals: Vec::new(),
        }
    }

    fn name(&mut self, base: &str) -> String {
        self.fresh += 1;
        format!("{base}{}", self.fresh)
    }

    fn at_text(&self, at: At, scope: &Scope) -> String {
        match at {
            At::Const(i) => self.prios[i].clone(),
            At::Var => scope.var.clone().unwrap(),
        }
    }

    fn can_sync(&self, cur: At, target: At) -> bool {
        match (cur, target) {
            (At::Const(i), At::Const(j)) => self.le[i][j],
            (At::Var, At::Var) => true,
            _ => false,
        }
    }

    pub fn program(&mut self) -> String {
        self.fresh = 0;
        self.polys.clear();
        self.cmd_vals.clear();
        let k = self.rng.gen_range(1..=3);
        self.prios = std::iter::once("bot".to_string())
            .chain((1..=k).map(|i| format!("p{i}")))
            .collect();
        let n = self.prios.len();
        self.le = vec![vec![false; n]; n];
        for i in 0..n {
            self.le[i][i] = true;
            self.le[0][i] = true;
        }
        let mut src = String::new();
        for p in &self.prios[1..] {
            let _ = writeln!(src, "priority {p}");
        }
        for i in 1..n {
            for j in i + 1..n {
                if self.rng.gen_bool(0.4) {
                    let _ = writeln!(src, "order {} < {}", self.prios[i], self.prios[j]);
                    self.le[i][j] = true;
                }
            }
        }
        for _ in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if (0..n).any(|m| self.le[i][m] && self.le[m][j]) {
                        self.le[i][j] = true;
                    }
                }
            }
        }
        let mut scope = Scope {
            nats: Vec::new(),
            funs: Vec::new(),
            threads: Vec::new(),
            var: None,
        };
        for _ in 0..self.rng.gen_range(0..=3) {
            match self.rng.gen_range(0..4) {
                0 => {
                    let x = self.name("v");
                    let e = self.nat(2, &scope);
                    let _ = writeln!(src, "val {x} = {e}");
                    scope.nats.push(x);
                }
                1 => {
                    let f = self.name("f");
                    let x = self.name("x");
                    let mut inner = scope.clone();
                    inner.nats.push(x.clone());
                    let e = self.nat(2, &inner);
                    let _ = writeln!(src, "fun {f} ({x} : nat) : nat = {e}");
                    scope.funs.push(f);
                }
                2 => {
                    let g = self.name("g");
                    let r = self.name("r");
                    let x = self.name("x");
                    let mut inner = scope.clone();
                    inner.nats.push(x.clone());
                    inner.var = Some(r.clone());
                    inner.threads.clear();
                    let body = self.block(2, At::Var, &inner);
                    let _ = writeln!(
                        src,
                        "fun[{r}] {g} ({x} : nat) : nat cmd[{r}] = cmd[{r}] {body}"
                    );
                    self.polys.push(g);
                }
                _ => {
                    let c = self.name("c");
                    let i = self.rng.gen_range(0..n);
                    let body = self.block(2, At::Const(i), &scope);
                    let _ = writeln!(src, "val {c} = cmd[{}] {body}", self.prios[i]);
                    self.cmd_vals.push((c, i));
                }
            }
        }
        let main = self.block(3, At::Const(0), &scope);
        let _ = writeln!(src, "main {main}");
        src
    }

    fn nat(&mut self, depth: usize, scope: &Scope) -> String {
        if depth == 0 || self.rng.gen_bool(0.3) {
            if !scope.nats.is_empty() && self.rng.gen_bool(0.5) {
                return scope.nats.choose(&mut self.rng).unwrap().clone();
            }
            return self.rng.gen_range(0..6u32).to_string();
        }
        let d = depth - 1;
        match self.rng.gen_range(0..8) {
            0 => {
                let x = self.name("x");
                let a = self.nat(d, scope);
                let mut inner = scope.clone();
                inner.nats.push(x.clone());
                let b = self.nat(d, &inner);
                format!("let val {x} = {a} in {b} end")
            }
            1 => {
                let k = self.name("k");
                let a = self.nat(d, scope);
                let b = self.nat(d, scope);
                let mut inner = scope.clone();
                inner.nats.push(k.clone());
                let c = self.nat(d, &inner);
                format!("(ifz {a} then {b} else {k} => {c})")
            }
            2 => {
                let x = self.name("x");
                let mut inner = scope.clone();
                inner.nats.push(x.clone());
                let body = self.nat(d, &inner);
                let arg = self.nat(d, scope);
                format!("(fn ({x} : nat) => {body}) ({arg})")
            }
            3 if !scope.funs.is_empty() => {
                let f = scope.funs.choose(&mut self.rng).unwrap().clone();
                format!("{f} ({})", self.nat(d, scope))
            }
            4 => {
                let (a, b) = (self.nat(d, scope), self.nat(d, scope));
                if self.rng.gen_bool(0.5) {
                    format!("fst ({a}, {b})")
                } else {
                    format!("snd ({a}, {b})")
                }
            }
            5 => {
                let (a, b) = (self.nat(d, scope), self.nat(d, scope));
                let (y, z) = (self.name("y"), self.name("z"));
                let (l, r) = (self.nat(d, scope), self.nat(d, scope));
                format!("(case lt ({a}) ({b}) of inl {y} => {l} | inr {z} => {r})")
            }
            6 => format!("add ({}) ({})", self.nat(d, scope), self.nat(d, scope)),
            _ => format!("pred ({})", self.nat(d, scope)),
        }
    }

    /// An expression of type `nat cmd[cur]`.
    fn cmd_expr(&mut self, depth: usize, cur: At, scope: &Scope) -> String {
        let p = self.at_text(cur, scope);
        let vals: Vec<String> = self
            .cmd_vals
            .iter()
            .filter(|(_, i)| cur == At::Const(*i))
            .map(|(c, _)| c.clone())
            .collect();
        match self.rng.gen_range(0..3) {
            0 if !self.polys.is_empty() => {
                let g = self.polys.choose(&mut self.rng).unwrap().clone();
                format!("([{p}]{g} ({}))", self.nat(1, scope))
            }
            1 if !vals.is_empty() => vals.choose(&mut self.rng).unwrap().clone(),
            _ => format!(
                "cmd[{p}] {}",
                self.block(depth.saturating_sub(1), cur, scope)
            ),
        }
    }

    /// A command block of type `nat` at `cur`.
    fn block(&mut self, depth: usize, cur: At, scope: &Scope) -> String {
        let mut scope = scope.clone();
        let mut stmts = Vec::new();
        let n = if depth == 0 {
            0
        } else {
            self.rng.gen_range(0..=3)
        };
        for _ in 0..n {
            let x = self.name("y");
            match self.rng.gen_range(0..4) {
                0 => {
                    stmts.push(format!("{x} <- ret {}", self.nat(1, &scope)));
                    scope.nats.push(x);
                }
                1 => {
                    let target = if scope.var.is_some() && self.rng.gen_bool(0.5) {
                        At::Var
                    } else {
                        At::Const(self.rng.gen_range(0..self.prios.len()))
                    };
                    let q = self.at_text(target, &scope);
                    let body = self.block(depth - 1, target, &scope);
                    stmts.push(format!("{x} <- spawn[{q}] {body}"));
                    scope.threads.push((x, target));
                }
                2 if !scope.threads.is_empty() => {
                    let ok: Vec<String> = scope
                        .threads
                        .iter()
                        .filter(|(_, t)| self.can_sync(cur, *t))
                        .map(|(t, _)| t.clone())
                        .collect();
                    let t = if !ok.is_empty() && !self.rng.gen_bool(0.1) {
                        ok.choose(&mut self.rng).unwrap().clone()
                    } else {
                        scope.threads.choose(&mut self.rng).unwrap().0.clone()
                    };
                    stmts.push(format!("{x} <- sync {t}"));
                    scope.nats.push(x);
                }
                _ => {
                    let e = self.cmd_expr(depth, cur, &scope);
                    stmts.push(format!("{x} <- do {e}"));
                    scope.nats.push(x);
                }
            }
        }
        stmts.push(format!("ret {}", self.nat(1, &scope)));
        format!("{{ {} }}", stmts.join("; "))
    }
}

/// Per-key means.
pub fn means(samples: &BTreeMap<String, Vec<f64>>) -> BTreeMap<String, f64> {
    samples
        .iter()
        .map(|(k, v)| (k.clone(), v.iter().sum::<f64>() / v.len() as f64))
        .collect()
}
