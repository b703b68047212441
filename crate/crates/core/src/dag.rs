//! Cost DAGs: threads of unit-time vertices linked by spawn and join edges.
//!
//! A thread's vertices form a chain. A spawn edge runs from a vertex to the
//! first vertex of the spawned thread and a join edge from the last vertex of
//! a thread to the vertex that syncs on it. A thread may have no vertices at
//! all (a spawned `ret v`); joins from such a thread start at its spawn
//! vertex instead, and the spawn edge into it carries no dependency.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use thiserror::Error;

use crate::ast::Name;
use crate::prio::PartialOrder;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThreadInfo {
    pub prio: Name,
    /// Globally unique vertex ids, in execution order.
    pub vertices: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CostDag {
    pub order: PartialOrder,
    pub threads: BTreeMap<String, ThreadInfo>,
    pub spawn_edges: BTreeSet<(usize, String)>,
    pub join_edges: BTreeSet<(String, usize)>,
    /// Never populated; kept so that unions stay total.
    pub aux_edges: BTreeSet<(usize, usize)>,
    next_vertex: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DagError {
    #[error("unknown thread {0}")]
    UnknownThread(String),
    #[error("thread {0} has no vertices")]
    EmptyThread(String),
    #[error("thread {0} already exists")]
    NameClash(String),
    #[error("vertex {0} does not exist")]
    UnknownVertex(usize),
    #[error("unknown priority {0}")]
    UnknownPriority(Name),
    #[error("the graph has a cycle through vertex {0}")]
    Cycle(usize),
}

impl CostDag {
    pub fn new(order: PartialOrder) -> Self {
        CostDag {
            order,
            threads: BTreeMap::new(),
            spawn_edges: BTreeSet::new(),
            join_edges: BTreeSet::new(),
            aux_edges: BTreeSet::new(),
            next_vertex: 0,
        }
    }

    /// A graph whose vertex ids start at `first`, for composing with graphs
    /// that use the ids below it.
    pub fn starting_at(order: PartialOrder, first: usize) -> Self {
        CostDag {
            next_vertex: first,
            ..CostDag::new(order)
        }
    }

    pub fn add_thread(&mut self, name: &str, prio: &Name) -> Result<(), DagError> {
        if self.threads.contains_key(name) {
            return Err(DagError::NameClash(name.to_string()));
        }
        if !self.order.contains(prio) {
            return Err(DagError::UnknownPriority(prio.clone()));
        }
        self.threads.insert(
            name.to_string(),
            ThreadInfo {
                prio: prio.clone(),
                vertices: Vec::new(),
            },
        );
        Ok(())
    }

    /// Appends a fresh vertex to `thread` and returns its id.
    pub fn push_vertex(&mut self, thread: &str) -> Result<usize, DagError> {
        let id = self.next_vertex;
        let t = self
            .threads
            .get_mut(thread)
            .ok_or_else(|| DagError::UnknownThread(thread.to_string()))?;
        t.vertices.push(id);
        self.next_vertex += 1;
        Ok(id)
    }

    /// A thread of `len` fresh vertices.
    pub fn add_chain(&mut self, name: &str, prio: &Name, len: usize) -> Result<(), DagError> {
        self.add_thread(name, prio)?;
        for _ in 0..len {
            self.push_vertex(name)?;
        }
        Ok(())
    }

    pub fn vertex(&self, thread: &str, index: usize) -> Option<usize> {
        self.threads.get(thread)?.vertices.get(index).copied()
    }

    pub fn thread(&self, name: &str) -> Result<&ThreadInfo, DagError> {
        self.threads
            .get(name)
            .ok_or_else(|| DagError::UnknownThread(name.to_string()))
    }

    pub fn add_spawn(&mut self, parent: &str, index: usize, child: &str) -> Result<(), DagError> {
        let u = self
            .vertex(parent, index)
            .ok_or_else(|| DagError::UnknownThread(format!("{parent}:{index}")))?;
        self.thread(child)?;
        self.spawn_edges.insert((u, child.to_string()));
        Ok(())
    }

    pub fn add_join(&mut self, src: &str, thread: &str, index: usize) -> Result<(), DagError> {
        self.thread(src)?;
        let u = self
            .vertex(thread, index)
            .ok_or_else(|| DagError::UnknownThread(format!("{thread}:{index}")))?;
        self.join_edges.insert((src.to_string(), u));
        Ok(())
    }

    pub fn work(&self) -> usize {
        self.threads.values().map(|t| t.vertices.len()).sum()
    }

    /// Map from vertex id to (thread, position).
    pub fn owners(&self) -> BTreeMap<usize, (&str, usize)> {
        let mut m = BTreeMap::new();
        for (name, t) in &self.threads {
            for (i, &v) in t.vertices.iter().enumerate() {
                m.insert(v, (name.as_str(), i));
            }
        }
        m
    }

    /// Where joins out of `thread` start: its last vertex, or its spawn vertex
    /// when it has none.
    pub fn join_source(&self, thread: &str) -> Option<usize> {
        let t = self.threads.get(thread)?;
        match t.vertices.last() {
            Some(&v) => Some(v),
            None => self
                .spawn_edges
                .iter()
                .find(|(_, c)| c == thread)
                .map(|(u, _)| *u),
        }
    }

    /// The induced vertex-level edge relation.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for t in self.threads.values() {
            out.extend(t.vertices.windows(2).map(|w| (w[0], w[1])));
        }
        for (u, c) in &self.spawn_edges {
            if let Some(&first) = self.threads.get(c).and_then(|t| t.vertices.first()) {
                out.push((*u, first));
            }
        }
        for (b, u) in &self.join_edges {
            if let Some(src) = self.join_source(b) {
                out.push((src, *u));
            }
        }
        out.extend(self.aux_edges.iter().copied());
        out
    }

    /// Renumbers vertices thread by thread in name order.
    pub fn canonical(&self) -> CostDag {
        let mut out = CostDag::new(self.order.clone());
        let mut map = BTreeMap::new();
        for (name, t) in &self.threads {
            out.threads.insert(
                name.clone(),
                ThreadInfo {
                    prio: t.prio.clone(),
                    vertices: Vec::new(),
                },
            );
            for &v in &t.vertices {
                let id = out.push_vertex(name).expect("thread was just added");
                map.insert(v, id);
            }
        }
        out.spawn_edges = self
            .spawn_edges
            .iter()
            .map(|(u, c)| (map[u], c.clone()))
            .collect();
        out.join_edges = self
            .join_edges
            .iter()
            .map(|(b, u)| (b.clone(), map[u]))
            .collect();
        out.aux_edges = self
            .aux_edges
            .iter()
            .map(|(a, b)| (map[a], map[b]))
            .collect();
        out
    }

    pub fn graph(&self) -> Result<Graph, DagError> {
        Graph::new(self)
    }
}

/// Sequential composition at thread `a`: `a`'s vertices in `g1` followed by
/// its vertices in `g2`; everything else is unioned.
pub fn seq_compose(g1: &CostDag, a: &str, g2: &CostDag) -> Result<CostDag, DagError> {
    let mut out = g1.clone();
    let ids1: BTreeSet<usize> = g1.owners().into_keys().collect();
    for v in g2.owners().into_keys() {
        if ids1.contains(&v) {
            return Err(DagError::NameClash(format!("vertex {v}")));
        }
    }
    for (name, t) in &g2.threads {
        if name == a {
            let mine = out
                .threads
                .entry(name.clone())
                .or_insert_with(|| ThreadInfo {
                    prio: t.prio.clone(),
                    vertices: Vec::new(),
                });
            mine.vertices.extend(t.vertices.iter().copied());
        } else if out.threads.insert(name.clone(), t.clone()).is_some() {
            return Err(DagError::NameClash(name.clone()));
        }
    }
    out.spawn_edges.extend(g2.spawn_edges.iter().cloned());
    out.join_edges.extend(g2.join_edges.iter().cloned());
    out.aux_edges.extend(g2.aux_edges.iter().copied());
    out.next_vertex = g1.next_vertex.max(g2.next_vertex);
    Ok(out)
}

/// Dense, analysis-friendly view of a [`CostDag`].
#[derive(Clone, Debug)]
pub struct Graph {
    /// Original vertex id of each dense index.
    pub ids: Vec<usize>,
    pub thread_names: Vec<String>,
    /// Dense vertices of each thread, in order.
    pub thread_vertices: Vec<Vec<usize>>,
    /// Store index of each thread's priority.
    pub thread_prio: Vec<usize>,
    pub owner: Vec<usize>,
    pub succ: Vec<Vec<usize>>,
    pub pred: Vec<Vec<usize>>,
    pub topo: Vec<usize>,
    /// Dense vertex a thread's first vertex waits on beyond its own chain.
    pub join_source: Vec<Option<usize>>,
}

impl Graph {
    pub fn new(g: &CostDag) -> Result<Graph, DagError> {
        let mut dense = BTreeMap::new();
        let mut ids = Vec::new();
        let mut owner = Vec::new();
        let mut thread_names = Vec::new();
        let mut thread_vertices = Vec::new();
        let mut thread_prio = Vec::new();
        for (ti, (name, t)) in g.threads.iter().enumerate() {
            let p = g
                .order
                .index_of(&t.prio)
                .ok_or_else(|| DagError::UnknownPriority(t.prio.clone()))?;
            thread_names.push(name.clone());
            thread_prio.push(p);
            let mut vs = Vec::new();
            for &v in &t.vertices {
                if dense.insert(v, ids.len()).is_some() {
                    return Err(DagError::NameClash(format!("vertex {v}")));
                }
                vs.push(ids.len());
                ids.push(v);
                owner.push(ti);
            }
            thread_vertices.push(vs);
        }
        let n = ids.len();
        let mut succ = vec![Vec::new(); n];
        let mut pred = vec![Vec::new(); n];
        for (a, b) in g.edges() {
            let a = *dense.get(&a).ok_or(DagError::UnknownVertex(a))?;
            let b = *dense.get(&b).ok_or(DagError::UnknownVertex(b))?;
            if !succ[a].contains(&b) {
                succ[a].push(b);
                pred[b].push(a);
            }
        }
        let join_source = thread_names
            .iter()
            .map(|t| g.join_source(t).map(|v| dense[&v]))
            .collect();
        let mut indeg: Vec<usize> = pred.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut topo = Vec::with_capacity(n);
        while let Some(v) = queue.pop_front() {
            topo.push(v);
            for &w in &succ[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    queue.push_back(w);
                }
            }
        }
        if topo.len() < n {
            let stuck = (0..n).find(|&v| indeg[v] > 0).unwrap();
            return Err(DagError::Cycle(ids[stuck]));
        }
        Ok(Graph {
            ids,
            thread_names,
            thread_vertices,
            thread_prio,
            owner,
            succ,
            pred,
            topo,
            join_source,
        })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn thread_index(&self, name: &str) -> Option<usize> {
        self.thread_names.iter().position(|t| t == name)
    }

    pub fn prio_of(&self, v: usize) -> usize {
        self.thread_prio[self.owner[v]]
    }

    /// Longest path (in vertices) ending at each vertex.
    pub fn depth(&self) -> Vec<usize> {
        let mut d = vec![1; self.len()];
        for &v in &self.topo {
            for &w in &self.succ[v] {
                d[w] = d[w].max(d[v] + 1);
            }
        }
        d
    }

    pub fn span(&self) -> usize {
        self.depth().into_iter().max().unwrap_or(0)
    }

    /// Vertices from which `v` is reachable, including `v`.
    pub fn ancestors(&self, v: usize) -> Vec<bool> {
        closure(v, &self.pred, self.len())
    }

    /// Vertices reachable from `v`, including `v`.
    pub fn descendants(&self, v: usize) -> Vec<bool> {
        closure(v, &self.succ, self.len())
    }
}

fn closure(start: usize, adj: &[Vec<usize>], n: usize) -> Vec<bool> {
    let mut seen = vec![false; n];
    seen[start] = true;
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// Vertices whose priority is not `<= rho`.
pub fn priority_work(g: &CostDag, rho: &Name) -> usize {
    g.threads
        .values()
        .filter(|t| !g.order.le(&t.prio, rho))
        .map(|t| t.vertices.len())
        .sum()
}

/// Vertices whose priority is not strictly below `rho`. This is the work
/// that can hold up a thread at `rho` under a prompt scheduler, which
/// includes the thread's equal-priority peers.
pub fn work_not_below(g: &CostDag, rho: &Name) -> usize {
    g.threads
        .values()
        .filter(|t| !g.order.lt(&t.prio, rho))
        .map(|t| t.vertices.len())
        .sum()
}

/// Longest path ending at the last vertex of `a`.
pub fn a_span(g: &CostDag, a: &str) -> Result<usize, DagError> {
    let graph = g.graph()?;
    let ti = graph
        .thread_index(a)
        .ok_or_else(|| DagError::UnknownThread(a.to_string()))?;
    let &last = graph.thread_vertices[ti]
        .last()
        .ok_or_else(|| DagError::EmptyThread(a.to_string()))?;
    Ok(graph.depth()[last])
}

/// `g` without the proper ancestors of `a`'s first vertex and the proper
/// descendants of its last.
pub fn competitor_work(g: &CostDag, a: &str) -> Result<CostDag, DagError> {
    let graph = g.graph()?;
    let ti = graph
        .thread_index(a)
        .ok_or_else(|| DagError::UnknownThread(a.to_string()))?;
    let vs = &graph.thread_vertices[ti];
    let (Some(&first), Some(&last)) = (vs.first(), vs.last()) else {
        return Ok(g.clone());
    };
    let before = graph.ancestors(first);
    let after = graph.descendants(last);
    let keep: BTreeSet<usize> = (0..graph.len())
        .filter(|&v| (v == first || !before[v]) && (v == last || !after[v]))
        .map(|v| graph.ids[v])
        .collect();
    let mut out = g.clone();
    let mut gone = BTreeSet::new();
    for (name, t) in out.threads.iter_mut() {
        if t.vertices.is_empty() {
            if let Some(u) = g.join_source(name) {
                if !keep.contains(&u) {
                    gone.insert(name.clone());
                }
            }
        } else {
            t.vertices.retain(|v| keep.contains(v));
            if t.vertices.is_empty() {
                gone.insert(name.clone());
            }
        }
    }
    // A kept thread that lost vertices lost either a prefix (so its spawn
    // vertex is gone too) or a suffix (so every join target from it is gone).
    out.threads.retain(|n, _| !gone.contains(n));
    out.join_edges
        .retain(|(b, u)| keep.contains(u) && !gone.contains(b));
    out.spawn_edges
        .retain(|(u, c)| keep.contains(u) && !gone.contains(c));
    Ok(out)
}

/// Why a graph fails a well-formedness check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WfViolation {
    /// `vertex` (of lower priority `prio`) must run while `thread` is live.
    Inversion {
        thread: String,
        vertex: usize,
        prio: Name,
    },
    /// A join from `src` into `thread` where `thread`'s priority is not below `src`'s.
    JoinInversion {
        src: String,
        thread: String,
        vertex: usize,
    },
    /// No path from the spawn of `src` to the join at `vertex` starting with a thread edge.
    NoLineagePath {
        src: String,
        spawn: usize,
        vertex: usize,
    },
}

pub fn check_well_formed(g: &CostDag) -> Result<Result<(), WfViolation>, DagError> {
    let graph = g.graph()?;
    for (ti, vs) in graph.thread_vertices.iter().enumerate() {
        let (Some(&first), Some(&last)) = (vs.first(), vs.last()) else {
            continue;
        };
        let rho = graph.thread_prio[ti];
        let upto_last = graph.ancestors(last);
        let upto_first = graph.ancestors(first);
        for u in 0..graph.len() {
            if upto_last[u] && !upto_first[u] && !g.order.le_idx(rho, graph.prio_of(u)) {
                return Ok(Err(WfViolation::Inversion {
                    thread: graph.thread_names[ti].clone(),
                    vertex: graph.ids[u],
                    prio: g.order.consts()[graph.prio_of(u)].clone(),
                }));
            }
        }
    }
    Ok(Ok(()))
}

pub fn check_strongly_well_formed(g: &CostDag) -> Result<Result<(), WfViolation>, DagError> {
    let graph = g.graph()?;
    let dense: BTreeMap<usize, usize> =
        graph.ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    for (src, u) in &g.join_edges {
        let &ud = dense.get(u).ok_or(DagError::UnknownVertex(*u))?;
        let si = graph
            .thread_index(src)
            .ok_or_else(|| DagError::UnknownThread(src.clone()))?;
        let bi = graph.owner[ud];
        if !g.order.le_idx(graph.thread_prio[bi], graph.thread_prio[si]) {
            return Ok(Err(WfViolation::JoinInversion {
                src: src.clone(),
                thread: graph.thread_names[bi].clone(),
                vertex: *u,
            }));
        }
        for (sp, _) in g.spawn_edges.iter().filter(|(_, c)| c == src) {
            let spd = dense[sp];
            let chain = &graph.thread_vertices[graph.owner[spd]];
            let pos = chain.iter().position(|&v| v == spd).unwrap();
            let ok = chain
                .get(pos + 1)
                .is_some_and(|&next| graph.ancestors(ud)[next]);
            if !ok {
                return Ok(Err(WfViolation::NoLineagePath {
                    src: src.clone(),
                    spawn: *sp,
                    vertex: *u,
                }));
            }
        }
    }
    Ok(Ok(()))
}
