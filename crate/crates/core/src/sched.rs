//! Offline schedules of cost DAGs and the response-time bounds they obey.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ast::Name;
use crate::dag::{
    a_span, check_well_formed, competitor_work, priority_work, work_not_below, CostDag, DagError,
    Graph,
};
use crate::prio::PartialOrder;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchedError {
    #[error(transparent)]
    Dag(#[from] DagError),
    #[error("thread {0} is not in the graph")]
    ThreadNotInGraph(String),
    #[error("invalid schedule: {0}")]
    Invalid(String),
    #[error("the graph is not well-formed: {0}")]
    NotWellFormed(String),
    #[error("criterion gives priorities at or above {0} no mass")]
    ZeroMass(Name),
    #[error("bad criterion: {0}")]
    BadCriterion(String),
    #[error("{0} vertices is too many for exhaustive search (limit 14)")]
    TooLarge(usize),
}

/// Vertex ids executed at each step; step `i` of the vector is time `i + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub procs: usize,
    pub steps: Vec<Vec<usize>>,
}

impl Schedule {
    /// Time at which each vertex id ran.
    pub fn times(&self) -> BTreeMap<usize, usize> {
        let mut m = BTreeMap::new();
        for (i, s) in self.steps.iter().enumerate() {
            for &v in s {
                m.insert(v, i + 1);
            }
        }
        m
    }

    /// Builds a schedule from (thread, index) pairs per step.
    pub fn from_positions(
        g: &CostDag,
        procs: usize,
        steps: &[Vec<(String, usize)>],
    ) -> Result<Schedule, SchedError> {
        let steps = steps
            .iter()
            .map(|s| {
                s.iter()
                    .map(|(t, i)| {
                        g.vertex(t, *i).ok_or_else(|| {
                            SchedError::Invalid(format!("no vertex {t}:{i} in the graph"))
                        })
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        Ok(Schedule { procs, steps })
    }
}

struct Dense<'g> {
    g: &'g Graph,
    order: &'g PartialOrder,
}

impl Dense<'_> {
    fn higher(&self, a: usize, b: usize) -> bool {
        self.order.lt_idx(self.g.prio_of(b), self.g.prio_of(a))
    }
}

fn dense_steps(g: &Graph, s: &Schedule) -> Result<Vec<Vec<usize>>, SchedError> {
    let index: BTreeMap<usize, usize> = g.ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    s.steps
        .iter()
        .map(|st| {
            st.iter()
                .map(|v| {
                    index
                        .get(v)
                        .copied()
                        .ok_or_else(|| SchedError::Invalid(format!("unknown vertex {v}")))
                })
                .collect()
        })
        .collect()
}

/// Checks that every vertex runs exactly once, after all its parents, with at most `procs` per step.
pub fn validate(dag: &CostDag, s: &Schedule) -> Result<(), SchedError> {
    let g = dag.graph()?;
    let steps = dense_steps(&g, s)?;
    let mut time = vec![0usize; g.len()];
    for (i, st) in steps.iter().enumerate() {
        if st.len() > s.procs {
            return Err(SchedError::Invalid(format!(
                "step {} runs {} vertices on {} processors",
                i + 1,
                st.len(),
                s.procs
            )));
        }
        for &v in st {
            if time[v] != 0 {
                return Err(SchedError::Invalid(format!(
                    "vertex {} runs twice",
                    g.ids[v]
                )));
            }
            time[v] = i + 1;
        }
    }
    if let Some(v) = (0..g.len()).find(|&v| time[v] == 0) {
        return Err(SchedError::Invalid(format!(
            "vertex {} never runs",
            g.ids[v]
        )));
    }
    for v in 0..g.len() {
        for &p in &g.pred[v] {
            if time[p] >= time[v] {
                return Err(SchedError::Invalid(format!(
                    "vertex {} runs before its parent {}",
                    g.ids[v], g.ids[p]
                )));
            }
        }
    }
    Ok(())
}

/// Checks greediness and promptness step by step: no processor idles while
/// a vertex is ready, and no ready vertex waits while one of strictly lower
/// priority runs.
pub fn check_prompt(dag: &CostDag, s: &Schedule) -> Result<(), SchedError> {
    validate(dag, s)?;
    let g = dag.graph()?;
    let d = Dense {
        g: &g,
        order: &dag.order,
    };
    let steps = dense_steps(&g, s)?;
    let mut done = vec![false; g.len()];
    for (i, st) in steps.iter().enumerate() {
        let ready: Vec<usize> = (0..g.len())
            .filter(|&v| !done[v] && g.pred[v].iter().all(|&p| done[p]))
            .collect();
        let chosen: BTreeSet<usize> = st.iter().copied().collect();
        if chosen.len() < s.procs.min(ready.len()) {
            return Err(SchedError::Invalid(format!("step {} is not greedy", i + 1)));
        }
        for &w in ready.iter().filter(|w| !chosen.contains(w)) {
            if let Some(&u) = chosen.iter().find(|&&u| d.higher(w, u)) {
                return Err(SchedError::Invalid(format!(
                    "step {}: vertex {} waits while lower-priority {} runs",
                    i + 1,
                    g.ids[w],
                    g.ids[u]
                )));
            }
        }
        for &v in st {
            done[v] = true;
        }
    }
    Ok(())
}

struct Sim<'g> {
    g: &'g Graph,
    order: &'g PartialOrder,
    done: Vec<bool>,
    missing: Vec<usize>,
    ready: BTreeSet<usize>,
}

impl<'g> Sim<'g> {
    fn new(g: &'g Graph, order: &'g PartialOrder) -> Self {
        let missing: Vec<usize> = g.pred.iter().map(Vec::len).collect();
        let ready = (0..g.len()).filter(|&v| missing[v] == 0).collect();
        Sim {
            g,
            order,
            done: vec![false; g.len()],
            missing,
            ready,
        }
    }

    fn finished(&self) -> bool {
        self.ready.is_empty()
    }

    fn complete(&mut self, step: &[usize]) {
        for &v in step {
            self.done[v] = true;
            for &w in &self.g.succ[v] {
                self.missing[w] -= 1;
                if self.missing[w] == 0 {
                    self.ready.insert(w);
                }
            }
        }
    }

    /// Ready vertices not strictly below another ready vertex.
    fn maximal(&self, pool: &BTreeSet<usize>) -> Vec<usize> {
        pool.iter()
            .copied()
            .filter(|&v| {
                !pool
                    .iter()
                    .any(|&w| self.order.lt_idx(self.g.prio_of(v), self.g.prio_of(w)))
            })
            .collect()
    }

    fn pick_prompt(
        &self,
        pool: &BTreeSet<usize>,
        rng: &mut ChaCha8Rng,
        det: bool,
    ) -> Option<usize> {
        let cands = self.maximal(pool);
        if cands.is_empty() {
            return None;
        }
        if det {
            cands
                .into_iter()
                .max_by_key(|&v| (self.order.rank_idx(self.g.prio_of(v)), std::cmp::Reverse(v)))
        } else {
            Some(cands[rng.gen_range(0..cands.len())])
        }
    }
}

fn to_ids(g: &Graph, steps: Vec<Vec<usize>>, procs: usize) -> Schedule {
    Schedule {
        procs,
        steps: steps
            .into_iter()
            .map(|s| s.into_iter().map(|v| g.ids[v]).collect())
            .collect(),
    }
}

/// A greedy prompt schedule; ties between incomparable maximal candidates
/// are broken by `seed`, or by rank then vertex id when `det` is set.
pub fn prompt_schedule(
    dag: &CostDag,
    procs: usize,
    seed: u64,
    det: bool,
) -> Result<Schedule, SchedError> {
    let g = dag.graph()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sim = Sim::new(&g, &dag.order);
    let mut steps = Vec::new();
    while !sim.finished() {
        let mut pool = sim.ready.clone();
        let mut step = Vec::new();
        while step.len() < procs {
            let Some(v) = sim.pick_prompt(&pool, &mut rng, det) else {
                break;
            };
            pool.remove(&v);
            step.push(v);
        }
        for v in &step {
            sim.ready.remove(v);
        }
        sim.complete(&step);
        steps.push(step);
    }
    Ok(to_ids(&g, steps, procs))
}

/// A probability distribution over priority constants.
#[derive(Clone, Debug, PartialEq)]
pub struct FairnessCriterion {
    pub weights: BTreeMap<Name, f64>,
}

impl FairnessCriterion {
    pub fn new(weights: BTreeMap<Name, f64>, order: &PartialOrder) -> Result<Self, SchedError> {
        for (p, &w) in &weights {
            if !order.contains(p) {
                return Err(SchedError::BadCriterion(format!("unknown priority {p}")));
            }
            if !(0.0..=1.0).contains(&w) {
                return Err(SchedError::BadCriterion(format!(
                    "weight {w} for {p} is outside [0, 1]"
                )));
            }
        }
        let total: f64 = weights.values().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(SchedError::BadCriterion(format!("weights sum to {total}")));
        }
        Ok(FairnessCriterion { weights })
    }

    /// Parses `p=0.6,q=0.4`.
    pub fn parse(text: &str, order: &PartialOrder) -> Result<Self, SchedError> {
        let mut weights = BTreeMap::new();
        for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (p, w) = part.split_once('=').ok_or_else(|| {
                SchedError::BadCriterion(format!("expected PRIO=WEIGHT, found {part:?}"))
            })?;
            let w: f64 = w
                .trim()
                .parse()
                .map_err(|_| SchedError::BadCriterion(format!("bad weight {w:?}")))?;
            *weights.entry(Name::new(p.trim())).or_insert(0.0) += w;
        }
        Self::new(weights, order)
    }

    pub fn point_mass(p: &Name) -> Self {
        FairnessCriterion {
            weights: BTreeMap::from([(p.clone(), 1.0)]),
        }
    }

    /// Total weight of priorities at or above `rho`.
    pub fn mass_at_least(&self, order: &PartialOrder, rho: &Name) -> f64 {
        self.weights
            .iter()
            .filter(|(p, _)| order.le(rho, p))
            .map(|(_, w)| w)
            .sum()
    }

    fn draw(&self, order: &PartialOrder, rng: &mut ChaCha8Rng) -> usize {
        let x: f64 = rng.gen();
        let mut acc = 0.0;
        let mut last = None;
        for (p, &w) in &self.weights {
            if w <= 0.0 {
                continue;
            }
            acc += w;
            last = order.index_of(p);
            if x < acc {
                return last.unwrap();
            }
        }
        last.expect("criterion has positive mass")
    }
}

/// Each step, every processor draws a priority from `criterion` and runs a
/// ready vertex of that priority if there is one, else a prompt choice.
pub fn fair_prompt_schedule(
    dag: &CostDag,
    procs: usize,
    criterion: &FairnessCriterion,
    seed: u64,
) -> Result<Schedule, SchedError> {
    let g = dag.graph()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sim = Sim::new(&g, &dag.order);
    let mut steps = Vec::new();
    while !sim.finished() {
        let mut pool = sim.ready.clone();
        let mut step = Vec::new();
        for _ in 0..procs {
            if pool.is_empty() {
                break;
            }
            let want = criterion.draw(&dag.order, &mut rng);
            let at: Vec<usize> = pool
                .iter()
                .copied()
                .filter(|&v| g.prio_of(v) == want)
                .collect();
            let v = if at.is_empty() {
                sim.pick_prompt(&pool, &mut rng, false).unwrap()
            } else {
                at[rng.gen_range(0..at.len())]
            };
            pool.remove(&v);
            step.push(v);
        }
        for v in &step {
            sim.ready.remove(v);
        }
        sim.complete(&step);
        steps.push(step);
    }
    Ok(to_ids(&g, steps, procs))
}

/// Steps from when `a`'s first vertex becomes ready (exclusive) to when its
/// last vertex runs (inclusive). A thread with no vertices takes no time.
pub fn response_time(dag: &CostDag, s: &Schedule, a: &str) -> Result<usize, SchedError> {
    let t = dag
        .threads
        .get(a)
        .ok_or_else(|| SchedError::ThreadNotInGraph(a.to_string()))?;
    let (Some(&first), Some(&last)) = (t.vertices.first(), t.vertices.last()) else {
        return Ok(0);
    };
    let g = dag.graph()?;
    let times = s.times();
    let index: BTreeMap<usize, usize> = g.ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let time = |v: usize| {
        times
            .get(&v)
            .copied()
            .ok_or_else(|| SchedError::Invalid(format!("vertex {v} never runs")))
    };
    let mut ready = 0;
    for &p in &g.pred[index[&first]] {
        ready = ready.max(time(g.ids[p])?);
    }
    Ok(time(last)? - ready)
}

pub fn response_times(dag: &CostDag, s: &Schedule) -> Result<BTreeMap<String, usize>, SchedError> {
    dag.threads
        .keys()
        .map(|a| Ok((a.clone(), response_time(dag, s, a)?)))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub thread: String,
    pub procs: usize,
    /// Observed response time.
    pub lhs: usize,
    /// Competitor work not below the thread's priority.
    pub work: usize,
    /// Competitor work under the literal not-at-or-below reading.
    pub literal_work: usize,
    pub span: usize,
    /// `work / procs + span`
    pub rhs: f64,
    pub holds: bool,
}

/// Compares `a`'s response time in `s` with work/P + a-span over its
/// competitor work, in exact integer arithmetic.
pub fn check_bound(
    dag: &CostDag,
    a: &str,
    procs: usize,
    s: &Schedule,
) -> Result<BoundReport, SchedError> {
    if let Err(w) = check_well_formed(dag)? {
        return Err(SchedError::NotWellFormed(format!("{w:?}")));
    }
    bound_report(dag, a, procs, s)
}

/// [`check_bound`] without the well-formedness precondition.
pub fn bound_report(
    dag: &CostDag,
    a: &str,
    procs: usize,
    s: &Schedule,
) -> Result<BoundReport, SchedError> {
    let info = dag
        .threads
        .get(a)
        .ok_or_else(|| SchedError::ThreadNotInGraph(a.to_string()))?;
    let lhs = response_time(dag, s, a)?;
    let comp = competitor_work(dag, a)?;
    let work = work_not_below(&comp, &info.prio);
    let literal_work = priority_work(&comp, &info.prio);
    let span = if info.vertices.is_empty() {
        0
    } else {
        a_span(&comp, a)?
    };
    Ok(BoundReport {
        thread: a.to_string(),
        procs,
        lhs,
        work,
        literal_work,
        span,
        rhs: work as f64 / procs as f64 + span as f64,
        holds: procs * lhs <= work + procs * span,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct FairReport {
    pub thread: String,
    pub trials: usize,
    pub mean: f64,
    pub std_err: f64,
    pub mass: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Monte-Carlo mean of `a`'s response time under fair schedules against
/// `(W/P + span) / C(>= rho')`, with three standard errors of slack.
#[allow(clippy::too_many_arguments)]
pub fn check_fair_bound(
    dag: &CostDag,
    a: &str,
    procs: usize,
    criterion: &FairnessCriterion,
    rho_prime: &Name,
    trials: usize,
    seed: u64,
) -> Result<FairReport, SchedError> {
    let (mass, rhs) = fair_bound_rhs(dag, a, procs, criterion, rho_prime)?;
    let samples = fair_samples(dag, a, procs, criterion, trials, seed)?;
    let (mean, std_err) = mean_se(&samples);
    Ok(FairReport {
        thread: a.to_string(),
        trials,
        mean,
        std_err,
        mass,
        rhs,
        holds: mean <= rhs + 3.0 * std_err,
    })
}

/// The mass `C(>= rho')` and the right-hand side of the fair bound.
pub fn fair_bound_rhs(
    dag: &CostDag,
    a: &str,
    procs: usize,
    criterion: &FairnessCriterion,
    rho_prime: &Name,
) -> Result<(f64, f64), SchedError> {
    let info = dag
        .threads
        .get(a)
        .ok_or_else(|| SchedError::ThreadNotInGraph(a.to_string()))?;
    if !dag.order.le(rho_prime, &info.prio) {
        return Err(SchedError::BadCriterion(format!(
            "{rho_prime} is not at or below {}",
            info.prio
        )));
    }
    let mass = criterion.mass_at_least(&dag.order, rho_prime);
    if mass <= 0.0 {
        return Err(SchedError::ZeroMass(rho_prime.clone()));
    }
    let comp = competitor_work(dag, a)?;
    let work = work_not_below(&comp, rho_prime);
    let span = if info.vertices.is_empty() {
        0
    } else {
        a_span(&comp, a)?
    };
    Ok((mass, (work as f64 / procs as f64 + span as f64) / mass))
}

/// Response times of `a` over `trials` fair schedules.
pub fn fair_samples(
    dag: &CostDag,
    a: &str,
    procs: usize,
    criterion: &FairnessCriterion,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, SchedError> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let s = fair_prompt_schedule(dag, procs, criterion, master.gen())?;
            Ok(response_time(dag, &s, a)? as f64)
        })
        .collect()
}

/// Response times of `a` over `trials` randomized prompt schedules.
pub fn prompt_samples(
    dag: &CostDag,
    a: &str,
    procs: usize,
    trials: usize,
    seed: u64,
) -> Result<Vec<f64>, SchedError> {
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|_| {
            let s = prompt_schedule(dag, procs, master.gen(), false)?;
            Ok(response_time(dag, &s, a)? as f64)
        })
        .collect()
}

pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// A random spawn tree whose joins all respect the order and go either to
/// the spawner after the spawn or to a later sibling, so that the result is
/// strongly well-formed by construction.
pub fn random_wellformed_dag(
    n_threads: usize,
    max_len: usize,
    store: &PartialOrder,
    seed: u64,
) -> CostDag {
    assert!(n_threads >= 1 && max_len >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let consts = store.consts();
    struct T {
        name: String,
        prio: usize,
        len: usize,
        parent: Option<(usize, usize)>,
        used: BTreeSet<usize>,
    }
    let mut ts = vec![T {
        name: "main".into(),
        prio: rng.gen_range(0..consts.len()),
        len: rng.gen_range(1..=max_len),
        parent: None,
        used: BTreeSet::new(),
    }];
    while ts.len() < n_threads {
        let open: Vec<usize> = (0..ts.len())
            .filter(|&i| ts[i].used.len() < ts[i].len)
            .collect();
        let Some(&p) = open.get(rng.gen_range(0..open.len().max(1))) else {
            break;
        };
        let free: Vec<usize> = (0..ts[p].len).filter(|k| !ts[p].used.contains(k)).collect();
        let k = free[rng.gen_range(0..free.len())];
        ts[p].used.insert(k);
        ts.push(T {
            name: format!("{}.{k}", ts[p].name),
            prio: rng.gen_range(0..consts.len()),
            len: rng.gen_range(1..=max_len),
            parent: Some((p, k)),
            used: BTreeSet::new(),
        });
    }
    let mut g = CostDag::new(store.clone());
    for t in &ts {
        g.add_chain(&t.name, &consts[t.prio], t.len)
            .expect("fresh names");
    }
    for t in &ts {
        if let Some((p, k)) = t.parent {
            g.add_spawn(&ts[p].name, k, &t.name).expect("vertex exists");
        }
    }
    for (ai, a) in ts.iter().enumerate() {
        let Some((p, k)) = a.parent else { continue };
        let mut targets: Vec<(usize, usize)> = Vec::new();
        if store.le_idx(ts[p].prio, a.prio) {
            targets.extend((k + 1..ts[p].len).map(|j| (p, j)));
        }
        for (ci, c) in ts.iter().enumerate() {
            if ci != ai
                && c.parent.is_some_and(|(q, kc)| q == p && kc > k)
                && store.le_idx(c.prio, a.prio)
            {
                targets.extend((0..c.len).map(|j| (ci, j)));
            }
        }
        let joins = rng.gen_range(0..=2usize).min(targets.len());
        for _ in 0..joins {
            let (ti, j) = targets[rng.gen_range(0..targets.len())];
            g.add_join(&a.name, &ts[ti].name, j).expect("vertex exists");
        }
    }
    g
}

/// The smallest response time of `a` over every valid schedule on `procs`
/// processors, greedy or not. Exponential; limited to 14 vertices.
pub fn exhaustive_min_response(dag: &CostDag, a: &str, procs: usize) -> Result<usize, SchedError> {
    if !dag.threads.contains_key(a) {
        return Err(SchedError::ThreadNotInGraph(a.to_string()));
    }
    let g = dag.graph()?;
    if g.len() > 14 {
        return Err(SchedError::TooLarge(g.len()));
    }
    let ti = g.thread_index(a).unwrap();
    let (Some(&first), Some(&last)) = (g.thread_vertices[ti].first(), g.thread_vertices[ti].last())
    else {
        return Ok(0);
    };
    let pred_mask: Vec<u32> = g
        .pred
        .iter()
        .map(|ps| ps.iter().fold(0, |m, &p| m | 1 << p))
        .collect();
    let first_parents = pred_mask[first];
    // A state is the executed set and the latest time a parent of `first` ran.
    let mut frontier: Vec<(u32, usize)> = vec![(0, 0)];
    let mut seen: HashSet<(u32, usize)> = frontier.iter().copied().collect();
    let mut best = usize::MAX;
    let mut depth = 0;
    while !frontier.is_empty() {
        depth += 1;
        let mut next = Vec::new();
        for &(mask, r) in &frontier {
            let ready: Vec<usize> = (0..g.len())
                .filter(|&v| mask & (1 << v) == 0 && pred_mask[v] & !mask == 0)
                .collect();
            let n = ready.len();
            for sub in 1u32..(1 << n) {
                if sub.count_ones() as usize > procs {
                    continue;
                }
                let mut m2 = mask;
                for (i, &v) in ready.iter().enumerate() {
                    if sub & (1 << i) != 0 {
                        m2 |= 1 << v;
                    }
                }
                let hits_parent = (m2 & !mask) & first_parents != 0;
                let r2 = if hits_parent { depth } else { r };
                if m2 & (1 << last) != 0 {
                    best = best.min(depth - r2);
                    continue;
                }
                if seen.insert((m2, r2)) {
                    next.push((m2, r2));
                }
            }
        }
        frontier = next;
    }
    Ok(best)
}
