//! Multi-processor execution of closed commands.
//!
//! Each processor keeps one deque per priority. Every global step balances
//! work between processors, lets each processor pick its best local thread,
//! then repairs the selection globally so that it is prompt: no waiting thread
//! sits strictly above a running one, and no processor idles while work waits.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt::{self, Display, Write as _};

use num_bigint::BigUint;
use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ast::{Cmd, Expr, Name, Priority, Type};
use crate::eval::{poll, step_cmd, Action, Io, NullIo, Poll, StepError};
use crate::prio::PartialOrder;
use crate::typeck::{type_action, type_threadpool, PoolTerm, Signature};

pub const DEFAULT_FUEL: u64 = 10_000_000;

/// Step budget from `PRIML_FUEL`, else [`DEFAULT_FUEL`].
pub fn fuel_from_env() -> u64 {
    std::env::var("PRIML_FUEL")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_FUEL)
}

/// Which priority slot a processor offers when balancing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Deal {
    #[default]
    Uniform,
    Lowest,
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub procs: usize,
    pub seed: u64,
    pub join_all: bool,
    pub audit: bool,
    pub deal: Deal,
    pub fuel: u64,
    pub inputs: Vec<BigUint>,
    pub trace: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            procs: 1,
            seed: 0,
            join_all: false,
            audit: false,
            deal: Deal::Uniform,
            fuel: DEFAULT_FUEL,
            inputs: Vec::new(),
            trace: false,
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum RunError {
    #[error("stuck at step {step} in thread {thread}: {msg}")]
    Stuck {
        step: u64,
        thread: Name,
        msg: String,
    },
    #[error("deadlock at step {step}: {}", fmt_waits(.waiting))]
    Deadlock {
        step: u64,
        waiting: Vec<(Name, Name)>,
    },
    #[error("fuel exhausted after {steps} steps")]
    FuelExhausted { steps: u64 },
    #[error("audit failed at step {step}: {msg}")]
    Audit { step: u64, msg: String },
    #[error("invalid program: {0}")]
    Invalid(String),
}

fn fmt_waits(w: &[(Name, Name)]) -> String {
    w.iter()
        .map(|(a, b)| format!("{a} waits on {b}"))
        .collect::<Vec<_>>()
        .join(", ")
}

/// Per-thread outcome.
#[derive(Clone, Debug)]
pub struct ThreadReport {
    pub id: Name,
    /// Spawn-tree name: `main`, then `parent.k` for a spawn at vertex `k`.
    pub lineage: String,
    pub prio: Name,
    pub steps: usize,
    pub ready_step: Option<u64>,
    pub last_step: Option<u64>,
    pub value: Option<Expr>,
}

impl ThreadReport {
    /// Steps from first becoming runnable to the last executed step.
    pub fn response_time(&self) -> Option<u64> {
        match (self.ready_step, self.last_step) {
            (Some(r), Some(l)) => Some(l.saturating_sub(r)),
            (Some(_), None) if self.steps == 0 => Some(0),
            _ => None,
        }
    }
}

/// One line of the execution trace.
#[derive(Clone, Debug)]
pub struct TraceEvent {
    pub step: u64,
    pub proc: usize,
    pub thread: Name,
    pub action: Action,
    pub spawned: Option<Name>,
    pub done: Option<Expr>,
}

impl Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} ", self.step, self.proc, self.thread)?;
        match &self.action {
            Action::SyncFrom(b, v) => write!(f, "sync({b},{v})")?,
            _ => f.write_str("eps")?,
        }
        if let Some(c) = &self.spawned {
            write!(f, " spawn({c})")?;
        }
        if let Some(v) = &self.done {
            write!(f, " done({v})")?;
        }
        Ok(())
    }
}

/// An executed vertex: which thread (by lineage) and its index in the thread.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Executed {
    pub proc: usize,
    pub lineage: String,
    pub vertex: usize,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub value: Option<Expr>,
    pub outputs: Vec<BigUint>,
    pub steps: u64,
    pub threads: Vec<ThreadReport>,
    /// Vertices executed at each step, in processor order.
    pub schedule: Vec<Vec<Executed>>,
    pub trace: Vec<TraceEvent>,
    /// `input` values consumed, keyed by where they were read.
    pub inputs: Vec<(String, usize, BigUint)>,
    pub warnings: Vec<String>,
}

impl RunResult {
    pub fn thread(&self, lineage: &str) -> Option<&ThreadReport> {
        self.threads.iter().find(|t| t.lineage == lineage)
    }

    /// Multi-line summary for `--stats`.
    pub fn stats(&self, procs: usize) -> String {
        let busy: usize = self.schedule.iter().map(Vec::len).sum();
        let mut s = String::new();
        let _ = writeln!(s, "steps: {}", self.steps);
        let _ = writeln!(s, "threads: {}", self.threads.len());
        let _ = writeln!(s, "work: {busy}");
        if self.steps > 0 {
            let util = busy as f64 / (self.steps as f64 * procs as f64);
            let _ = writeln!(s, "utilization: {util:.3}");
        }
        for t in &self.threads {
            let rt = t.response_time().map_or("-".to_string(), |r| r.to_string());
            let _ = writeln!(
                s,
                "thread {} ({}) prio {} steps {} response {}",
                t.id, t.lineage, t.prio, t.steps, rt
            );
        }
        s
    }
}

struct Thread {
    id: Name,
    lineage: String,
    prio: usize,
    ret: Type,
    cmd: Cmd,
    value: Option<Expr>,
    steps: usize,
    ready_step: Option<u64>,
    last_step: Option<u64>,
}

struct QueueIo<'a> {
    inputs: &'a mut VecDeque<BigUint>,
    outputs: &'a mut Vec<BigUint>,
    log: &'a mut Vec<(String, usize, BigUint)>,
    warnings: &'a mut Vec<String>,
    at: (String, usize),
}

impl Io for QueueIo<'_> {
    fn input(&mut self) -> BigUint {
        let v = self.inputs.pop_front().unwrap_or_else(|| {
            self.warnings.push(format!(
                "input exhausted at {}:{}, reading 0",
                self.at.0, self.at.1
            ));
            BigUint::zero()
        });
        self.log.push((self.at.0.clone(), self.at.1, v.clone()));
        v
    }

    fn output(&mut self, n: &BigUint) {
        self.outputs.push(n.clone());
    }
}

struct Machine<'s> {
    store: &'s PartialOrder,
    cfg: RunConfig,
    rng: ChaCha8Rng,
    threads: Vec<Thread>,
    by_id: HashMap<Name, usize>,
    /// `deques[proc][prio]`
    deques: Vec<Vec<VecDeque<usize>>>,
    waiters: BTreeMap<Name, Vec<usize>>,
    sig: Signature,
    step: u64,
    next_id: u64,
    inputs: VecDeque<BigUint>,
    outputs: Vec<BigUint>,
    input_log: Vec<(String, usize, BigUint)>,
    warnings: Vec<String>,
    schedule: Vec<Vec<Executed>>,
    trace: Vec<TraceEvent>,
}

impl<'s> Machine<'s> {
    fn prio_index(&self, p: &Priority) -> Result<usize, RunError> {
        match p {
            Priority::Const(n) => self
                .store
                .index_of(n)
                .ok_or_else(|| RunError::Invalid(format!("unknown priority {n}"))),
            Priority::Var(v) => Err(RunError::Invalid(format!(
                "thread at priority variable {v}"
            ))),
        }
    }

    fn add_thread(
        &mut self,
        id: Name,
        lineage: String,
        prio: &Priority,
        ret: Type,
        cmd: Cmd,
    ) -> Result<usize, RunError> {
        let pi = self.prio_index(prio)?;
        self.sig.insert(id.clone(), ret.clone(), prio.clone());
        let idx = self.threads.len();
        self.by_id.insert(id.clone(), idx);
        self.threads.push(Thread {
            id,
            lineage,
            prio: pi,
            ret,
            cmd,
            value: None,
            steps: 0,
            ready_step: None,
            last_step: None,
        });
        Ok(idx)
    }

    fn pending(&self, p: usize) -> usize {
        self.deques[p].iter().map(VecDeque::len).sum()
    }

    fn balance(&mut self) {
        let n = self.cfg.procs;
        if n < 2 {
            return;
        }
        for p in 0..n {
            if self.pending(p) < 2 {
                continue;
            }
            let mut q = self.rng.gen_range(0..n - 1);
            if q >= p {
                q += 1;
            }
            let slots: Vec<usize> = (0..self.store.len())
                .filter(|&s| !self.deques[p][s].is_empty())
                .collect();
            let slot = match self.cfg.deal {
                Deal::Uniform => slots[self.rng.gen_range(0..slots.len())],
                Deal::Lowest => *slots
                    .iter()
                    .min_by_key(|&&s| self.store.rank_idx(s))
                    .unwrap(),
            };
            if self.deques[q][slot].is_empty() {
                let t = self.deques[p][slot].pop_front().unwrap();
                self.deques[q][slot].push_back(t);
            }
        }
    }

    /// Location of the best waiting thread, by rank then processor.
    fn best_waiting(&self, above: Option<usize>) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, usize)> = None;
        for (p, dq) in self.deques.iter().enumerate() {
            for (s, d) in dq.iter().enumerate() {
                if d.is_empty() {
                    continue;
                }
                if let Some(y) = above {
                    if !self.store.lt_idx(y, s) {
                        continue;
                    }
                }
                let r = self.store.rank_idx(s);
                if best.is_none_or(|(br, _, _)| r > br) {
                    best = Some((r, p, s));
                }
            }
        }
        best.map(|(_, p, s)| (p, s))
    }

    fn select(&mut self) -> Vec<Option<usize>> {
        let n = self.cfg.procs;
        let mut chosen: Vec<Option<usize>> = (0..n)
            .map(|p| {
                let s = (0..self.store.len())
                    .filter(|&s| !self.deques[p][s].is_empty())
                    .max_by_key(|&s| self.store.rank_idx(s))?;
                self.deques[p][s].pop_back()
            })
            .collect();
        for slot in chosen.iter_mut().filter(|c| c.is_none()) {
            if let Some((q, s)) = self.best_waiting(None) {
                *slot = self.deques[q][s].pop_back();
            }
        }
        // Each swap raises the rank sum of the selection, so this terminates.
        loop {
            let mut swapped = false;
            for (p, slot) in chosen.iter_mut().enumerate() {
                let Some(y) = *slot else { continue };
                if let Some((q, s)) = self.best_waiting(Some(self.threads[y].prio)) {
                    let x = self.deques[q][s].pop_back().unwrap();
                    let ys = self.threads[y].prio;
                    self.deques[p][ys].push_back(y);
                    *slot = Some(x);
                    swapped = true;
                }
            }
            if !swapped {
                break;
            }
        }
        chosen
    }

    fn execute(&mut self, proc: usize, t: usize) -> Result<Option<usize>, RunError> {
        let step = self.step;
        let vertex = self.threads[t].steps;
        let lineage = self.threads[t].lineage.clone();
        let cur = self.threads[t].cmd.clone();
        let mut next_id = self.next_id;
        let mut fresh = || {
            next_id += 1;
            Name::from(format!("t{next_id}"))
        };
        let res = {
            let threads = &self.threads;
            let by_id = &self.by_id;
            let retained = |b: &Name| by_id.get(b).and_then(|&i| threads[i].value.clone());
            let mut io = QueueIo {
                inputs: &mut self.inputs,
                outputs: &mut self.outputs,
                log: &mut self.input_log,
                warnings: &mut self.warnings,
                at: (lineage.clone(), vertex),
            };
            step_cmd(&cur, retained, &mut fresh, &mut io)
        };
        self.next_id = next_id;
        let res = res.map_err(|e| RunError::Stuck {
            step,
            thread: self.threads[t].id.clone(),
            msg: match e {
                StepError::Stuck(m) => m,
                StepError::Blocked(b) => format!("scheduled while blocked on {b}"),
            },
        })?;
        if self.cfg.audit {
            type_action(self.store, &self.sig, &res.action).map_err(|e| RunError::Audit {
                step,
                msg: e.to_string(),
            })?;
        }
        {
            let th = &mut self.threads[t];
            th.cmd = res.cmd;
            th.steps += 1;
            th.last_step = Some(step);
        }
        self.schedule.last_mut().unwrap().push(Executed {
            proc,
            lineage: lineage.clone(),
            vertex,
        });
        let child = match res.spawned {
            Some(sp) => Some(self.add_thread(
                sp.id,
                format!("{lineage}.{vertex}"),
                &sp.prio,
                sp.ret,
                sp.cmd,
            )?),
            None => None,
        };
        if self.cfg.trace {
            self.trace.push(TraceEvent {
                step,
                proc,
                thread: self.threads[t].id.clone(),
                action: res.action,
                spawned: child.map(|c| self.threads[c].id.clone()),
                done: self.threads[t].cmd.finished_value().cloned(),
            });
        }
        Ok(child)
    }

    fn finish(&mut self, proc: usize, t: usize) -> Result<(), RunError> {
        let v = self.threads[t].cmd.finished_value().cloned().unwrap();
        let id = self.threads[t].id.clone();
        if self.cfg.audit {
            type_action(self.store, &self.sig, &Action::RetOf(id.clone(), v.clone())).map_err(
                |e| RunError::Audit {
                    step: self.step,
                    msg: e.to_string(),
                },
            )?;
        }
        let th = &mut self.threads[t];
        th.value = Some(v);
        th.ready_step.get_or_insert(self.step);
        th.last_step.get_or_insert(self.step);
        for w in self.waiters.remove(&id).unwrap_or_default() {
            self.wake(proc, w);
        }
        Ok(())
    }

    fn wake(&mut self, proc: usize, t: usize) {
        self.threads[t].ready_step.get_or_insert(self.step);
        let s = self.threads[t].prio;
        self.deques[proc][s].push_back(t);
    }

    fn park_or_enqueue(&mut self, proc: usize, t: usize) {
        let threads = &self.threads;
        let by_id = &self.by_id;
        let finished = |b: &Name| by_id.get(b).is_some_and(|&i| threads[i].value.is_some());
        match poll(&self.threads[t].cmd, finished) {
            Poll::Ready => self.wake(proc, t),
            Poll::Blocked(b) => self.waiters.entry(b).or_default().push(t),
            Poll::Finished(_) => unreachable!("finished threads are handled first"),
        }
    }

    fn audit(&self) -> Result<(), RunError> {
        let fail = |msg: String| RunError::Audit {
            step: self.step,
            msg,
        };
        let items = self
            .threads
            .iter()
            .map(|t| PoolTerm::Thread {
                id: t.id.clone(),
                prio: Priority::Const(self.store.consts()[t.prio].clone()),
                ret: t.ret.clone(),
                cmd: t
                    .value
                    .as_ref()
                    .map_or_else(|| t.cmd.clone(), |v| Cmd::ret(v.clone())),
            })
            .collect();
        let pool = PoolTerm::Extend(self.sig.clone(), Box::new(PoolTerm::concat_all(items)));
        let left = type_threadpool(self.store, &Signature::new(), &pool)
            .map_err(|e| fail(e.to_string()))?;
        if !left.is_empty() {
            return Err(fail("pool signature does not close".into()));
        }
        let finished = |b: &Name| {
            self.by_id
                .get(b)
                .is_some_and(|&i| self.threads[i].value.is_some())
        };
        for t in self.threads.iter().filter(|t| t.value.is_none()) {
            match poll(&t.cmd, finished) {
                Poll::Blocked(b) if self.sig.contains(&b) => {}
                Poll::Blocked(b) => {
                    return Err(fail(format!("{} waits on unknown thread {b}", t.id)))
                }
                Poll::Finished(_) => {
                    return Err(fail(format!("{} finished but not retired", t.id)))
                }
                Poll::Ready => {
                    let retained = |b: &Name| {
                        self.by_id
                            .get(b)
                            .and_then(|&i| self.threads[i].value.clone())
                    };
                    let mut fresh = || Name::new("$probe");
                    step_cmd(&t.cmd, retained, &mut fresh, &mut NullIo)
                        .map_err(|e| fail(format!("{} cannot progress: {e}", t.id)))?;
                }
            }
        }
        Ok(())
    }

    fn done(&self) -> bool {
        if self.cfg.join_all {
            self.threads.iter().all(|t| t.value.is_some())
        } else {
            self.threads[0].value.is_some()
        }
    }

    fn run(mut self) -> Result<RunResult, RunError> {
        let root = &self.threads[0];
        if root.cmd.finished_value().is_some() {
            self.finish(0, 0)?;
        } else {
            self.park_or_enqueue(0, 0);
        }
        self.threads[0].ready_step = Some(0);
        loop {
            if self.done() {
                break;
            }
            if (0..self.cfg.procs).all(|p| self.pending(p) == 0) {
                let waiting = self
                    .waiters
                    .iter()
                    .flat_map(|(b, ws)| ws.iter().map(move |&w| (w, b.clone())))
                    .map(|(w, b)| (self.threads[w].id.clone(), b))
                    .collect();
                return Err(RunError::Deadlock {
                    step: self.step,
                    waiting,
                });
            }
            if self.step >= self.cfg.fuel {
                return Err(RunError::FuelExhausted { steps: self.step });
            }
            self.step += 1;
            self.schedule.push(Vec::new());
            self.balance();
            let chosen = self.select();
            let mut ran = Vec::new();
            for (p, t) in chosen.into_iter().enumerate() {
                if let Some(t) = t {
                    let child = self.execute(p, t)?;
                    ran.push((p, t));
                    if let Some(c) = child {
                        ran.push((p, c));
                    }
                }
            }
            for &(p, t) in &ran {
                if self.threads[t].cmd.finished_value().is_some() {
                    self.finish(p, t)?;
                }
            }
            for &(p, t) in &ran {
                if self.threads[t].value.is_none() {
                    self.park_or_enqueue(p, t);
                }
            }
            if self.cfg.audit {
                self.audit()?;
            }
        }
        let threads = self
            .threads
            .iter()
            .map(|t| ThreadReport {
                id: t.id.clone(),
                lineage: t.lineage.clone(),
                prio: self.store.consts()[t.prio].clone(),
                steps: t.steps,
                ready_step: t.ready_step,
                last_step: t.last_step,
                value: t.value.clone(),
            })
            .collect();
        Ok(RunResult {
            value: self.threads[0].value.clone(),
            outputs: self.outputs,
            steps: self.step,
            threads,
            schedule: self.schedule,
            trace: self.trace,
            inputs: self.input_log,
            warnings: self.warnings,
        })
    }
}

/// Runs `main` (of return type `ret`) at `bot` on `cfg.procs` processors.
pub fn run(
    store: &PartialOrder,
    main: &Cmd,
    ret: &Type,
    cfg: RunConfig,
) -> Result<RunResult, RunError> {
    if cfg.procs == 0 {
        return Err(RunError::Invalid(
            "at least one processor is required".into(),
        ));
    }
    let inputs = cfg.inputs.iter().cloned().collect();
    let mut m = Machine {
        store,
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        deques: vec![vec![VecDeque::new(); store.len()]; cfg.procs],
        cfg,
        threads: Vec::new(),
        by_id: HashMap::new(),
        waiters: BTreeMap::new(),
        sig: Signature::new(),
        step: 0,
        next_id: 0,
        inputs,
        outputs: Vec::new(),
        input_log: Vec::new(),
        warnings: Vec::new(),
        schedule: Vec::new(),
        trace: Vec::new(),
    };
    m.add_thread(
        Name::new("t0"),
        "main".into(),
        &Priority::bot(),
        ret.clone(),
        main.clone(),
    )?;
    m.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::ExprKind;

    fn spawn_sync(prio: &str, body: Cmd) -> Cmd {
        Cmd::bind(
            Expr::cmd(
                Priority::bot(),
                Cmd::spawn(Priority::constant(prio), Type::Nat, body),
            ),
            "t",
            Cmd::sync(Expr::var("t")),
        )
    }

    #[test]
    fn returns_the_value_of_main() {
        let store = PartialOrder::new();
        let r = run(
            &store,
            &Cmd::ret(Expr::num(42)),
            &Type::Nat,
            RunConfig::default(),
        )
        .unwrap();
        assert_eq!(r.value, Some(Expr::num(42)));
        assert_eq!(r.steps, 0);
        assert_eq!(r.thread("main").unwrap().response_time(), Some(0));
    }

    #[test]
    fn spawn_then_sync_takes_three_steps_on_one_processor() {
        let store = PartialOrder::from_decls(&["a"], &[]).unwrap();
        let child = Cmd::ret(Expr::app(
            Expr::lam("x", Type::Nat, Expr::var("x")),
            Expr::num(7),
        ));
        let main = spawn_sync("a", child);
        let cfg = RunConfig {
            audit: true,
            trace: true,
            ..RunConfig::default()
        };
        let r = run(&store, &main, &Type::Nat, cfg).unwrap();
        assert_eq!(r.value, Some(Expr::num(7)));
        // spawn, bind, child beta, sync
        assert_eq!(r.steps, 4);
        assert_eq!(r.thread("main.0").unwrap().steps, 1);
        assert!(r
            .trace
            .iter()
            .any(|e| matches!(e.action, Action::SyncFrom(..))));
        for p in [2, 3] {
            let r = run(
                &store,
                &main,
                &Type::Nat,
                RunConfig {
                    procs: p,
                    audit: true,
                    ..RunConfig::default()
                },
            )
            .unwrap();
            assert_eq!(r.value, Some(Expr::num(7)));
        }
    }

    #[test]
    fn higher_priority_threads_preempt() {
        let store = PartialOrder::from_decls(&["lo", "hi"], &[("lo", "hi")]).unwrap();
        let slow = |n| {
            Cmd::ret(Expr::app(
                Expr::lam("x", Type::Nat, Expr::var("x")),
                Expr::num(n),
            ))
        };
        let lo_body = Cmd::bind(
            Expr::cmd(
                Priority::constant("lo"),
                Cmd::spawn(Priority::constant("hi"), Type::Nat, slow(1)),
            ),
            "h",
            slow(2),
        );
        let main = spawn_sync("lo", lo_body);
        let r = run(
            &store,
            &main,
            &Type::Nat,
            RunConfig {
                trace: true,
                ..RunConfig::default()
            },
        )
        .unwrap();
        let hi = r.threads.iter().find(|t| t.prio.as_str() == "hi").unwrap();
        let lo = r.threads.iter().find(|t| t.prio.as_str() == "lo").unwrap();
        assert!(hi.last_step < lo.last_step);
    }

    #[test]
    fn blocked_main_is_a_deadlock() {
        let store = PartialOrder::new();
        // ill-typed on purpose: the handle names no thread
        let main = Cmd::bind(
            Expr::cmd(Priority::bot(), Cmd::sync(Expr::tid("ghost"))),
            "x",
            Cmd::ret(Expr::var("x")),
        );
        let err = run(&store, &main, &Type::Nat, RunConfig::default()).unwrap_err();
        assert!(matches!(err, RunError::Deadlock { .. }), "{err}");
    }

    #[test]
    fn fuel_runs_out() {
        let store = PartialOrder::new();
        let t = Type::arrow(Type::Nat, Type::Nat);
        let lp = Expr::fix(
            "f",
            t.clone(),
            Expr::lam("x", Type::Nat, Expr::app(Expr::var("f"), Expr::var("x"))),
        );
        let main = Cmd::ret(Expr::app(lp, Expr::num(0)));
        let err = run(
            &store,
            &main,
            &Type::Nat,
            RunConfig {
                fuel: 50,
                ..RunConfig::default()
            },
        )
        .unwrap_err();
        assert!(matches!(err, RunError::FuelExhausted { steps: 50 }));
    }

    #[test]
    fn inputs_are_logged_and_default_to_zero() {
        let store = PartialOrder::new();
        let body = Cmd::bind(
            Expr::cmd(Priority::bot(), Cmd::ret(Expr::new(ExprKind::Input))),
            "a",
            Cmd::bind(
                Expr::cmd(Priority::bot(), Cmd::ret(Expr::new(ExprKind::Input))),
                "b",
                Cmd::ret(Expr::var("a")),
            ),
        );
        let cfg = RunConfig {
            inputs: vec![BigUint::from(5u8)],
            ..RunConfig::default()
        };
        let r = run(&store, &body, &Type::Nat, cfg).unwrap();
        assert_eq!(r.value, Some(Expr::num(5)));
        assert_eq!(r.inputs.len(), 2);
        assert_eq!(r.inputs[0], ("main".to_string(), 0, BigUint::from(5u8)));
        assert_eq!(r.warnings.len(), 1);
    }
}
