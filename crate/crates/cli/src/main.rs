use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use priml::ast::Name;
use priml::cost::{cost_program, CostError, QueueInput};
use priml::dag::{
    a_span, check_strongly_well_formed, check_well_formed, competitor_work, work_not_below, CostDag,
};
use priml::dagfmt::{emit_dag, parse_dag};
use priml::pipeline::{check_source, Checked, Options};
use priml::runtime::{fuel_from_env, run, Deal, RunConfig, RunError};
use priml::sched::{
    check_bound, check_fair_bound, fair_prompt_schedule, mean_se, prompt_schedule, response_times,
    FairnessCriterion, SchedError, Schedule,
};

const EXIT_STATIC: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_STUCK: u8 = 3;
const EXIT_FUEL: u8 = 4;

#[derive(Parser)]
#[command(
    name = "primlc",
    version,
    about = "Typecheck, run and analyze PriML programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse, elaborate and typecheck a program.
    Check {
        file: PathBuf,
        #[command(flatten)]
        front: Front,
        /// Print the elaborated core command.
        #[arg(long)]
        dump_core: bool,
        /// Print the types of top-level bindings.
        #[arg(long)]
        dump_types: bool,
        /// Print the priority order.
        #[arg(long)]
        dump_order: bool,
    },
    /// Run a program on the prioritized work-stealing runtime.
    Run {
        file: PathBuf,
        #[command(flatten)]
        front: Front,
        #[arg(long, default_value_t = 1)]
        procs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Values returned by `input`, in order (comma-separated or repeated).
        #[arg(long, value_delimiter = ',')]
        input: Vec<BigUint>,
        /// Re-typecheck the thread pool at every step.
        #[arg(long)]
        audit: bool,
        /// Keep running until every thread has finished.
        #[arg(long)]
        join_all: bool,
        /// Write the step-by-step trace to a file.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
        /// Print the value and per-thread response times.
        #[arg(long)]
        stats: bool,
        /// How a new thread's deque priority is picked when dealing work.
        #[arg(long, value_enum, default_value_t = DealArg::Uniform)]
        deal: DealArg,
    },
    /// Build the cost graph of a program and analyze it.
    Cost {
        file: PathBuf,
        #[command(flatten)]
        front: Front,
        /// Report competitor metrics and the response-time bound for this thread.
        #[arg(long)]
        thread: Option<String>,
        #[arg(long, default_value_t = 1)]
        procs: usize,
        /// Write the graph in text form to a file.
        #[arg(long, value_name = "FILE")]
        emit_dag: Option<PathBuf>,
        /// Report both well-formedness checks.
        #[arg(long)]
        check_wf: bool,
        /// Values returned by `input`, in order (comma-separated or repeated).
        #[arg(long, value_delimiter = ',')]
        input: Vec<BigUint>,
    },
    /// Schedule a graph file and report response times.
    Sim {
        dag: PathBuf,
        #[arg(long, default_value_t = 1)]
        procs: usize,
        #[arg(long, value_enum, default_value_t = Policy::Prompt)]
        policy: Policy,
        /// Fairness criterion such as `p=0.6,q=0.4` (fair policy only).
        #[arg(long)]
        criterion: Option<String>,
        /// Priority threshold for the fair bound; defaults to the thread's own.
        #[arg(long)]
        rho_prime: Option<String>,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Check the response-time bound for this thread.
        #[arg(long, value_name = "THREAD")]
        check_bound: Option<String>,
        /// Break prompt ties by rank and vertex id instead of at random.
        #[arg(long)]
        det: bool,
    },
}

#[derive(Args)]
struct Front {
    /// Do not prepend the standard library.
    #[arg(long)]
    no_prelude: bool,
}

impl Front {
    fn options(&self) -> Options {
        Options {
            prelude: !self.no_prelude,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DealArg {
    Uniform,
    Lowest,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Policy {
    Prompt,
    Fair,
}

struct Failure {
    code: u8,
    msg: String,
}

fn fail(code: u8, msg: impl ToString) -> Failure {
    Failure {
        code,
        msg: msg.to_string(),
    }
}

type Outcome = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))
}

fn load(path: &Path, front: &Front) -> Result<Checked, Failure> {
    let src = read(path)?;
    check_source(&src, front.options())
        .map_err(|d| fail(EXIT_STATIC, format!("{}: {d}", path.display())))
}

fn check(
    file: &Path,
    front: &Front,
    dump_core: bool,
    dump_types: bool,
    dump_order: bool,
) -> Outcome {
    let c = load(file, front)?;
    if dump_order {
        let store = c.store();
        println!(
            "priorities: {}",
            store
                .consts()
                .iter()
                .map(Name::as_str)
                .collect::<Vec<_>>()
                .join(" ")
        );
        for (i, lo) in store.consts().iter().enumerate() {
            for (j, hi) in store.consts().iter().enumerate() {
                if store.lt_idx(i, j) {
                    println!("{lo} < {hi}");
                }
            }
        }
    }
    if dump_types {
        for (x, t) in c.own_bindings() {
            println!("{x} : {t}");
        }
        println!("main : {} cmd[bot]", c.ty);
    }
    if dump_core {
        println!("{}", c.cmd());
    }
    if !(dump_order || dump_types || dump_core) {
        println!("ok: {}", c.ty);
    }
    Ok(())
}

fn run_error(e: RunError) -> Failure {
    match e {
        RunError::FuelExhausted { .. } => fail(EXIT_FUEL, e),
        other => fail(EXIT_STUCK, other),
    }
}

#[allow(clippy::too_many_arguments)]
fn run_cmd(
    file: &Path,
    front: &Front,
    procs: usize,
    seed: u64,
    input: Vec<BigUint>,
    audit: bool,
    join_all: bool,
    trace: Option<&Path>,
    stats: bool,
    deal: DealArg,
) -> Outcome {
    let c = load(file, front)?;
    if procs == 0 {
        return Err(fail(EXIT_IO, "--procs must be at least 1"));
    }
    let cfg = RunConfig {
        procs,
        seed,
        join_all,
        audit,
        deal: match deal {
            DealArg::Uniform => Deal::Uniform,
            DealArg::Lowest => Deal::Lowest,
        },
        fuel: fuel_from_env(),
        inputs: input,
        trace: trace.is_some(),
    };
    let r = run(c.store(), c.cmd(), &c.ty, cfg).map_err(run_error)?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    for n in &r.outputs {
        println!("{n}");
    }
    if let Some(path) = trace {
        let text: String = r.trace.iter().map(|e| format!("{e}\n")).collect();
        write(path, &text)?;
    }
    if stats {
        match &r.value {
            Some(v) => println!("value: {v}"),
            None => println!("value: -"),
        }
        print!("{}", r.stats(procs));
    }
    Ok(())
}

fn cost_error(e: CostError) -> Failure {
    match e {
        CostError::FuelExhausted(_) => fail(EXIT_FUEL, e),
        other => fail(EXIT_STUCK, other),
    }
}

#[allow(clippy::too_many_arguments)]
fn cost_cmd(
    file: &Path,
    front: &Front,
    thread: Option<&str>,
    procs: usize,
    emit: Option<&Path>,
    check_wf: bool,
    input: Vec<BigUint>,
) -> Outcome {
    let c = load(file, front)?;
    if procs == 0 {
        return Err(fail(EXIT_IO, "--procs must be at least 1"));
    }
    let mut src = QueueInput::new(input);
    let out = cost_program(c.store(), c.cmd(), &mut src, fuel_from_env()).map_err(cost_error)?;
    for w in &src.warnings {
        eprintln!("warning: {w}");
    }
    let g = &out.dag;
    let graph = g.graph().map_err(|e| fail(EXIT_STUCK, e))?;
    println!("value: {}", out.value);
    println!("threads: {}", g.threads.len());
    println!("work: {}", g.work());
    println!("span: {}", graph.span());
    if let Some(a) = thread {
        let info = g
            .threads
            .get(a)
            .ok_or_else(|| fail(EXIT_STATIC, format!("no thread {a} in the graph")))?;
        let comp = competitor_work(g, a).map_err(|e| fail(EXIT_STUCK, e))?;
        let work = work_not_below(&comp, &info.prio);
        let span = if info.vertices.is_empty() {
            0
        } else {
            a_span(&comp, a).map_err(|e| fail(EXIT_STUCK, e))?
        };
        println!("thread: {a} at {}", info.prio);
        println!("competitor work: {}", comp.work());
        println!("competitor work not below {}: {work}", info.prio);
        println!("a-span: {span}");
        println!(
            "bound on {procs} processors: {}",
            work as f64 / procs as f64 + span as f64
        );
    }
    if check_wf {
        let wf = check_well_formed(g).map_err(|e| fail(EXIT_STUCK, e))?;
        let swf = check_strongly_well_formed(g).map_err(|e| fail(EXIT_STUCK, e))?;
        println!("well-formed: {}", verdict(&wf));
        println!("strongly well-formed: {}", verdict(&swf));
    }
    if let Some(path) = emit {
        write(path, &emit_dag(g))?;
    }
    Ok(())
}

fn verdict<E: std::fmt::Debug>(r: &Result<(), E>) -> String {
    match r {
        Ok(()) => "true".into(),
        Err(e) => format!("false ({e:?})"),
    }
}

struct SimArgs<'a> {
    procs: usize,
    policy: Policy,
    criterion: Option<&'a str>,
    rho_prime: Option<&'a str>,
    trials: usize,
    seed: u64,
    check_bound: Option<&'a str>,
    det: bool,
}

fn sched_failure(e: SchedError) -> Failure {
    match e {
        SchedError::ThreadNotInGraph(_) => fail(EXIT_STATIC, e),
        other => fail(EXIT_IO, other),
    }
}

fn sim_cmd(path: &Path, a: SimArgs) -> Outcome {
    let text = read(path)?;
    let g: CostDag =
        parse_dag(&text).map_err(|e| fail(EXIT_IO, format!("{}: {e}", path.display())))?;
    if a.procs == 0 || a.trials == 0 {
        return Err(fail(EXIT_IO, "--procs and --trials must be at least 1"));
    }
    let criterion = match (a.policy, a.criterion) {
        (Policy::Fair, Some(c)) => {
            Some(FairnessCriterion::parse(c, &g.order).map_err(sched_failure)?)
        }
        (Policy::Fair, None) => return Err(fail(EXIT_IO, "the fair policy needs --criterion")),
        (Policy::Prompt, _) => None,
    };
    let bound_thread = a.check_bound.map(str::to_string);
    if let Some(t) = &bound_thread {
        if !g.threads.contains_key(t) {
            return Err(fail(EXIT_STATIC, format!("no thread {t} in the graph")));
        }
    }
    let graph = g.graph().map_err(|e| fail(EXIT_IO, e))?;

    let mut seeds = rand_seeds(a.seed, a.trials);
    let mut samples: std::collections::BTreeMap<String, Vec<f64>> = Default::default();
    let mut lengths = Vec::new();
    let mut bound_ok = true;
    let mut bound_report = None;
    let mut bound_err = None;
    for s in seeds.drain(..) {
        let sched: Schedule = match &criterion {
            Some(c) => fair_prompt_schedule(&g, a.procs, c, s),
            None => prompt_schedule(&g, a.procs, s, a.det),
        }
        .map_err(sched_failure)?;
        lengths.push(sched.steps.len() as f64);
        for (t, r) in response_times(&g, &sched).map_err(sched_failure)? {
            samples.entry(t).or_default().push(r as f64);
        }
        if let (Some(t), None) = (&bound_thread, &criterion) {
            match check_bound(&g, t, a.procs, &sched) {
                Ok(b) => {
                    let worst = bound_report
                        .as_ref()
                        .is_none_or(|w: &priml::sched::BoundReport| b.lhs > w.lhs);
                    bound_ok &= b.holds;
                    if worst {
                        bound_report = Some(b);
                    }
                }
                Err(SchedError::NotWellFormed(m)) => bound_err = Some(m),
                Err(e) => return Err(sched_failure(e)),
            }
        }
    }
    let fair = match (&bound_thread, &criterion) {
        (Some(t), Some(c)) => {
            let rho = match a.rho_prime {
                Some(r) => Name::new(r),
                None => g.threads[t].prio.clone(),
            };
            Some(
                check_fair_bound(&g, t, a.procs, c, &rho, a.trials, a.seed)
                    .map_err(sched_failure)?,
            )
        }
        _ => None,
    };

    let policy = match a.policy {
        Policy::Prompt => "prompt",
        Policy::Fair => "fair",
    };
    let (mean_len, _) = mean_se(&lengths);
    let mut human = String::new();
    let mut machine = String::new();
    let _ = writeln!(
        human,
        "{policy} schedules of {} on {} processors, {} trials",
        path.display(),
        a.procs,
        a.trials
    );
    let _ = writeln!(
        human,
        "work {} span {} mean length {mean_len:.3}",
        g.work(),
        graph.span()
    );
    let _ = writeln!(machine, "policy {policy}");
    let _ = writeln!(machine, "procs {}", a.procs);
    let _ = writeln!(machine, "trials {}", a.trials);
    let _ = writeln!(machine, "seed {}", a.seed);
    let _ = writeln!(machine, "work {}", g.work());
    let _ = writeln!(machine, "span {}", graph.span());
    let _ = writeln!(machine, "length {mean_len}");
    for (t, xs) in &samples {
        let (m, se) = mean_se(xs);
        let _ = writeln!(
            human,
            "thread {t} at {}: response {m:.3} (se {se:.3})",
            g.threads[t].prio
        );
        let _ = writeln!(machine, "response.{t} {m}");
    }
    if let Some(t) = &bound_thread {
        let _ = writeln!(machine, "bound.thread {t}");
    }
    if let Some(m) = bound_err {
        let _ = writeln!(
            human,
            "bound: not applicable, the graph is not well-formed: {m}"
        );
        let _ = writeln!(machine, "bound.applicable false");
    } else if let Some(b) = bound_report {
        let _ = writeln!(
            human,
            "bound for {}: worst T = {} against {}/{} + {} = {:.3}: {}",
            b.thread,
            b.lhs,
            b.work,
            b.procs,
            b.span,
            b.rhs,
            if bound_ok { "holds" } else { "violated" }
        );
        let _ = writeln!(machine, "bound.lhs {}", b.lhs);
        let _ = writeln!(machine, "bound.work {}", b.work);
        let _ = writeln!(machine, "bound.span {}", b.span);
        let _ = writeln!(machine, "bound.rhs {}", b.rhs);
        let _ = writeln!(machine, "bound.holds {bound_ok}");
    }
    if let Some(f) = fair {
        let _ = writeln!(
            human,
            "fair bound for {}: mean T = {:.3} (se {:.3}) against {:.3} with mass {:.3}: {}",
            f.thread,
            f.mean,
            f.std_err,
            f.rhs,
            f.mass,
            if f.holds { "holds" } else { "violated" }
        );
        let _ = writeln!(machine, "fair.mean {}", f.mean);
        let _ = writeln!(machine, "fair.se {}", f.std_err);
        let _ = writeln!(machine, "fair.mass {}", f.mass);
        let _ = writeln!(machine, "fair.rhs {}", f.rhs);
        let _ = writeln!(machine, "fair.holds {}", f.holds);
    }
    print!("{human}---\n{machine}");
    Ok(())
}

/// One schedule seed per trial; trial 0 uses `seed` itself so that a
/// single trial is reproducible by seed alone.
fn rand_seeds(seed: u64, trials: usize) -> Vec<u64> {
    (0..trials as u64)
        .map(|i| seed.wrapping_add(i.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
        .collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check {
            file,
            front,
            dump_core,
            dump_types,
            dump_order,
        } => check(&file, &front, dump_core, dump_types, dump_order),
        Command::Run {
            file,
            front,
            procs,
            seed,
            input,
            audit,
            join_all,
            trace,
            stats,
            deal,
        } => run_cmd(
            &file,
            &front,
            procs,
            seed,
            input,
            audit,
            join_all,
            trace.as_deref(),
            stats,
            deal,
        ),
        Command::Cost {
            file,
            front,
            thread,
            procs,
            emit_dag,
            check_wf,
            input,
        } => cost_cmd(
            &file,
            &front,
            thread.as_deref(),
            procs,
            emit_dag.as_deref(),
            check_wf,
            input,
        ),
        Command::Sim {
            dag,
            procs,
            policy,
            criterion,
            rho_prime,
            trials,
            seed,
            check_bound,
            det,
        } => sim_cmd(
            &dag,
            SimArgs {
                procs,
                policy,
                criterion: criterion.as_deref(),
                rho_prime: rho_prime.as_deref(),
                trials,
                seed,
                check_bound: check_bound.as_deref(),
                det,
            },
        ),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
