//! Worked examples for the graph, scheduling and evaluation layers, checked
//! against values computed by hand or by independent oracles.

mod common;

use std::collections::BTreeMap;

use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;
use priml::ast::{Expr, Name, Type};
use priml::cost::{cost_expr, cost_program, QueueInput};
use priml::dag::{
    a_span, check_strongly_well_formed, check_well_formed, priority_work, seq_compose,
    work_not_below, CostDag,
};
use priml::dagfmt::{emit_dag, parse_dag};
use priml::eval::{eval_expr, NullIo};
use priml::pipeline::{check_source, Options};
use priml::prio::PartialOrder;
use priml::runtime::DEFAULT_FUEL;
use priml::sched::{
    bound_report, check_bound, check_prompt, fair_prompt_schedule, prompt_schedule, response_time,
    validate, FairnessCriterion, SchedError, Schedule,
};

fn n(s: &str) -> Name {
    Name::new(s)
}

/// `main` at bot spawns `a` (hi, 2), `c` (mid, 5) and `b` (lo, 1); `a`
/// waits on `b`. Low-priority work ends up on `a`'s critical path.
fn inverted() -> CostDag {
    let order =
        PartialOrder::from_decls(&["lo", "mid", "hi"], &[("lo", "mid"), ("mid", "hi")]).unwrap();
    let mut g = CostDag::new(order);
    g.add_chain("main", &n("bot"), 3).unwrap();
    g.add_chain("a", &n("hi"), 2).unwrap();
    g.add_chain("c", &n("mid"), 5).unwrap();
    g.add_chain("b", &n("lo"), 1).unwrap();
    g.add_spawn("main", 0, "a").unwrap();
    g.add_spawn("main", 1, "c").unwrap();
    g.add_spawn("main", 2, "b").unwrap();
    g.add_join("b", "a", 1).unwrap();
    g
}

#[test]
fn inversion_breaks_the_bound() {
    let g = inverted();
    assert!(check_well_formed(&g).unwrap().is_err());
    let s = prompt_schedule(&g, 1, 0, true).unwrap();
    validate(&g, &s).unwrap();
    check_prompt(&g, &s).unwrap();
    assert_eq!(response_time(&g, &s, "a").unwrap(), 10);
    let r = bound_report(&g, "a", 1, &s).unwrap();
    assert_eq!((r.work, r.span), (2, 4));
    assert_eq!(r.rhs, 6.0);
    assert!(!r.holds);
    assert!(matches!(
        check_bound(&g, "a", 1, &s),
        Err(SchedError::NotWellFormed(_))
    ));
}

#[test]
fn every_prompt_schedule_of_the_inversion_is_slow() {
    let g = inverted();
    for seed in 0..20 {
        let s = prompt_schedule(&g, 1, seed, false).unwrap();
        assert_eq!(response_time(&g, &s, "a").unwrap(), 10);
    }
}

#[test]
fn two_by_two_grid() {
    // two independent chains of two hi vertices spawned by one bot vertex
    let order = PartialOrder::from_decls(&["hi"], &[]).unwrap();
    let mut g = CostDag::new(order);
    g.add_chain("main", &n("bot"), 1).unwrap();
    g.add_chain("a", &n("hi"), 2).unwrap();
    g.add_chain("b", &n("hi"), 2).unwrap();
    g.add_spawn("main", 0, "a").unwrap();
    g.add_spawn("main", 0, "b").unwrap();
    assert_eq!((g.work(), g.graph().unwrap().span()), (5, 3));
    let s = prompt_schedule(&g, 2, 0, true).unwrap();
    assert_eq!(s.steps.len(), 3);
    assert_eq!(response_time(&g, &s, "a").unwrap(), 2);
    assert_eq!(response_time(&g, &s, "b").unwrap(), 2);
    let s1 = prompt_schedule(&g, 1, 0, true).unwrap();
    assert_eq!(s1.steps.len(), 5);
    assert_eq!(response_time(&g, &s1, "a").unwrap(), 2);
    assert_eq!(response_time(&g, &s1, "b").unwrap(), 4);
    for (t, r) in [("a", 2), ("b", 4)] {
        let rep = check_bound(&g, t, 1, &s1).unwrap();
        assert_eq!(rep.lhs, r);
        assert!(rep.holds);
    }
}

#[test]
fn hand_built_schedule_times() {
    let g = parse_dag(
        "thread main bot 2\nthread main.0 bot 1\nspawn main:0 main.0\njoin main.0 main:1\n",
    )
    .unwrap();
    let s = Schedule::from_positions(
        &g,
        1,
        &[
            vec![("main".into(), 0)],
            vec![("main.0".into(), 0)],
            vec![("main".into(), 1)],
        ],
    )
    .unwrap();
    validate(&g, &s).unwrap();
    assert_eq!(response_time(&g, &s, "main").unwrap(), 3);
    assert_eq!(response_time(&g, &s, "main.0").unwrap(), 1);
    let early = Schedule::from_positions(
        &g,
        2,
        &[
            vec![("main".into(), 0), ("main.0".into(), 0)],
            vec![("main".into(), 1)],
        ],
    )
    .unwrap();
    assert!(validate(&g, &early).is_err());
}

#[test]
fn a_span_of_a_diamond() {
    // main:0 spawns l (2) and r (4); main:1 joins both
    let mut g = CostDag::new(PartialOrder::new());
    g.add_chain("main", &n("bot"), 3).unwrap();
    g.add_chain("l", &n("bot"), 2).unwrap();
    g.add_chain("r", &n("bot"), 4).unwrap();
    g.add_spawn("main", 0, "l").unwrap();
    g.add_spawn("main", 1, "r").unwrap();
    g.add_join("l", "main", 2).unwrap();
    g.add_join("r", "main", 2).unwrap();
    assert_eq!(a_span(&g, "main").unwrap(), 7);
    assert_eq!(a_span(&g, "l").unwrap(), 3);
    assert_eq!(a_span(&g, "r").unwrap(), 6);
    let graph = g.graph().unwrap();
    let id = g.vertex("main", 2).unwrap();
    let last = graph.ids.iter().position(|&x| x == id).unwrap();
    assert_eq!(longest_path_to(&graph.pred, last), 7);
}

#[test]
fn priority_work_against_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let store = random_store(&mut rng, 4);
        let g = random_dag(&mut rng, &store, 6, 4);
        let owners = g.owners();
        for rho in store.consts() {
            let mut literal = 0;
            let mut not_below = 0;
            for (t, _) in owners.values() {
                let p = &g.threads[*t].prio;
                let closure = dfs_closure(&store);
                let (i, j) = (store.index_of(p).unwrap(), store.index_of(rho).unwrap());
                literal += usize::from(!closure[i][j]);
                not_below += usize::from(!(closure[i][j] && i != j));
            }
            assert_eq!(priority_work(&g, rho), literal);
            assert_eq!(work_not_below(&g, rho), not_below);
        }
    }
}

#[test]
fn seq_compose_is_associative() {
    let order = PartialOrder::from_decls(&["lo", "hi"], &[("lo", "hi")]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let mut parts = Vec::new();
        for k in 0..3 {
            let mut g = CostDag::starting_at(order.clone(), 100 * k);
            let len = rng.gen_range(0..4);
            g.add_chain("main", &n("bot"), len).unwrap();
            if len > 0 && rng.gen_bool(0.7) {
                let child = format!("side{k}");
                g.add_chain(
                    &child,
                    &n(if rng.gen_bool(0.5) { "lo" } else { "hi" }),
                    rng.gen_range(1..3),
                )
                .unwrap();
                g.add_spawn("main", 0, &child).unwrap();
                if len > 1 && rng.gen_bool(0.5) {
                    g.add_join(&child, "main", len - 1).unwrap();
                }
            }
            parts.push(g);
        }
        let left = seq_compose(
            &seq_compose(&parts[0], "main", &parts[1]).unwrap(),
            "main",
            &parts[2],
        )
        .unwrap();
        let right = seq_compose(
            &parts[0],
            "main",
            &seq_compose(&parts[1], "main", &parts[2]).unwrap(),
        )
        .unwrap();
        assert_eq!(left.canonical(), right.canonical());
        assert_eq!(left.work(), parts.iter().map(CostDag::work).sum::<usize>());
        let empty = CostDag::starting_at(order.clone(), 1000);
        assert_eq!(
            seq_compose(&left, "main", &empty).unwrap().canonical(),
            left.canonical()
        );
    }
}

#[test]
fn fair_scheduler_honours_the_criterion() {
    // two long independent chains at lo and hi on one processor
    let order = PartialOrder::from_decls(&["lo", "hi"], &[("lo", "hi")]).unwrap();
    let mut g = CostDag::new(order.clone());
    g.add_chain("main", &n("bot"), 1).unwrap();
    g.add_chain("l", &n("lo"), 3000).unwrap();
    g.add_chain("h", &n("hi"), 3000).unwrap();
    g.add_spawn("main", 0, "l").unwrap();
    g.add_spawn("main", 0, "h").unwrap();
    let crit = FairnessCriterion::parse("lo=0.3,hi=0.7", &order).unwrap();
    let s = fair_prompt_schedule(&g, 1, &crit, 9).unwrap();
    validate(&g, &s).unwrap();
    let lo: Vec<usize> = g.threads["l"].vertices.clone();
    let window = &s.steps[1..2001];
    let lo_steps = window.iter().filter(|st| lo.contains(&st[0])).count();
    let frac = lo_steps as f64 / window.len() as f64;
    assert!((frac - 0.3).abs() < 0.05, "lo fraction {frac}");
}

#[test]
fn point_mass_on_the_top_priority_is_prompt() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for store in topped_stores() {
        let top = store.top().unwrap().clone();
        let crit = FairnessCriterion::point_mass(&top);
        for _ in 0..30 {
            let g = random_dag(&mut rng, &store, 6, 4);
            for procs in [1, 2, 3] {
                let s = fair_prompt_schedule(&g, procs, &crit, rng.gen()).unwrap();
                validate(&g, &s).unwrap();
                check_prompt(&g, &s).unwrap();
            }
        }
    }
}

#[test]
fn chain_response_time_is_its_length() {
    for len in 1..20 {
        let mut g = CostDag::new(PartialOrder::new());
        g.add_chain("main", &n("bot"), len).unwrap();
        let s = prompt_schedule(&g, 1, 0, true).unwrap();
        // the first vertex has no parents, so its ready time is step 0
        assert_eq!(response_time(&g, &s, "main").unwrap(), len);
    }
}

#[test]
fn loop_spawn_never_joins_the_loop_thread() {
    let src = std::fs::read_to_string(corpus_dir().join("loop_spawn.priml")).unwrap();
    let c = check_source(&src, Options::default()).unwrap();
    let mut input = QueueInput::new(corpus_inputs());
    let out = cost_program(c.store(), c.cmd(), &mut input, DEFAULT_FUEL).unwrap();
    let dag = &out.dag;
    let loop_threads: Vec<&String> = dag
        .threads
        .iter()
        .filter(|(_, t)| t.prio.as_str() == "loop_p")
        .map(|(name, _)| name)
        .collect();
    assert!(!loop_threads.is_empty());
    let owners = dag.owners();
    for (_, u) in &dag.join_edges {
        assert!(!loop_threads.iter().any(|t| t.as_str() == owners[u].0));
    }
    assert!(check_strongly_well_formed(dag).unwrap().is_ok());
}

#[test]
fn emitted_graphs_reimport_losslessly() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let store = random_store(&mut rng, 4);
        let g = random_dag(&mut rng, &store, 7, 4);
        let text = emit_dag(&g);
        let back = parse_dag(&text).unwrap();
        assert_eq!(back, g.canonical());
        assert_eq!(emit_dag(&back), text);
    }
}

/// Closed arithmetic terms in the evaluator's administrative form, with a
/// big-step environment interpreter as the reference.
#[derive(Clone)]
enum Val {
    Nat(BigUint),
    Clo(Name, Expr, Vec<(Name, Val)>),
}

fn interp(e: &Expr, env: &[(Name, Val)], steps: &mut usize) -> Val {
    use priml::ast::ExprKind::*;
    let look = |x: &Name| {
        env.iter()
            .rev()
            .find(|(y, _)| y == x)
            .map(|(_, v)| v.clone())
            .unwrap()
    };
    match e.kind() {
        Var(x) => look(x),
        Num(k) => Val::Nat(k.clone()),
        Lam(x, _, b) => Val::Clo(x.clone(), b.clone(), env.to_vec()),
        Let(x, a, b) => {
            let v = interp(a, env, steps);
            *steps += 1;
            let mut env = env.to_vec();
            env.push((x.clone(), v));
            interp(b, &env, steps)
        }
        Ifz(a, z, x, s) => {
            *steps += 1;
            let Val::Nat(k) = interp(a, env, steps) else {
                panic!("ifz on a function")
            };
            if k == BigUint::from(0u32) {
                interp(z, env, steps)
            } else {
                let mut env = env.to_vec();
                env.push((x.clone(), Val::Nat(k - 1u32)));
                interp(s, &env, steps)
            }
        }
        App(f, a) => {
            let Val::Clo(x, body, mut cenv) = interp(f, env, steps) else {
                panic!("applied a number")
            };
            let v = interp(a, env, steps);
            *steps += 1;
            cenv.push((x, v));
            interp(&body, &cenv, steps)
        }
        other => panic!("outside the generated fragment: {other:?}"),
    }
}

struct TermGen {
    rng: ChaCha8Rng,
}

impl TermGen {
    const NAMES: [&'static str; 3] = ["x", "y", "z"];

    fn atom(&mut self, nats: &[&'static str]) -> Expr {
        if !nats.is_empty() && self.rng.gen_bool(0.6) {
            Expr::var(nats[self.rng.gen_range(0..nats.len())])
        } else {
            Expr::num(self.rng.gen_range(0..4))
        }
    }

    fn name(&mut self) -> &'static str {
        Self::NAMES[self.rng.gen_range(0..Self::NAMES.len())]
    }

    fn with(scope: &[&'static str], x: &'static str) -> Vec<&'static str> {
        let mut s: Vec<_> = scope.iter().copied().filter(|&y| y != x).collect();
        s.push(x);
        s
    }

    fn term(&mut self, nats: &[&'static str], depth: usize) -> Expr {
        if depth == 0 {
            return self.atom(nats);
        }
        match self.rng.gen_range(0..5) {
            0 => self.atom(nats),
            1 => {
                let x = self.name();
                let head = self.term(nats, depth - 1);
                Expr::let_(x, head, self.term(&Self::with(nats, x), depth - 1))
            }
            2 => {
                let x = self.name();
                let scrut = self.atom(nats);
                let z = self.term(nats, depth - 1);
                Expr::ifz(scrut, z, x, self.term(&Self::with(nats, x), depth - 1))
            }
            3 => {
                let x = self.name();
                let body = self.term(&Self::with(nats, x), depth - 1);
                Expr::app(Expr::lam(x, Type::Nat, body), self.atom(nats))
            }
            _ => {
                // let f = \x. body in f atom, with f shadowing nothing numeric
                let x = self.name();
                let body = self.term(&Self::with(nats, x), depth - 1);
                let outer: Vec<_> = nats.iter().copied().filter(|&y| y != "f").collect();
                let arg = self.atom(&outer);
                Expr::let_(
                    "f",
                    Expr::lam(x, Type::Nat, body),
                    Expr::app(Expr::var("f"), arg),
                )
            }
        }
    }
}

#[test]
fn substitution_agrees_with_an_environment_interpreter() {
    let mut gen = TermGen {
        rng: ChaCha8Rng::seed_from_u64(17),
    };
    let mut checked = BTreeMap::new();
    for _ in 0..300 {
        let e = gen.term(&[], 5);
        assert!(e.is_closed());
        let mut steps = 0;
        let want = interp(&e, &[], &mut steps);
        let (got, n_steps) = eval_expr(&e, &mut NullIo, 100_000).unwrap();
        let Val::Nat(k) = want else {
            panic!("the fragment only returns numbers")
        };
        assert_eq!(got.as_num(), Some(&k), "{e}");
        assert_eq!(n_steps as usize, steps, "{e}");
        let (cv, vertices) = cost_expr(&e, 100_000).unwrap();
        assert_eq!(cv.as_num(), Some(&k));
        assert_eq!(vertices, steps, "{e}");
        *checked.entry(steps.min(5)).or_insert(0) += 1;
    }
    // the generator reaches a spread of term sizes
    assert!(checked.len() >= 4, "{checked:?}");
}
