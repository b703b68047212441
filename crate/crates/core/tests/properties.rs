//! Randomized invariants of the priority store, the cost graphs and the
//! schedulers.

#![allow(clippy::needless_range_loop)]

mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;
use priml::alpha::{alpha_eq_cmd, alpha_eq_type};
use priml::ast::{Constraint, Priority};
use priml::dag::{check_strongly_well_formed, check_well_formed};
use priml::parser::parse;
use priml::pipeline::{check_source, Options};
use priml::prio::{ctxify, entails_le, EntailContext, PartialOrder};
use priml::sched::{
    check_bound, check_prompt, exhaustive_min_response, prompt_schedule, random_wellformed_dag,
    response_time, validate,
};

fn store_from(seed: u64, max: usize) -> PartialOrder {
    random_store(&mut ChaCha8Rng::seed_from_u64(seed), max)
}

/// Atoms `0..k` are the store's constants and `k..k+vars` are variables.
fn atom(store: &PartialOrder, i: usize) -> Priority {
    let k = store.len();
    if i < k {
        Priority::Const(store.consts()[i].clone())
    } else {
        Priority::var(&format!("v{}", i - k))
    }
}

fn context(store: &PartialOrder, vars: usize, facts: &[(usize, usize)]) -> EntailContext {
    let mut ctx = EntailContext::new();
    for v in 0..vars {
        ctx.with_var(atom(store, store.len() + v).name());
    }
    for &(a, b) in facts {
        ctx.assume(&Constraint::le(atom(store, a), atom(store, b)));
    }
    ctx
}

/// Every fact the store and the hypotheses can derive, over all atoms.
fn oracle(store: &PartialOrder, vars: usize, facts: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let k = store.len();
    let closure = dfs_closure(store);
    let mut all: Vec<(usize, usize)> = facts.to_vec();
    for i in 0..k {
        for j in 0..k {
            if closure[i][j] {
                all.push((i, j));
            }
        }
    }
    derivable(k + vars, &all)
}

fn scenario() -> impl Strategy<Value = (u64, usize, Vec<(usize, usize)>)> {
    (any::<u64>(), 0usize..3).prop_flat_map(|(seed, vars)| {
        let atoms = store_from(seed, 4).len() + vars;
        (
            Just(seed),
            Just(vars),
            prop::collection::vec((0..atoms, 0..atoms), 0..5),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closure_matches_depth_first_search(seed in any::<u64>()) {
        let store = store_from(seed, 6);
        let want = dfs_closure(&store);
        prop_assert_eq!(store.closure(), &want[..]);
        let bot = store.index_of(&priml::ast::Name::new("bot")).unwrap();
        for i in 0..store.len() {
            prop_assert!(store.le_idx(bot, i));
        }
    }

    #[test]
    fn entailment_matches_the_derivation_oracle((seed, vars, facts) in scenario()) {
        let store = store_from(seed, 4);
        let ctx = context(&store, vars, &facts);
        let want = oracle(&store, vars, &facts);
        let n = store.len() + vars;
        for a in 0..n {
            for b in 0..n {
                let got = entails_le(&store, &ctx, &atom(&store, a), &atom(&store, b)).unwrap();
                prop_assert_eq!(got, want[a][b], "{} <= {}", atom(&store, a), atom(&store, b));
            }
        }
    }

    #[test]
    fn entailment_is_a_preorder((seed, vars, facts) in scenario()) {
        let store = store_from(seed, 4);
        let ctx = context(&store, vars, &facts);
        let n = store.len() + vars;
        let le = |a: usize, b: usize| entails_le(&store, &ctx, &atom(&store, a), &atom(&store, b)).unwrap();
        for a in 0..n {
            prop_assert!(le(a, a));
            for b in 0..n {
                for c in 0..n {
                    if le(a, b) && le(b, c) {
                        prop_assert!(le(a, c));
                    }
                }
            }
        }
    }

    #[test]
    fn more_hypotheses_entail_more(
        (seed, vars, facts) in scenario(),
        extra in (0usize..8, 0usize..8),
    ) {
        let store = store_from(seed, 4);
        let n = store.len() + vars;
        let extra = (extra.0 % n, extra.1 % n);
        let small = context(&store, vars, &facts);
        let mut more = facts.clone();
        more.push(extra);
        let big = context(&store, vars, &more);
        for a in 0..n {
            for b in 0..n {
                let (x, y) = (atom(&store, a), atom(&store, b));
                if entails_le(&store, &small, &x, &y).unwrap() {
                    prop_assert!(entails_le(&store, &big, &x, &y).unwrap());
                }
            }
        }
    }

    #[test]
    fn hypothesis_order_is_irrelevant((seed, vars, facts) in scenario(), rot in 0usize..5) {
        let store = store_from(seed, 4);
        let mut shuffled = facts.clone();
        shuffled.reverse();
        if !shuffled.is_empty() {
            let r = rot % shuffled.len();
            shuffled.rotate_left(r);
        }
        let a = context(&store, vars, &facts);
        let b = context(&store, vars, &shuffled);
        let n = store.len() + vars;
        for i in 0..n {
            for j in 0..n {
                let (x, y) = (atom(&store, i), atom(&store, j));
                prop_assert_eq!(entails_le(&store, &a, &x, &y).unwrap(), entails_le(&store, &b, &x, &y).unwrap());
            }
        }
    }

    #[test]
    fn a_store_and_its_context_entail_the_same_facts(seed in any::<u64>()) {
        let store = store_from(seed, 5);
        let ctx = ctxify(&store);
        let empty = PartialOrder::new();
        for a in store.consts() {
            for b in store.consts() {
                let (x, y) = (Priority::Const(a.clone()), Priority::Const(b.clone()));
                prop_assert_eq!(entails_le(&empty, &ctx, &x, &y).unwrap(), store.le(a, b));
                prop_assert_eq!(entails_le(&store, &EntailContext::new(), &x, &y).unwrap(), store.le(a, b));
            }
        }
    }

    #[test]
    fn generated_graphs_are_strongly_well_formed(seed in any::<u64>(), threads in 1usize..8, len in 1usize..5) {
        let store = store_from(seed, 4);
        let g = random_wellformed_dag(threads, len, &store, seed);
        prop_assert!(check_strongly_well_formed(&g).unwrap().is_ok());
        prop_assert!(check_well_formed(&g).unwrap().is_ok());
    }

    #[test]
    fn prompt_schedules_are_valid_and_meet_the_bound(
        seed in any::<u64>(),
        threads in 1usize..7,
        procs in 1usize..4,
    ) {
        let store = store_from(seed, 3);
        let g = random_wellformed_dag(threads, 3, &store, seed);
        let s = prompt_schedule(&g, procs, seed, false).unwrap();
        validate(&g, &s).unwrap();
        check_prompt(&g, &s).unwrap();
        for a in g.threads.keys() {
            let r = check_bound(&g, a, procs, &s).unwrap();
            prop_assert!(r.holds, "{:?}", r);
        }
    }

    #[test]
    fn no_schedule_beats_the_exhaustive_minimum(seed in any::<u64>(), procs in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let store = random_store(&mut rng, 3);
        let g = random_dag(&mut rng, &store, 4, 3);
        prop_assume!(g.work() <= 14);
        let s = prompt_schedule(&g, procs, seed, false).unwrap();
        for (a, t) in &g.threads {
            if t.vertices.is_empty() {
                continue;
            }
            let best = exhaustive_min_response(&g, a, procs).unwrap();
            prop_assert!(response_time(&g, &s, a).unwrap() >= best);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printing_and_reparsing_preserves_meaning(seed in any::<u64>()) {
        let src = ProgramGen::new(seed).program();
        let Ok(first) = check_source(&src, Options::default()) else { return Ok(()) };
        let printed = parse(&src).unwrap().to_string();
        let second = check_source(&printed, Options::default()).unwrap();
        prop_assert!(alpha_eq_cmd(first.cmd(), second.cmd()), "{}", printed);
        prop_assert!(alpha_eq_type(&first.ty, &second.ty));
        prop_assert_eq!(parse(&printed).unwrap().to_string(), printed);
    }
}

#[test]
fn corpus_survives_printing() {
    for (stem, src) in corpus() {
        let printed = parse(&src).unwrap().to_string();
        assert_eq!(parse(&printed).unwrap().to_string(), printed, "{stem}");
        match (
            check_source(&src, Options::default()),
            check_source(&printed, Options::default()),
        ) {
            (Ok(a), Ok(b)) => {
                assert!(alpha_eq_cmd(a.cmd(), b.cmd()), "{stem}");
                assert!(alpha_eq_type(&a.ty, &b.ty), "{stem}");
            }
            (Err(a), Err(b)) => assert_eq!(a.code, b.code, "{stem}"),
            (a, b) => panic!("{stem}: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }
}
