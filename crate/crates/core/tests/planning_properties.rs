use std::collections::BTreeSet;

use ltlplan::automaton::DEFAULT_STATE_CAP;
use ltlplan::datagen::{generate_corpus, Corpus, CorpusConfig};
use ltlplan::decoding::{
    compile_for, run, ActionDistribution, DecodeConfig, DecodingError, GreedyPolicy, UniformPolicy,
};
use ltlplan::environment::{random_environment, DomainKind};
use ltlplan::ltl::{evaluate, parse_infix, random_formula, Formula};
use ltlplan::oracle::{enumerate_accepting_plans, optimal_plan, SearchLimits};
use ltlplan::voting::{random_edit, vote};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus(domain: DomainKind, environments: usize, seed: u64) -> Corpus {
    generate_corpus(&CorpusConfig {
        domain,
        environments,
        per_environment: 5,
        seed,
        ..Default::default()
    })
    .unwrap()
}

#[test]
fn every_decoded_plan_is_safe() {
    let mut runs = 0;
    let mut returned = 0;
    for domain in [DomainKind::Navigation, DomainKind::Manipulation] {
        let c = corpus(domain, 100, 17);
        for r in &c.records {
            let env = c.environment(&r.environment_id).unwrap();
            let spec = r.spec().unwrap();
            let a = compile_for(env, &spec, DEFAULT_STATE_CAP).unwrap();
            for seed in 0..10 {
                let cfg = DecodeConfig {
                    seed,
                    ..Default::default()
                };
                runs += 1;
                let out = if seed % 2 == 0 {
                    run(env, &r.nl, &a, &mut UniformPolicy, &cfg)
                } else {
                    run(env, &r.nl, &a, &mut GreedyPolicy::default(), &cfg)
                };
                match out {
                    Ok(o) => {
                        returned += 1;
                        let (trace, cost) = env.simulate(&o.plan).unwrap();
                        assert!(
                            evaluate(&spec, &trace, 0).unwrap(),
                            "unsafe plan {} for {spec}",
                            o.plan
                        );
                        assert!((cost - o.cost).abs() < 1e-9);
                    }
                    Err(DecodingError::DeadEnd { .. } | DecodingError::StepLimit { .. }) => {}
                    Err(e) => panic!("unexpected error {e}"),
                }
            }
        }
    }
    assert!(runs >= 10_000);
    assert!(returned > runs / 3, "{returned} of {runs}");
}

#[test]
fn optimal_cost_bounds_every_enumerated_plan() {
    let c = corpus(DomainKind::Navigation, 6, 2);
    for r in c.records.iter().filter(|r| r.n_constraints <= 2) {
        let env = c.environment(&r.environment_id).unwrap();
        let spec = r.spec().unwrap();
        let a = compile_for(env, &spec, DEFAULT_STATE_CAP).unwrap();
        let best = optimal_plan(env, &a, &SearchLimits::default()).unwrap();
        let e = enumerate_accepting_plans(env, &a, best.plan.len().max(3), 5_000).unwrap();
        assert!(!e.plans.is_empty());
        let mut seen = BTreeSet::new();
        for (plan, cost) in &e.plans {
            assert!(
                best.cost <= *cost,
                "{plan} costs {cost} < optimum {}",
                best.cost
            );
            let (trace, _) = env.simulate(plan).unwrap();
            assert!(evaluate(&spec, &trace, 0).unwrap());
            assert!(seen.insert(plan.to_string()), "duplicate {plan}");
        }
    }
}

#[test]
fn manipulation_optimum_is_safe_and_uses_blocks_once() {
    let c = corpus(DomainKind::Manipulation, 10, 8);
    for r in &c.records {
        let env = c.environment(&r.environment_id).unwrap();
        let spec = r.spec().unwrap();
        let a = compile_for(env, &spec, DEFAULT_STATE_CAP).unwrap();
        let best = optimal_plan(env, &a, &SearchLimits::default()).unwrap();
        let (trace, cost) = env.simulate(&best.plan).unwrap();
        assert!(evaluate(&spec, &trace, 0).unwrap());
        assert!((cost - best.cost).abs() < 1e-9);
        let blocks: Vec<&str> = best
            .plan
            .steps()
            .iter()
            .map(|s| s.split(' ').nth(1).unwrap())
            .collect();
        let distinct: BTreeSet<&&str> = blocks.iter().collect();
        assert_eq!(distinct.len(), blocks.len(), "{}", best.plan);
    }
}

fn candidate_pool(seed: u64) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let universe = vec!["A".to_string(), "B".to_string(), "C".to_string()];
    let truth = random_formula(&mut rng, &universe, 4);
    let mut pool = vec![truth.clone(); 5];
    pool.push(parse_infix(&format!("!!({truth})")).unwrap());
    for _ in 0..6 {
        pool.push(random_edit(&truth, &universe, &mut rng).unwrap_or_else(|| truth.clone()));
    }
    pool
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn vote_is_invariant_under_candidate_order(seed in 0u64..1_000, perm_seed in any::<u64>()) {
        let pool = candidate_pool(seed);
        let mut shuffled = pool.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut rng);
        let a = vote(&pool, DEFAULT_STATE_CAP).unwrap();
        let b = vote(&shuffled, DEFAULT_STATE_CAP).unwrap();
        prop_assert_eq!(&a.representative, &b.representative);
        prop_assert_eq!(a.tie, b.tie);
        let mut sa = a.group_sizes();
        let mut sb = b.group_sizes();
        sa.sort();
        sb.sort();
        prop_assert_eq!(sa, sb);
    }

    #[test]
    fn adding_a_winner_vote_keeps_the_winner(seed in 0u64..1_000) {
        let pool = candidate_pool(seed);
        let a = vote(&pool, DEFAULT_STATE_CAP).unwrap();
        let mut more = pool.clone();
        more.push(a.representative.clone());
        let b = vote(&more, DEFAULT_STATE_CAP).unwrap();
        prop_assert_eq!(&b.representative, &a.representative);
        prop_assert!(!b.tie);
    }

    #[test]
    fn renormalization_preserves_ratios(
        weights in prop::collection::vec(0.01f64..10.0, 2..12),
        masked in prop::collection::btree_set(0usize..12, 0..6),
    ) {
        let names: Vec<String> = (0..weights.len()).map(|i| format!("a{i}")).collect();
        let d = ActionDistribution::from_weights(names.iter().cloned().zip(weights.iter().copied()).collect()).unwrap();
        let mask: BTreeSet<String> = masked.iter().filter(|&&i| i < names.len()).map(|&i| names[i].clone()).collect();
        match d.mask_and_renormalize(&mask) {
            Ok(m) => {
                let total: f64 = m.entries().iter().map(|(_, p)| p).sum();
                prop_assert!((total - 1.0).abs() < 1e-9);
                let kept: f64 = names.iter().filter(|n| !mask.contains(*n)).map(|n| d.probability(n)).sum();
                for n in &names {
                    if mask.contains(n) {
                        prop_assert_eq!(m.probability(n), 0.0);
                    } else {
                        prop_assert!((m.probability(n) - d.probability(n) / kept).abs() < 1e-9);
                    }
                }
            }
            Err(_) => prop_assert_eq!(mask.len(), names.len()),
        }
    }

    #[test]
    fn decoding_is_seed_deterministic(env_seed in 0u64..50, seed in any::<u64>()) {
        let env = random_environment(DomainKind::Navigation, env_seed);
        let spec = parse_infix("F red_room & F blue_room & (!blue_room U green_room)").unwrap();
        let a = compile_for(&env, &spec, DEFAULT_STATE_CAP).unwrap();
        let cfg = DecodeConfig { seed, ..Default::default() };
        let x = run(&env, "", &a, &mut UniformPolicy, &cfg).map(|o| o.plan);
        let y = run(&env, "", &a, &mut UniformPolicy, &cfg).map(|o| o.plan);
        prop_assert_eq!(x, y);
    }
}
