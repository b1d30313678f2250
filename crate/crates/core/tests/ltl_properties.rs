mod common;

use ltlplan::ltl::{
    evaluate, parse_infix, parse_prefix, random_formula, Formula, GroundingMap, Trace,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{all_labels, for_each_trace};

fn arb_formula() -> impl Strategy<Value = Formula> {
    let leaf = prop_oneof![
        Just(Formula::True),
        Just(Formula::False),
        prop::sample::select(vec!["A", "B", "C", "red_room", "blk3_in_boxB"])
            .prop_map(Formula::atom),
    ];
    leaf.prop_recursive(6, 64, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(Formula::not),
            inner.clone().prop_map(Formula::next),
            inner.clone().prop_map(Formula::globally),
            inner.clone().prop_map(Formula::finally),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::and(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::or(l, r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| Formula::implies(l, r)),
            (inner.clone(), inner).prop_map(|(l, r)| Formula::until(l, r)),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn infix_and_prefix_round_trip(f in arb_formula()) {
        prop_assert_eq!(parse_infix(&f.to_infix()).unwrap(), f.clone());
        prop_assert_eq!(parse_prefix(&f.to_prefix()).unwrap(), f);
    }
}

proptest! {
    #[test]
    fn ground_then_lift_is_identity(f in arb_formula()) {
        let m = GroundingMap::new([
            ("A", "walmart"), ("B", "cvs"), ("C", "target"),
            ("red_room", "p1"), ("blk3_in_boxB", "p2"),
        ]).unwrap();
        let g = m.ground(&f).unwrap();
        prop_assert!(g.atoms().iter().all(|a| m.values().any(|v| v == a)));
        prop_assert_eq!(m.lift(&g).unwrap(), f);
    }
}

fn check_exhaustive(pairs: &[(Formula, Formula)], atoms: &[&str], max_len: usize) {
    let letters = all_labels(atoms);
    for (f, g) in pairs {
        for_each_trace(atoms, &letters, max_len, &mut |t: &Trace| {
            for i in 0..=t.len() {
                assert_eq!(
                    evaluate(f, t, i).unwrap(),
                    evaluate(g, t, i).unwrap(),
                    "{f} vs {g} on {:?} at {i}",
                    t.labels()
                );
            }
            true
        });
    }
}

#[test]
fn temporal_dualities_hold_exhaustively() {
    let atoms = ["A", "B", "C"];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut pairs = Vec::new();
    for _ in 0..6 {
        let phi = random_formula(&mut rng, &atoms, 3);
        // !F phi == G !phi
        pairs.push((
            Formula::not(Formula::finally(phi.clone())),
            Formula::globally(Formula::not(phi.clone())),
        ));
        // !X phi == end-of-trace | X !phi, where end-of-trace is !X true
        pairs.push((
            Formula::not(Formula::next(phi.clone())),
            Formula::or(
                Formula::not(Formula::next(Formula::True)),
                Formula::next(Formula::not(phi)),
            ),
        ));
    }
    check_exhaustive(&pairs, &atoms, 6);
}

#[test]
fn implication_desugars() {
    let atoms = ["A", "B", "C"];
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let pairs: Vec<_> = (0..8)
        .map(|_| {
            let a = random_formula(&mut rng, &atoms, 3);
            let b = random_formula(&mut rng, &atoms, 3);
            (
                Formula::implies(a.clone(), b.clone()),
                Formula::or(Formula::not(a), b),
            )
        })
        .collect();
    check_exhaustive(&pairs, &atoms, 5);
}
