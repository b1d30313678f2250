use std::collections::BTreeSet;

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use ltlplan::automaton::{progress, DEFAULT_STATE_CAP};
use ltlplan::decoding::{
    compile_for, run, DecodeConfig, DecodingSession, GreedyPolicy, UniformPolicy,
};
use ltlplan::environment::{random_environment, DomainKind};
use ltlplan::ltl::parse_infix;
use ltlplan::oracle::{optimal_plan, SearchLimits};

const SPEC: &str = "F red_room & F blue_room & F green_room & (!green_room U red_room) \
    & G (blue_room -> X yellow_room) & G !black_room";

fn compile_bench(c: &mut Criterion) {
    let env = random_environment(DomainKind::Navigation, 1);
    let spec = parse_infix(SPEC).unwrap();
    c.bench_function("compile 6 conjuncts, 12 one-hot atoms", |b| {
        b.iter(|| compile_for(&env, black_box(&spec), DEFAULT_STATE_CAP).unwrap())
    });
}

fn progression_bench(c: &mut Criterion) {
    let f = parse_infix(SPEC).unwrap();
    let label = BTreeSet::from(["red_room"]);
    c.bench_function("progress one label", |b| {
        b.iter(|| progress(black_box(&f), &label))
    });
}

fn decode_bench(c: &mut Criterion) {
    let env = random_environment(DomainKind::Navigation, 1);
    let spec = parse_infix(SPEC).unwrap();
    let a = compile_for(&env, &spec, DEFAULT_STATE_CAP).unwrap();
    c.bench_function("decode step (uniform)", |b| {
        b.iter(|| {
            let mut s = DecodingSession::new(&env, &a, "", &DecodeConfig::default()).unwrap();
            s.step(&mut UniformPolicy).unwrap()
        })
    });
    c.bench_function("decode full plan (greedy)", |b| {
        let mut seed = 0;
        b.iter(|| {
            seed += 1;
            let cfg = DecodeConfig {
                seed,
                ..Default::default()
            };
            run(&env, "", &a, &mut GreedyPolicy::default(), &cfg).ok()
        })
    });
}

fn oracle_bench(c: &mut Criterion) {
    let env = random_environment(DomainKind::Navigation, 1);
    let a = compile_for(&env, &parse_infix(SPEC).unwrap(), DEFAULT_STATE_CAP).unwrap();
    c.bench_function("optimal plan", |b| {
        b.iter(|| optimal_plan(&env, &a, &SearchLimits::default()).unwrap())
    });
}

criterion_group!(
    benches,
    compile_bench,
    progression_bench,
    decode_bench,
    oracle_bench
);
criterion_main!(benches);
