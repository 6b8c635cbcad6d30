use criterion::{criterion_group, criterion_main, Criterion};

use stochcheck::exec::Parallelism;
use stochcheck::fixtures;
use stochcheck::logic::{parse_formula, Formula, UntilFormula};
use stochcheck::matrix::run_matrix_check;
use stochcheck::rational::rat;
use stochcheck::region::{run_region_check, RegionOptions};
use stochcheck::simulate::{estimate_until, SimOptions};

fn until(text: &str) -> UntilFormula {
    match parse_formula(text).unwrap() {
        Formula::Until(u) => *u,
        other => panic!("not an until: {other}"),
    }
}

const MODES: [(&str, Parallelism); 2] = [("sequential", Parallelism::Sequential), ("parallel", Parallelism::Parallel)];

fn region(c: &mut Criterion) {
    let sa = fixtures::packet_producer();
    let adv = fixtures::benevolent();
    let f = until("[ (phi0|phi1) U{<2} phi2 ] >= 99/100");
    let mut group = c.benchmark_group("region");
    for (name, parallelism) in MODES {
        let opts = RegionOptions { max_depth: 4, parallelism, ..RegionOptions::default() };
        group.bench_function(name, |b| b.iter(|| run_region_check(&sa, &adv, &f, opts).unwrap()));
    }
    group.finish();
}

fn matrix(c: &mut Criterion) {
    let sa = fixtures::packet_shifted();
    let adv = fixtures::benevolent();
    let f = until("[ (a0|a1) U{<=3} a2 ] > 1/2");
    let delta = rat(1, 8);
    let mut group = c.benchmark_group("matrix");
    group.sample_size(10);
    for (name, parallelism) in MODES {
        group.bench_function(name, |b| b.iter(|| run_matrix_check(&sa, &adv, &f, &delta, parallelism).unwrap()));
    }
    group.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let sa = fixtures::packet_shifted();
    let adv = fixtures::benevolent();
    let f = until("[ (a0|a1) U{<=3} a2 ] > 1/2");
    let mut group = c.benchmark_group("monte_carlo");
    for (name, parallelism) in MODES {
        let opts = SimOptions { samples: 20_000, parallelism, ..SimOptions::default() };
        group.bench_function(name, |b| b.iter(|| estimate_until(&sa, &adv, &f, opts).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, region, matrix, monte_carlo);
criterion_main!(benches);
