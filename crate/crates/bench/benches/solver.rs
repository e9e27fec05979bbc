// SPDX-License-Identifier: Apache-2.0

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use fuelctrl::oracle::default_config;
use fuelctrl::{mc_estimate, solve_dp, Boundaries, PiecewiseValue, SimConfig};
use fuelctrl_bench::{vlambda, vshape};

fn build(c: &mut Criterion) {
    let (vs, vl) = (vshape(), vlambda());
    c.bench_function("boundaries_build_vshape", |b| b.iter(|| Boundaries::build(black_box(&vs)).unwrap()));
    c.bench_function("boundaries_build_vlambda", |b| b.iter(|| Boundaries::build(black_box(&vl)).unwrap()));
}

fn evaluate(c: &mut Criterion) {
    let pv = PiecewiseValue::new(&vlambda()).unwrap();
    let pts: Vec<(f64, f64)> =
        (0..1000).map(|k| (1.5 * (k % 40) as f64 / 40.0, 1.2 * (k / 40) as f64 / 25.0)).collect();
    c.bench_function("value_1000_points", |b| {
        b.iter(|| pts.iter().map(|&(x, cc)| pv.value(black_box(x), black_box(cc))).sum::<f64>())
    });
}

fn oracle(c: &mut Criterion) {
    let p = vshape();
    let cfg = default_config(&p, 0.02).unwrap();
    let mut g = c.benchmark_group("oracle");
    g.sample_size(10);
    g.bench_function("dp_dx_0.02", |b| b.iter(|| solve_dp(black_box(&p), &cfg).unwrap()));
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let p = vlambda();
    let pv = PiecewiseValue::new(&p).unwrap();
    let cfg = SimConfig { paths: 200, dt: 1e-3, ..SimConfig::new(p.alpha) };
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    g.bench_function("mc_200_paths", |b| b.iter(|| mc_estimate(black_box(0.6), 0.2, &pv, &cfg).unwrap()));
    g.finish();
}

criterion_group!(benches, build, evaluate, oracle, monte_carlo);
criterion_main!(benches);
