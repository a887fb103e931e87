use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use stiffsense_bench::{full_run, CASE_DTS};
use stiffsense_core::{
    adjoint_gradient, classify, simulate, time_average, AveragingWindow, ModelParams, SimConfig,
};

fn bench_simulate(c: &mut Criterion) {
    let p = ModelParams::default();
    let mut group = c.benchmark_group("simulate_100k");
    for dt in CASE_DTS {
        let cfg = SimConfig::explicit(dt);
        group.bench_with_input(BenchmarkId::new("explicit", dt), &cfg, |b, cfg| {
            b.iter(|| simulate(black_box(&p), cfg).unwrap())
        });
    }
    let cfg = SimConfig::implicit(2.8);
    group.bench_function("implicit/2.8", |b| b.iter(|| simulate(black_box(&p), &cfg).unwrap()));
    group.finish();
}

fn bench_gradients(c: &mut Criterion) {
    let p = ModelParams::default();
    let cfg = SimConfig::explicit(1.0);
    let w = AveragingWindow::default();
    let traj = full_run(&cfg);
    c.bench_function("time_average", |b| b.iter(|| time_average(black_box(&traj), &w).unwrap()));
    c.bench_function("adjoint_sweep", |b| {
        b.iter(|| adjoint_gradient(black_box(&traj), &p, &cfg, &w).unwrap())
    });
    c.bench_function("classify", |b| b.iter(|| classify(black_box(&traj), &p, &cfg)));
}

criterion_group!(benches, bench_simulate, bench_gradients);
criterion_main!(benches);
