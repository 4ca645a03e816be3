use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use seqweak_core::{
    bootstrap, evolve_tree, maximize, settings_for, sweep_one, total_entropy, Aggregation,
    NoiseParams, ProtocolConfig,
};

fn config(n: usize) -> ProtocolConfig {
    let mut strengths = vec![0.35, 0.12, 0.05];
    strengths.truncate(n - 1);
    strengths.push(0.0);
    ProtocolConfig::bell_source(strengths, NoiseParams::new(1e-6, 1e-7).unwrap()).unwrap()
}

fn tree(c: &mut Criterion) {
    let mut g = c.benchmark_group("evolve_tree");
    for n in 1..=4 {
        let cfg = config(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &cfg, |b, cfg| {
            b.iter(|| evolve_tree(black_box(cfg)).unwrap())
        });
    }
    g.finish();
}

fn entropy(c: &mut Criterion) {
    let cfg = config(3);
    c.bench_function("total_entropy/3", |b| {
        b.iter(|| total_entropy(black_box(&cfg), Aggregation::ProbabilityWeighted).unwrap())
    });
}

fn sweep(c: &mut Criterion) {
    let grid: Vec<f64> = (0..200)
        .map(|i| i as f64 * std::f64::consts::FRAC_PI_4 / 199.0)
        .collect();
    let noise = NoiseParams::depolarizing(1e-4).unwrap();
    c.bench_function("sweep_one/200", |b| {
        b.iter(|| sweep_one(noise, black_box(&grid)).unwrap())
    });
}

fn optimizer(c: &mut Criterion) {
    let noise = NoiseParams::depolarizing(1e-4).unwrap();
    let mut g = c.benchmark_group("maximize");
    g.sample_size(10);
    g.bench_function("2", |b| b.iter(|| maximize(black_box(noise), 2).unwrap()));
    g.finish();
}

fn resample(c: &mut Criterion) {
    let cfg = config(3);
    let specs = settings_for(&cfg, 1e5).unwrap();
    let mut g = c.benchmark_group("bootstrap");
    g.sample_size(20);
    g.bench_function("3 steps x 100", |b| {
        b.iter(|| bootstrap(&cfg, &specs, 100, black_box(7)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, tree, entropy, sweep, optimizer, resample);
criterion_main!(benches);
