use criterion::{criterion_group, criterion_main, Criterion};
use ost_bench::fixture;
use ost_core::baselines::{plca_unmix, wasserstein_divergence, PlcaConfig};
use ost_core::quadratic_cost;

fn plca(c: &mut Criterion) {
    let fx = fixture(2048, 60, 10, 2);
    let cfg = PlcaConfig::default();
    c.bench_function("plca 2048x60, 10 frames", |b| {
        b.iter(|| plca_unmix(&fx.frames, &fx.dictionary, &cfg, 1).unwrap())
    });
}

fn lp(c: &mut Criterion) {
    // 16-bin transport problem, 256 variables
    let f: Vec<f64> = (1..=16).map(|i| i as f64).collect();
    let cost = quadratic_cost(&f, &f).unwrap();
    let v: Vec<f64> = (0..16).map(|i| (i + 1) as f64 / 136.0).collect();
    let w: Vec<f64> = v.iter().rev().copied().collect();
    c.bench_function("wasserstein 16 bins", |b| {
        b.iter(|| wasserstein_divergence(&v, &w, &cost).unwrap())
    });
}

criterion_group!(benches, plca, lp);
criterion_main!(benches);
