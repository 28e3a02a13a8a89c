use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use ost_bench::fixture;
use ost_core::{unmix, SolverConfig, Variant};

fn solvers(c: &mut Criterion) {
    let mut group = c.benchmark_group("unmix");
    for &(m, k) in &[(1024usize, 60usize), (2048, 60)] {
        let fx = fixture(m, k, 100, 1);
        group.throughput(Throughput::Elements(100));
        let cfg = SolverConfig {
            lambda_e: 30.0,
            lambda_g: 1000.0,
            ..SolverConfig::default()
        };
        for variant in [Variant::Ost, Variant::OstEntropic, Variant::OstGroup, Variant::OstCombined] {
            group.bench_with_input(BenchmarkId::new(variant.name(), format!("{m}x{k}")), &fx, |b, fx| {
                b.iter(|| unmix(&fx.frames, &fx.cost, &cfg, variant).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, solvers);
criterion_main!(benches);
