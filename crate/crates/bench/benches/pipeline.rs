use criterion::{criterion_group, criterion_main, Criterion};
use feathom::{
    analyze, bottleneck_distance, fixtures, persistence_landscape, DiagramPoint, PipelineConfig,
};

fn pentagon(c: &mut Criterion) {
    let series = fixtures::pentagon();
    let g = fixtures::pentagon_influence();
    let cfg = PipelineConfig::default();
    c.bench_function("pentagon_analyze", |b| {
        b.iter(|| analyze(&series, &g, &cfg).unwrap())
    });
}

fn diagrams(c: &mut Criterion) {
    let a: Vec<DiagramPoint> = (0..40)
        .map(|i| {
            DiagramPoint::new(
                1,
                i as f64 * 0.1,
                i as f64 * 0.1 + 1.0 + (i % 7) as f64 * 0.05,
            )
        })
        .collect();
    let b: Vec<DiagramPoint> = a
        .iter()
        .map(|p| DiagramPoint::new(1, p.birth + 0.03, p.death - 0.02))
        .collect();
    c.bench_function("bottleneck_40", |bench| {
        bench.iter(|| bottleneck_distance(&a, &b))
    });
    c.bench_function("landscape_40", |bench| {
        bench.iter(|| persistence_landscape(&a))
    });
}

criterion_group!(benches, pentagon, diagrams);
criterion_main!(benches);
