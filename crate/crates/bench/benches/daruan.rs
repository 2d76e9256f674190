use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use gfwp_core::daruan::DaruanEdge;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn edge(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut group = c.benchmark_group("daruan");
    for layers in [1usize, 2, 4] {
        let e = DaruanEdge::random(&mut rng, layers);
        group.bench_with_input(BenchmarkId::new("forward", layers), &e, |b, e| {
            b.iter(|| e.forward(black_box(0.3)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("grad", layers), &e, |b, e| {
            b.iter(|| e.grad(black_box(0.3), 1.0).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, edge);
criterion_main!(benches);
