use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use gfwp_core::scan::{parallel_scan, random_pairs, sequential_scan};

fn scans(c: &mut Criterion) {
    let mut group = c.benchmark_group("scan");
    for t in [1usize << 12, 1 << 14, 1 << 16] {
        let pairs = random_pairs(t, 4, 7);
        let w1 = vec![0.5; 4];
        group.throughput(Throughput::Elements(t as u64));
        group.bench_with_input(BenchmarkId::new("sequential", t), &pairs, |b, p| {
            b.iter(|| sequential_scan(p, &w1).unwrap())
        });
        for workers in [2usize, 4] {
            group.bench_with_input(BenchmarkId::new(format!("parallel-{workers}"), t), &pairs, |b, p| {
                b.iter(|| parallel_scan(p, &w1, workers).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, scans);
criterion_main!(benches);
