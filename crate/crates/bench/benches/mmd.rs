//! Multi-bandwidth MMD estimates at the sample caps the evaluator uses.

use advtree_bench::point_cloud;
use advtree_core::eval::mmd;
use advtree_core::MmdConfig;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bench_mmd(c: &mut Criterion) {
    let mut group = c.benchmark_group("mmd");
    group.sample_size(20);
    for m in [500usize, 2000] {
        let x = point_cloud(m, 4, 0.0, 1);
        let y = point_cloud(m, 4, 0.25, 2);
        group.bench_with_input(BenchmarkId::from_parameter(m), &m, |b, _| {
            b.iter(|| mmd(black_box(&x), black_box(&y), &MmdConfig::default()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_mmd);
criterion_main!(benches);
