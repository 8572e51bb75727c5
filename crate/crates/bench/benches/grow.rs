//! Tree growth over a 20k-sample transfer set at the sizes the grid
//! actually sweeps.

use advtree_bench::synthetic_samples;
use advtree_core::transfer::{build_costs, to_dataset, Objective};
use advtree_core::tree::grow;
use advtree_core::{Criterion as SplitCriterion, TreeConfig};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bench_grow(c: &mut Criterion) {
    let samples = synthetic_samples(20_000, 9);
    let costs = build_costs(&samples, Objective::Dpic, None).unwrap();
    let data = to_dataset(&samples, &costs).unwrap();
    let mut group = c.benchmark_group("grow_dpic_20k");
    for max_nodes in [15usize, 63] {
        group.bench_with_input(BenchmarkId::from_parameter(max_nodes), &max_nodes, |b, &n| {
            b.iter(|| {
                grow(
                    black_box(&data),
                    &TreeConfig { criterion: SplitCriterion::CostInfoGain, max_nodes: n },
                )
                .unwrap()
            })
        });
    }
    group.finish();
}

fn bench_cost_rows(c: &mut Criterion) {
    let samples = synthetic_samples(20_000, 9);
    c.bench_function("build_costs_dpic_r_20k", |b| {
        b.iter(|| build_costs(black_box(&samples), Objective::DpicR, Some(0.08)).unwrap())
    });
}

criterion_group!(benches, bench_grow, bench_cost_rows);
criterion_main!(benches);
