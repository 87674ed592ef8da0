use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use itags_bench::{layered_stn, problem, trait_instance};
use itags_core::motion::{FreeSpace, GridPlanner, Planner, SpaceSignature};
use itags_core::scheduler::solve;
use itags_core::{apr, itags, itags_sequential, Point, SearchConfig};

fn heuristics(c: &mut Criterion) {
    let mut group = c.benchmark_group("apr");
    for &(m, n) in &[(6, 4), (12, 6), (45, 12)] {
        let (q, y, a) = trait_instance(m, n, 4);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{m}x{n}")), &(), |b, _| {
            b.iter(|| apr(black_box(&a), &q, &y))
        });
    }
    group.finish();
}

fn stn(c: &mut Criterion) {
    let mut group = c.benchmark_group("stn_solve");
    for &(layers, width) in &[(4, 3), (8, 4), (12, 6)] {
        let stn = layered_stn(layers, width);
        group.bench_with_input(BenchmarkId::from_parameter(layers * width), &stn, |b, stn| {
            b.iter(|| solve(black_box(stn)))
        });
    }
    group.finish();
}

fn grid(c: &mut Criterion) {
    let domain = problem(0, 8);
    let space = FreeSpace::new(SpaceSignature::single("ground"), domain.spaces["ground"].clone());
    let (start, goal) = (Point::new(2.0, 2.0), Point::new(97.0, 95.0));
    // One planner per iteration measures lattice construction plus search.
    c.bench_function("grid_plan_cold", |b| {
        b.iter(|| GridPlanner::new(1.0).plan(black_box(start), black_box(goal), &space))
    });
    let warm = GridPlanner::new(1.0);
    warm.plan(start, goal, &space);
    c.bench_function("grid_plan_warm", |b| {
        b.iter(|| warm.plan(black_box(start), black_box(goal), &space))
    });
}

fn search(c: &mut Criterion) {
    let mut group = c.benchmark_group("search");
    group.sample_size(10);
    for seed in [0u64, 3] {
        let domain = problem(seed, 8);
        group.bench_with_input(BenchmarkId::new("itags", seed), &domain, |b, d| {
            b.iter(|| itags(d, &SearchConfig::default()).unwrap())
        });
        let limited = SearchConfig {
            node_limit: 2_000,
            ..SearchConfig::default()
        };
        group.bench_with_input(BenchmarkId::new("sequential", seed), &domain, |b, d| {
            b.iter(|| itags_sequential(d, &limited).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, heuristics, stn, grid, search);
criterion_main!(benches);
