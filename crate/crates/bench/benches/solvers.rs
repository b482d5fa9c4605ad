use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pdlog_bench::{eulerian, funnel, undirected};
use pdlog_core::eulerian::find_path_eulerian_with;
use pdlog_core::walk::estimate_with_samples;
use pdlog_core::{
    find_path_undirected, parse_rational, solve, substream, EstimatorConfig, EulerianOptions, Membership, Seed,
    SwfpOptions, WorkspaceMeter,
};

fn undirected_paths(c: &mut Criterion) {
    let mut group = c.benchmark_group("undirected");
    group.sample_size(10);
    for n in [8, 16, 32] {
        let (g, t) = undirected(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| find_path_undirected(&g, 0, t, Seed(1)).unwrap())
        });
    }
    group.finish();
}

fn eulerian_paths(c: &mut Criterion) {
    let mut group = c.benchmark_group("eulerian");
    group.sample_size(10);
    for n in [8, 16] {
        let (g, t) = eulerian(n);
        for membership in [Membership::Cached, Membership::Streaming] {
            let opts = EulerianOptions {
                membership,
                ..Default::default()
            };
            let id = BenchmarkId::new(format!("{membership:?}").to_lowercase(), n);
            group.bench_function(id, |b| {
                b.iter(|| {
                    let mut walks = substream(Seed(1), "walks");
                    find_path_eulerian_with(&g, 0, t, &opts, &mut walks, &WorkspaceMeter::new()).unwrap()
                })
            });
        }
    }
    group.finish();
}

fn short_walk(c: &mut Criterion) {
    let eps = parse_rational("1/20").unwrap();
    let delta = parse_rational("1/1000").unwrap();
    let opts = SwfpOptions::new(EstimatorConfig::practical(eps, delta).unwrap());
    let mut group = c.benchmark_group("short_walk");
    for (n, k) in [(4, 3), (8, 4)] {
        let inst = funnel(n, k);
        group.bench_function(BenchmarkId::new("solve", format!("{n}x{k}")), |b| {
            b.iter(|| solve(&inst, &opts, Seed(1)).unwrap())
        });
    }
    let inst = funnel(8, 4);
    group.bench_function("estimate_1000_walks", |b| {
        let mut walks = substream(Seed(2), "walks");
        b.iter(|| estimate_with_samples(&inst.graph, black_box(0), 7, 4, 1000, &mut walks))
    });
    group.finish();
}

criterion_group!(benches, undirected_paths, eulerian_paths, short_walk);
criterion_main!(benches);
