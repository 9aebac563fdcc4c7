//! Parallel core against a single-thread pool on the same workloads.
//!
//! Reductions use fixed chunking, so both variants return identical values;
//! only the wall time differs. `cargo bench --no-default-features` times the
//! plain-iterator fallback.

use std::sync::Arc;

use bvtrace::asymptotics::quadrature_oracle;
use bvtrace::geometry::{triangulate, BoundaryPatch, Domain};
use bvtrace::isoperimetric::{eigenset_search, SearchFamily, SearchParams};
use bvtrace::plaplace::rayleigh_quotient;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    vec![("1-thread", single), ("default", default)]
}

fn rayleigh(c: &mut Criterion) {
    let mesh = Arc::new(triangulate(&Domain::disk(1.0).unwrap(), 0.01).unwrap());
    let u: Vec<f64> = mesh.vertices().iter().map(|p| 1.0 + 0.3 * p[0] * p[1]).collect();
    let mut g = c.benchmark_group("rayleigh_quotient");
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &pool, |b, pool| {
            b.iter(|| pool.install(|| rayleigh_quotient(&mesh, &u, 1.5).unwrap()))
        });
    }
    g.finish();
}

fn oracle(c: &mut Criterion) {
    let patch = BoundaryPatch::paraboloid(vec![1.0, 1.0], 1.0);
    let mut g = c.benchmark_group("quadrature_oracle_n3");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &pool, |b, pool| {
            b.iter(|| pool.install(|| quadrature_oracle(&patch, 0.1).unwrap()))
        });
    }
    g.finish();
}

fn annealing(c: &mut Criterion) {
    let d = Domain::square_with_appendage(0.01, 0.5).unwrap();
    let params = SearchParams {
        family: SearchFamily::CellAnnealing,
        iterations: 2000,
        chains: Some(4),
        ..SearchParams::default()
    };
    let mut g = c.benchmark_group("eigenset_search");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &pool, |b, pool| {
            b.iter(|| pool.install(|| eigenset_search(&d, &params, None, None).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, rayleigh, oracle, annealing);
criterion_main!(benches);
