use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ssk_core::ensembles::{sample_tridiag, Alpha};
use ssk_core::free_energy::{f_vertical, ContourOptions, ModelParams};
use ssk_core::par::{map_indexed, map_indexed_sequential};
use ssk_core::spectral::{eig_full, log_det_recursion};
use ssk_core::SeedPlan;

const REPLICAS: usize = 32;

fn recursion_replica(n: usize, i: usize) -> f64 {
    let t = sample_tridiag(Alpha::Real, n, &SeedPlan::new(1, i as u64)).unwrap();
    log_det_recursion(&t, Alpha::Real).unwrap().shifted
}

fn free_energy_replica(n: usize, i: usize) -> f64 {
    let t = sample_tridiag(Alpha::Real, n, &SeedPlan::new(2, i as u64)).unwrap();
    let s = eig_full(&t).unwrap();
    let p = ModelParams::from_b(Alpha::Real, n, -1.0, 0.0).unwrap();
    f_vertical(&s, &p, &ContourOptions::default()).unwrap().f
}

fn bench(c: &mut Criterion) {
    let mut g = c.benchmark_group("replicas");
    g.sample_size(10);
    for n in [2000, 20_000] {
        g.bench_with_input(BenchmarkId::new("recursion/parallel", n), &n, |b, &n| {
            b.iter(|| map_indexed(REPLICAS, |i| recursion_replica(black_box(n), i)))
        });
        g.bench_with_input(BenchmarkId::new("recursion/sequential", n), &n, |b, &n| {
            b.iter(|| map_indexed_sequential(REPLICAS, |i| recursion_replica(black_box(n), i)))
        });
    }
    let n = 300;
    g.bench_with_input(BenchmarkId::new("free_energy/parallel", n), &n, |b, &n| {
        b.iter(|| map_indexed(REPLICAS, |i| free_energy_replica(black_box(n), i)))
    });
    g.bench_with_input(
        BenchmarkId::new("free_energy/sequential", n),
        &n,
        |b, &n| {
            b.iter(|| map_indexed_sequential(REPLICAS, |i| free_energy_replica(black_box(n), i)))
        },
    );
    g.finish();
}

criterion_group!(benches, bench);
criterion_main!(benches);
