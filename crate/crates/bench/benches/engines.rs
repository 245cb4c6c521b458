use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use otoc_bench::{alternating, few_gates};
use otoc_core::gaussian::{boundary_profile, gaussian_lightcone};
use otoc_core::oracle::{dense_evolve, dense_otoc, single_site};
use otoc_core::{approx_lightcone, exact_lightcone, exact_otoc, PauliObservable};

fn gaussian(c: &mut Criterion) {
    let mut group = c.benchmark_group("gaussian_lightcone");
    for n in [30, 60, 100] {
        let circuit = alternating(n, 1.0, 10, false);
        let b = PauliObservable::single_site('X', n / 2, n).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |bench, _| {
            bench.iter(|| gaussian_lightcone(black_box(&circuit), &b, 'Z').unwrap())
        });
    }
    group.finish();

    let n = 60;
    let circuit = alternating(n, 1.0, 10, false);
    let mut u = nalgebra::DMatrix::identity(2 * n, 2 * n);
    for p in circuit.propagators().into_iter().flatten() {
        u *= p;
    }
    let alpha = PauliObservable::single_site('X', n / 2, n).unwrap().config;
    c.bench_function("boundary_profile/60", |bench| bench.iter(|| boundary_profile(black_box(&u), &alpha, n).unwrap()));
}

fn exact(c: &mut Criterion) {
    let mut group = c.benchmark_group("exact_otoc");
    group.sample_size(10);
    for g in 0..=2 {
        let n = 12;
        let circuit = few_gates(n, g);
        let a = PauliObservable::single_site('Z', 3, n).unwrap();
        let b = PauliObservable::single_site('X', n / 2, n).unwrap();
        group.bench_with_input(BenchmarkId::new("gates", g), &g, |bench, _| {
            bench.iter(|| exact_otoc(black_box(&circuit), &a, &b, 3).unwrap())
        });
    }
    group.finish();

    let n = 30;
    let circuit = few_gates(n, 2);
    let b = PauliObservable::single_site('X', n / 2, n).unwrap();
    let mut group = c.benchmark_group("exact_lightcone");
    group.sample_size(10);
    group.bench_function("n30_g2", |bench| bench.iter(|| exact_lightcone(black_box(&circuit), &b, 'Z', 2).unwrap()));
    group.finish();
}

fn approx(c: &mut Criterion) {
    let mut group = c.benchmark_group("approx_lightcone");
    group.sample_size(20);
    for nu in [0.0, 2.0, 10.0] {
        let circuit = alternating(30, nu, 10, true);
        group.bench_with_input(BenchmarkId::new("n30_nu", nu), &nu, |bench, _| {
            bench.iter(|| approx_lightcone(black_box(&circuit), 0.2).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let mut group = c.benchmark_group("dense_oracle");
    group.sample_size(10);
    for n in [6, 8] {
        let circuit = few_gates(n, 2);
        let a = single_site('Z', 1, n).unwrap();
        let b = single_site('X', n / 2, n).unwrap();
        group.bench_with_input(BenchmarkId::new("evolve_and_otoc", n), &n, |bench, _| {
            bench.iter(|| {
                let u = dense_evolve(black_box(&circuit)).unwrap();
                dense_otoc(&u, &a, &b).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, gaussian, exact, approx, oracle);
criterion_main!(benches);
