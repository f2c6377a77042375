//! Benchmarks for the hot kernels: map application (dense vs factored),
//! Lanczos iteration, echo evolution, and one OTOC time step.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use qchaos::echo::loschmidt_echo;
use qchaos::hilbert::{coherent_state, random_state, RngStream};
use qchaos::krylov::lanczos_state;
use qchaos::models::{catmap_quantum, torus_cos_momentum, torus_cos_position, CatMapParams};
use qchaos::otoc::{otoc, RhoSpec};
use qchaos::propagate::{floquet_conjugate, Evolver};

fn bench_map_apply(c: &mut Criterion) {
    let mut group = c.benchmark_group("catmap_apply");
    for &n in &[256usize, 512, 1024, 2048] {
        let map = catmap_quantum(&CatMapParams { n, kappa: 0.3 }).unwrap();
        let mut rng = RngStream::new(1);
        let psi = random_state(n, &mut rng).unwrap();
        let label = if map.is_factored() {
            "factored"
        } else {
            "dense"
        };
        group.bench_with_input(BenchmarkId::new(label, n), &n, |b, _| {
            b.iter(|| map.apply(&psi).unwrap())
        });
    }
    group.finish();
}

fn bench_lanczos(c: &mut Criterion) {
    let mut group = c.benchmark_group("lanczos_state");
    for &dim in &[128usize, 256] {
        let mut rng = RngStream::new(2);
        let h = qchaos::models::goe_hamiltonian(dim, &mut rng).unwrap();
        let psi0 = random_state(dim, &mut rng).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |b, _| {
            b.iter(|| lanczos_state(&h, &psi0, dim, None).unwrap())
        });
    }
    group.finish();
}

fn bench_echo(c: &mut Criterion) {
    let n = 512;
    let u1 = Evolver::Floquet(catmap_quantum(&CatMapParams { n, kappa: 0.0 }).unwrap());
    let u2 = Evolver::Floquet(catmap_quantum(&CatMapParams { n, kappa: 0.05 }).unwrap());
    let psi0 = coherent_state(n, 0.3, 0.6).unwrap();
    let grid: Vec<f64> = (0..=40).map(|t| t as f64).collect();
    c.bench_function("loschmidt_echo_n512_t40", |b| {
        b.iter(|| loschmidt_echo(&u1, &u2, &psi0, &grid).unwrap())
    });
}

fn bench_otoc_step(c: &mut Criterion) {
    let n = 512;
    let map = catmap_quantum(&CatMapParams { n, kappa: 0.3 }).unwrap();
    let evolver = Evolver::Floquet(map.clone());
    let v = torus_cos_position(n).unwrap();
    let w = torus_cos_momentum(n).unwrap();
    let grid: Vec<f64> = (0..=4).map(|t| t as f64).collect();
    c.bench_function("otoc_n512_4steps", |b| {
        b.iter(|| otoc(&v, &w, &evolver, &grid, &RhoSpec::InfiniteTemperature).unwrap())
    });
    let wm = w.mat().clone();
    c.bench_function("floquet_conjugate_n512", |b| {
        b.iter(|| floquet_conjugate(&map, &wm))
    });
}

criterion_group!(
    kernels,
    bench_map_apply,
    bench_lanczos,
    bench_echo,
    bench_otoc_step
);
criterion_main!(kernels);
