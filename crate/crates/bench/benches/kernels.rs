use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use tubehom_bench::{circle, ellipse};
use tubehom_core::harness::{HomogLevel, Propagator};
use tubehom_core::geometry::Convention;
use tubehom_core::operators::assemble_induced_family;
use tubehom_core::spectral::{bessel_j_zeros, eigensolve, ground_pair, Renorm};
use tubehom_core::theory::{build_system, check_independence};

fn assembly(c: &mut Criterion) {
    let tube = circle(256, 201);
    let (l0, _) = ground_pair(&tube.grid, Renorm::Discrete).unwrap();
    c.bench_function("assemble Δ(ε) circle 256x201", |b| b.iter(|| assemble_induced_family(black_box(0.1), &tube, l0).unwrap()));
    let op = assemble_induced_family(0.1, &tube, l0).unwrap();
    let x = vec![1.0; op.dim()];
    c.bench_function("apply Δ(ε) circle 256x201", |b| b.iter(|| op.apply_sym(black_box(&x))));
}

fn solvers(c: &mut Criterion) {
    let mut g = c.benchmark_group("solvers");
    g.sample_size(10);
    let tube = ellipse(64, 41);
    let (l0, _) = ground_pair(&tube.grid, Renorm::Discrete).unwrap();
    let op = assemble_induced_family(0.2, &tube, l0).unwrap();
    g.bench_function("eigensolve 20 ellipse 64x41", |b| b.iter(|| eigensolve(&op, 20, 1e-10, 7).unwrap()));
    let level = HomogLevel::new(circle(256, 201), Renorm::Discrete, Convention::Minus, 0.05).unwrap();
    let delta = level.delta(0.1).unwrap();
    let prop = Propagator::new(&delta, 60, 1e-12, 7).unwrap();
    let u = level.initial_state(0.1, 1, 0.0);
    g.bench_function("modal evolve circle 256x201", |b| b.iter(|| prop.evolve(&u, black_box(1.0), 1e-12).unwrap()));
    g.finish();
}

fn small(c: &mut Criterion) {
    c.bench_function("bessel zeros J_0..J_4, 10 each", |b| b.iter(|| (0..5).map(|n| bessel_j_zeros(n, 10).unwrap()).count()));
    c.bench_function("independence check k=8", |b| b.iter(|| check_independence(&build_system(black_box(8)).unwrap()).unwrap()));
}

criterion_group!(benches, assembly, solvers, small);
criterion_main!(benches);
