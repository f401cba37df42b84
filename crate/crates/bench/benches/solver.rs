use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use spde_lab_bench::{reaction_simulator, small_ensemble};
use spde_lab_core::grid::principal_eigenpair;
use spde_lab_core::run_ensemble;
use spde_lab_core::theory::{kaplan_ode_solve, KaplanParams};
use spde_lab_core::GridSpec;

fn single_path(c: &mut Criterion) {
    let mut group = c.benchmark_group("path");
    for n in [32, 64, 128] {
        let sim = reaction_simulator(n, 0.01);
        group.bench_with_input(BenchmarkId::from_parameter(n), &sim, |b, sim| {
            let mut i = 0;
            b.iter(|| {
                i += 1;
                black_box(sim.run(1, i))
            })
        });
    }
    group.finish();
}

fn ensemble(c: &mut Criterion) {
    let sim = reaction_simulator(64, 0.01);
    let cfg = small_ensemble(16);
    c.bench_function("ensemble/16x64", |b| b.iter(|| black_box(run_ensemble(&sim, &cfg).unwrap())));
}

fn oracles(c: &mut Criterion) {
    let g = GridSpec::new(0.0, 1.0, 256).unwrap();
    c.bench_function("eigenpair/256", |b| b.iter(|| black_box(principal_eigenpair(&g).unwrap())));
    let p = KaplanParams { lambda1: 9.87, gain: 1.0, damp: 2.0, gamma_exp: 2.0, eta0: 39.5 };
    c.bench_function("kaplan_ode", |b| b.iter(|| black_box(kaplan_ode_solve(p, 0.05, &[0.01, 0.02]).unwrap())));
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(20);
    targets = single_path, ensemble, oracles
}
criterion_main!(benches);
