use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use eqgraph::{
    build_ocp_graph, fit_linearization, optimize_augmented_lagrangian, optimize_kkt_gauss_newton,
    ALConfig, ConstraintMethod, DynamicsMode, OcpWeights, SolverConfig, VehicleParams,
};
use eqgraph_cli::synthesize_reference;

fn bench_kkt_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("kkt_nonlinear_solve");
    group.sample_size(10);
    for n in [5usize, 100] {
        let reference = synthesize_reference(n, 1.0, 42);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter_batched(
                || {
                    build_ocp_graph(
                        &reference,
                        &VehicleParams::default(),
                        &OcpWeights::default(),
                        DynamicsMode::Nonlinear,
                        ConstraintMethod::Kkt,
                    )
                    .unwrap()
                },
                |mut ocp| optimize_kkt_gauss_newton(&mut ocp.graph, &SolverConfig::default()),
                criterion::BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn bench_al_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("al_nonlinear_solve");
    group.sample_size(10);
    for n in [5usize, 100] {
        let reference = synthesize_reference(n, 1.0, 42);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter_batched(
                || {
                    build_ocp_graph(
                        &reference,
                        &VehicleParams::default(),
                        &OcpWeights::default(),
                        DynamicsMode::Nonlinear,
                        ConstraintMethod::Al,
                    )
                    .unwrap()
                },
                |mut ocp| optimize_augmented_lagrangian(&mut ocp.graph, &ALConfig::default()),
                criterion::BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn bench_linearized_solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("kkt_linearized_solve");
    group.sample_size(10);
    for n in [100usize, 385] {
        let reference = synthesize_reference(n, 1.0, 42);
        let (p1, p2) = fit_linearization(reference.mean());
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter_batched(
                || {
                    build_ocp_graph(
                        &reference,
                        &VehicleParams::default(),
                        &OcpWeights::default(),
                        DynamicsMode::Linearized { p1, p2 },
                        ConstraintMethod::Kkt,
                    )
                    .unwrap()
                },
                |mut ocp| optimize_kkt_gauss_newton(&mut ocp.graph, &SolverConfig::default()),
                criterion::BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, bench_kkt_solve, bench_al_solve, bench_linearized_solve);
criterion_main!(benches);
