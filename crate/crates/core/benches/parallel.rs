use std::hint::black_box;

use cogmac_core::analytic::{sweep_curves, Preset};
use cogmac_core::chain::{
    build_transition_matrix, stationary_distribution_with, SolverOptions, StateSpace,
};
use cogmac_core::model::{ModelParams, SensingDynamics};
use cogmac_core::sim::{derive_seed, run_many, SimConfig};
use cogmac_core::Execution;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

const MODES: [(&str, Execution); 2] =
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn preset_sweep(c: &mut Criterion) {
    let preset = Preset::Fig7;
    let curves = preset.curves();
    let values = preset.axis_values();
    let mut group = c.benchmark_group("preset_sweep");
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, preset.name()), |b| {
            b.iter(|| black_box(sweep_curves(&curves, preset.axis(), &values, exec)))
        });
    }
    group.finish();
}

fn simulation_batch(c: &mut Criterion) {
    let configs: Vec<SimConfig> = (0..8)
        .map(|i| {
            let params = ModelParams { stations: 20, channels: 3, ..ModelParams::default() };
            SimConfig { warmup_slots: 1_000, ..SimConfig::new(params, 50_000, derive_seed(1, i)) }
        })
        .collect();
    let mut group = c.benchmark_group("simulation_batch");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::new(name, configs.len()), |b| {
            b.iter(|| black_box(run_many(&configs, exec)))
        });
    }
    group.finish();
}

fn stationary_solve(c: &mut Criterion) {
    let space = StateSpace::new(32, 5, 6).unwrap();
    let matrix = build_transition_matrix(&space, 0.25, 0.3, SensingDynamics::BirthDeath).unwrap();
    let mut group = c.benchmark_group("stationary_solve");
    group.sample_size(10);
    for (name, execution) in MODES {
        let opts = SolverOptions { execution, ..SolverOptions::default() };
        group.bench_function(BenchmarkId::new(name, space.len()), |b| {
            b.iter(|| black_box(stationary_distribution_with(&matrix, &opts).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, preset_sweep, simulation_batch, stationary_solve);
criterion_main!(benches);
