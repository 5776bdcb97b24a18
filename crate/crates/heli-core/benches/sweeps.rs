//! Parallel-vs-sequential benchmarks for the sweep workloads: the
//! certificate trajectory batch and the residual Monte-Carlo bound check.
//! `map_slice` fans out over rayon under the default `parallel` feature;
//! `map_slice_seq` is the single-thread reference.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use heli_core::design::paper_gain_preset;
use heli_core::exec::{map_slice, map_slice_seq};
use heli_core::heli::{residual_n, GainConvention, HeliParams, StateZ};
use heli_core::stability::{
    kappa, sample_initial_states, simulate_certificate_trajectory, Certificate,
};

fn trajectory_sweep(c: &mut Criterion) {
    let p = HeliParams::plausible_rig();
    let preset = paper_gain_preset();
    let cert = Certificate::build(&p, &preset, 0.0, GainConvention::Torque, None).unwrap();
    let starts = sample_initial_states(7, 32, cert.z0_max);

    let run_one = |z0: &StateZ| {
        let trace = simulate_certificate_trajectory(&p, &preset, 0.0, z0, 1e-3, 20.0).unwrap();
        (0..trace.len())
            .map(|i| trace.z_norm(i))
            .fold(0.0f64, f64::max)
    };

    let mut group = c.benchmark_group("trajectory_sweep_32x20s");
    group.sample_size(10);
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(map_slice(&starts, run_one)))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(map_slice_seq(&starts, run_one)))
    });
    group.finish();
}

fn residual_monte_carlo(c: &mut Criterion) {
    let p = HeliParams::plausible_rig();
    let k = kappa(&p, 0.0);
    let samples = sample_initial_states(11, 100_000, 0.1);

    let margin = |z: &StateZ| {
        let n = residual_n(&p, z, 0.0);
        let n_norm = n.iter().map(|v| v * v).sum::<f64>().sqrt();
        n_norm / (k * z.norm() * z.norm())
    };
    let fold_max = |v: Vec<f64>| v.into_iter().fold(0.0f64, f64::max);

    let mut group = c.benchmark_group("residual_monte_carlo_100k");
    group.bench_function("parallel", |b| {
        b.iter(|| black_box(fold_max(map_slice(&samples, margin))))
    });
    group.bench_function("sequential", |b| {
        b.iter(|| black_box(fold_max(map_slice_seq(&samples, margin))))
    });
    group.finish();
}

criterion_group!(benches, trajectory_sweep, residual_monte_carlo);
criterion_main!(benches);
