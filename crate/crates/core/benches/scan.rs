//! Sequential vs rayon execution for the scan and truncated-spectrum hot paths.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cmvuh::cmv::VerblunskySequence;
use cmvuh::dynamics::BasePoint;
use cmvuh::hyperbolicity::ClassifyParams;
use cmvuh::johnson::{truncated_spectrum_with, uh_scan, uniform_grid};
use cmvuh::linalg::c;
use cmvuh::par::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_scan(cr: &mut Criterion) {
    let seq = VerblunskySequence::Periodic { coefficients: vec![c(0.5, 0.0), c(-0.3, 0.2)] };
    let grid = uniform_grid(64);
    let params = ClassifyParams::default();
    let mut g = cr.benchmark_group("uh_scan_64");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| uh_scan(black_box(&seq), &grid, &params, exec).unwrap())
        });
    }
    g.finish();
}

fn bench_spectrum(cr: &mut Criterion) {
    let seq = VerblunskySequence::Rotation { frequency: (5f64.sqrt() - 1.0) / 2.0, amplitude: 0.5, phase: 0.0 };
    let omega = BasePoint::CircleCoordinate(0.1);
    let mut g = cr.benchmark_group("truncated_spectrum_128");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| truncated_spectrum_with(black_box(&seq), &omega, 128, (c(1.0, 0.0), c(1.0, 0.0)), exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_scan, bench_spectrum);
criterion_main!(benches);
