use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use kreinlab::discretize::{assemble_on, build_mesh};
use kreinlab::dtn::{dtn, krein_verify, spectrum_scan, BoundaryOperator};
use kreinlab::geometry::unit_disk;
use kreinlab::linalg::c;
use kreinlab::suite::standard_operators;
use kreinlab_bench::drift_model;

fn assembly(cr: &mut Criterion) {
    let op = standard_operators().remove(1);
    let disk = unit_disk();
    let mut g = cr.benchmark_group("assembly");
    for h in [0.1, 0.05] {
        g.bench_function(format!("mesh h={h}"), |b| b.iter(|| build_mesh(black_box(&disk), h).unwrap()));
        g.bench_function(format!("assemble h={h}"), |b| b.iter(|| assemble_on(&op, &disk, h).unwrap()));
    }
    g.finish();
}

fn dtn_map(cr: &mut Criterion) {
    let model = drift_model(0.1);
    let mut k = 0u64;
    cr.bench_function("dtn h=0.1", |b| {
        b.iter(|| {
            // a fresh λ each time so the factor cache does not short-circuit
            k += 1;
            dtn(&model, c(0.5, 0.3 + 1e-6 * k as f64)).unwrap()
        })
    });
}

fn krein(cr: &mut Criterion) {
    let model = drift_model(0.1);
    let cop = BoundaryOperator::robin(c(2.0, 0.0));
    let mut k = 0u64;
    cr.bench_function("krein_verify h=0.1", |b| {
        b.iter(|| {
            k += 1;
            krein_verify(&model, &cop, c(-1.0, 2.0 + 1e-6 * k as f64)).unwrap()
        })
    });
}

fn scan(cr: &mut Criterion) {
    let model = drift_model(0.2);
    let grid: Vec<_> = (0..16).map(|i| c(0.5 + 0.5 * i as f64, 0.0)).collect();
    let mut g = cr.benchmark_group("scan");
    g.sample_size(10);
    g.bench_function("neumann 16 points h=0.2", |b| {
        b.iter(|| spectrum_scan(&model, &BoundaryOperator::neumann(), black_box(&grid)).unwrap())
    });
    g.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = assembly, dtn_map, krein, scan
}
criterion_main!(benches);
