//! Hot paths: the vertical eigensolve behind neutral-curve scans, one
//! nonlinear evaluation, one IMEX step, and a full topology classification.

use benard_core::{
    apply_g, classify_regime, Basis, BcTag, BoundaryCondition, IntegrateOptions, Integrator,
    ModeIndex, Parity, SpectralField, TopologyOptions, VerticalDiscretization,
};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn bench_vertical_eigensolve(c: &mut Criterion) {
    let bc = BoundaryCondition::new(BcTag::RigidRigid);
    let disc = VerticalDiscretization::new(bc, 48).unwrap();
    c.bench_function("vertical_eigensolve_rr_n48", |b| {
        b.iter(|| disc.solve(black_box(3.117), black_box(1707.76), 8).unwrap())
    });
}

fn bench_apply_g(c: &mut Criterion) {
    let bc = BoundaryCondition::new(BcTag::RigidRigid);
    let basis = Basis::at_critical(bc, 1.05, 4, 8).unwrap();
    let f = SpectralField::seeded_noise(basis.clone(), 3, 0.5);
    let g = SpectralField::seeded_noise(basis, 4, 0.5);
    c.bench_function("apply_g_k4_j8", |b| {
        b.iter(|| apply_g(black_box(&f), black_box(&g)).unwrap())
    });
}

fn bench_imex_step(c: &mut Criterion) {
    let bc = BoundaryCondition::new(BcTag::FreeFree);
    let basis = Basis::at_critical(bc, 1.05, 4, 8).unwrap();
    let integ = Integrator::new(basis.clone(), basis.rayleigh, IntegrateOptions::default()).unwrap();
    let f = SpectralField::seeded_noise(basis, 9, 1e-2);
    c.bench_function("imex1_step_k4_j8", |b| {
        b.iter(|| integ.step(black_box(&f)).unwrap())
    });
}

fn bench_classify(c: &mut Criterion) {
    let bc = BoundaryCondition::new(BcTag::RigidRigid);
    let basis = Basis::at_critical(bc, 1.0, 2, 4).unwrap();
    let e0 = SpectralField::eigenvector(basis, ModeIndex::new(1, 1, Parity::Sin), 1.0).unwrap();
    let opts = TopologyOptions::default();
    c.bench_function("classify_e0_rigid", |b| {
        b.iter(|| classify_regime(black_box(&e0), bc, &opts).unwrap())
    });
}

criterion_group!(
    benches,
    bench_vertical_eigensolve,
    bench_apply_g,
    bench_imex_step,
    bench_classify
);
criterion_main!(benches);
