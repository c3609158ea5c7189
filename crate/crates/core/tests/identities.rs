//! Structure identities of the advection operator on the eigenmode basis:
//! energy conservation, skew symmetry of the trilinear form, the selection
//! rules that empty most of the quadratic interaction table, and the
//! equalities behind the reduced equations. Everything here must hold to
//! round-off because the quadrature is exact for the truncation.

use benard_core::{
    apply_g, critical_point, trilinear, Basis, BcTag, BoundaryCondition, ModeIndex, Parity,
    SpaceTag, SpectralField,
};
use proptest::prelude::*;
use std::sync::Arc;

/// The identity checks probe every basis mode including the constant shear,
/// so free-free runs in the unconstrained B2 space.
fn basis_at_critical(tag: BcTag, ratio: f64) -> Arc<Basis> {
    let bc = match tag {
        BcTag::FreeFree => BoundaryCondition::with_space(tag, SpaceTag::B2).unwrap(),
        _ => BoundaryCondition::new(tag),
    };
    let cp = critical_point(bc).unwrap();
    Basis::new(bc, cp.l_c, ratio * cp.r_c, 3, 6, None).unwrap()
}

fn mode(basis: &Arc<Basis>, k: usize, j: usize, parity: Parity) -> SpectralField {
    SpectralField::eigenvector(basis.clone(), ModeIndex::new(k, j, parity), 1.0).unwrap()
}

#[test]
fn energy_and_antisymmetry_for_fifty_random_fields() {
    for tag in [BcTag::RigidRigid, BcTag::FreeFree] {
        let basis = basis_at_critical(tag, 1.0);
        for seed in 0..25u64 {
            let a = SpectralField::seeded_noise(basis.clone(), seed, 1.0);
            let b = SpectralField::seeded_noise(basis.clone(), 1000 + seed, 1.0);
            let c = SpectralField::seeded_noise(basis.clone(), 2000 + seed, 1.0);
            let energy = trilinear(&a, &b, &b).unwrap();
            assert!(
                energy.abs() <= 1e-10 * a.norm_h() * b.norm_h() * b.norm_h(),
                "{tag:?} seed {seed}: (G(a,b),b) = {energy:.3e}"
            );
            let t1 = trilinear(&a, &b, &c).unwrap();
            let t2 = trilinear(&a, &c, &b).unwrap();
            assert!(
                (t1 + t2).abs() <= 1e-10 * a.norm_h() * b.norm_h() * c.norm_h(),
                "{tag:?} seed {seed}: antisymmetry residual {:.3e}",
                (t1 + t2).abs()
            );
        }
    }
}

#[test]
fn selection_rules_for_the_critical_pair() {
    // products of the critical pair reach only k = 0 and k = 2, Cos parity
    for tag in [BcTag::RigidRigid, BcTag::FreeFree, BcTag::FreeRigid] {
        let basis = basis_at_critical(tag, 1.0);
        let p11 = mode(&basis, 1, 1, Parity::Cos);
        let q11 = mode(&basis, 1, 1, Parity::Sin);
        for j in 1..=basis.j_max {
            // wavenumbers outside {0, 2} receive nothing
            for k in [1usize, 3] {
                let t = trilinear(&p11, &p11, &mode(&basis, k, j, Parity::Cos)).unwrap();
                assert!(t.abs() < 1e-10, "{tag:?} (G(p,p), psi_{k}{j}) = {t:.3e}");
                let t = trilinear(&q11, &q11, &mode(&basis, k, j, Parity::Cos)).unwrap();
                assert!(t.abs() < 1e-10, "{tag:?} (G(q,q), psi_{k}{j}) = {t:.3e}");
                let t = trilinear(&mode(&basis, k, j, Parity::Sin), &q11, &p11).unwrap();
                assert!(t.abs() < 1e-10, "{tag:?} (G(qt_{k}{j}, q), p) = {t:.3e}");
                let t = trilinear(&mode(&basis, k, j, Parity::Sin), &p11, &q11).unwrap();
                assert!(t.abs() < 1e-10, "{tag:?} (G(qt_{k}{j}, p), q) = {t:.3e}");
            }
            // Sin-parity targets receive nothing from the squared pair
            for k in 0..=3usize {
                let t = trilinear(&p11, &p11, &mode(&basis, k, j, Parity::Sin)).unwrap();
                assert!(t.abs() < 1e-10, "{tag:?} (G(p,p), psit_{k}{j}) = {t:.3e}");
                let t = trilinear(&q11, &q11, &mode(&basis, k, j, Parity::Sin)).unwrap();
                assert!(t.abs() < 1e-10, "{tag:?} (G(q,q), psit_{k}{j}) = {t:.3e}");
            }
            // cos-parity donors against the critical pair
            let t = trilinear(&mode(&basis, 2, j, Parity::Cos), &q11, &p11).unwrap();
            assert!(t.abs() < 1e-10);
            let t = trilinear(&mode(&basis, 2, j, Parity::Cos), &p11, &q11).unwrap();
            assert!(t.abs() < 1e-10);
        }
    }
}

#[test]
fn second_harmonic_donor_identity_vanishes() {
    // (G(psit_2j, psi_11), psit_11) = -(G(psit_2j, psit_11), psi_11) = 0
    for tag in [BcTag::RigidRigid, BcTag::FreeFree] {
        let basis = basis_at_critical(tag, 1.0);
        let p11 = mode(&basis, 1, 1, Parity::Cos);
        let q11 = mode(&basis, 1, 1, Parity::Sin);
        for j in 1..=4usize {
            let donor = mode(&basis, 2, j, Parity::Sin);
            let t1 = trilinear(&donor, &p11, &q11).unwrap();
            let t2 = trilinear(&donor, &q11, &p11).unwrap();
            assert!(
                (t1 + t2).abs() < 1e-10,
                "{tag:?} j={j}: antisymmetric pair {t1:.3e}, {t2:.3e}"
            );
            assert!(t1.abs() < 1e-10, "{tag:?} j={j}: t1 = {t1:.3e}");
        }
    }
}

#[test]
fn cross_parity_equalities_behind_the_reduction() {
    for tag in [BcTag::RigidRigid, BcTag::FreeFree, BcTag::FreeRigid] {
        let basis = basis_at_critical(tag, 1.0);
        let p11 = mode(&basis, 1, 1, Parity::Cos);
        let q11 = mode(&basis, 1, 1, Parity::Sin);
        let g_pp = apply_g(&p11, &p11).unwrap();
        let g_qq = apply_g(&q11, &q11).unwrap();
        let g_pq = apply_g(&p11, &q11).unwrap();
        let g_qp = apply_g(&q11, &p11).unwrap();
        for j in 1..=basis.j_max {
            let t0 = ModeIndex::new(0, j, Parity::Cos);
            let t2 = ModeIndex::new(2, j, Parity::Cos);
            let s0 = ModeIndex::new(0, j, Parity::Sin);
            let s2 = ModeIndex::new(2, j, Parity::Sin);
            assert!(
                (g_pp.get(t0) - g_qq.get(t0)).abs() < 1e-10,
                "{tag:?} j={j}: c0 equality"
            );
            assert!(
                (g_pp.get(t2) + g_qq.get(t2)).abs() < 1e-10,
                "{tag:?} j={j}: c2 sign flip"
            );
            assert!(
                (g_pq.get(s0) + g_qp.get(s0)).abs() < 1e-10,
                "{tag:?} j={j}: shear-row sum"
            );
            assert!(
                (g_pq.get(s2) - g_pp.get(t2)).abs() < 1e-10
                    && (g_qp.get(s2) - g_pp.get(t2)).abs() < 1e-10,
                "{tag:?} j={j}: mixed second-harmonic equality"
            );
        }
    }
}

#[test]
fn parity_norm_equality() {
    let basis = basis_at_critical(BcTag::RigidRigid, 1.0);
    for k in 0..=3usize {
        for j in 1..=basis.j_max {
            let p = mode(&basis, k, j, Parity::Cos);
            let q = mode(&basis, k, j, Parity::Sin);
            assert!((p.norm_h() - q.norm_h()).abs() < 1e-14);
            assert_eq!(p.inner_h(&q).unwrap(), 0.0);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn shift_equivariance_of_the_nonlinearity(seed in 0u64..1000, frac in 0.0f64..1.0) {
        let basis = basis_at_critical(BcTag::FreeFree, 1.0);
        let f = SpectralField::seeded_noise(basis.clone(), seed, 0.7);
        let delta = frac * basis.period;
        let lhs = apply_g(&f.shift_x1(delta), &f.shift_x1(delta)).unwrap();
        let rhs = apply_g(&f, &f).unwrap().shift_x1(delta);
        let diff = lhs.sub(&rhs).unwrap().norm_h();
        prop_assert!(diff <= 1e-10 * (1.0 + lhs.norm_h()));
    }

    #[test]
    fn divergence_free_after_nonlinearity(seed in 0u64..1000) {
        let basis = basis_at_critical(BcTag::RigidRigid, 1.0);
        let f = SpectralField::seeded_noise(basis.clone(), seed, 0.7);
        let g = apply_g(&f, &f).unwrap();
        // probe the synthesized divergence pointwise
        for &(x1, x2) in &[(0.1, 0.3), (1.0, 0.62), (1.7, 0.95)] {
            let (_, du, _) = g.velocity_derivatives(x1, x2);
            let div = du[0][0] + du[1][1];
            prop_assert!(div.abs() <= 1e-10 * (1.0 + g.norm_h()));
        }
    }
}
