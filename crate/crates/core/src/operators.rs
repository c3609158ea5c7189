//! The linear operator L_lambda, the bilinear advection operator G, the
//! trilinear form, and the Leray projection of gridded velocity data.
//!
//! Products are evaluated on the dealiased analysis grid (trapezoid in x1,
//! Gauss in x2), which integrates triple products of resolved modes exactly;
//! that is what makes the skew-symmetry identities of the trilinear form
//! hold to round-off rather than to truncation error.

use crate::basis::{Basis, GridData, ModeIndex, Parity};
use crate::bc::PhysParams;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// L_lambda psi = -A psi + B_lambda psi with A = (-P Delta u, -Delta T) and
/// B_lambda psi = lambda (P(T k), u2). Exact for any Rayleigh number within
/// the resolved span; diagonal when `p.rayleigh` equals the basis Rayleigh
/// number.
pub fn apply_l(psi: &SpectralField, p: &PhysParams) -> SpectralField {
    let out = psi.basis().apply_linear(psi.coeffs(), p.lambda(), None);
    SpectralField::from_coeffs(psi.basis().clone(), out).expect("same basis")
}

/// Residual of the full right-hand side L psi + G(psi, psi).
pub fn rhs_norm(psi: &SpectralField, p: &PhysParams) -> Result<f64> {
    let mut lin = apply_l(psi, p);
    let g = apply_g(psi, psi)?;
    lin.axpy(1.0, &g)?;
    Ok(lin.norm_h())
}

/// G(psi1, psi2) = (-P[(u1 . grad) u2], -(u1 . grad) T2), H-projected onto
/// the basis. The Leray projection never appears: the projection of the
/// advection term onto divergence-free basis velocities equals the
/// projection of the unprojected term.
pub fn apply_g(psi1: &SpectralField, psi2: &SpectralField) -> Result<SpectralField> {
    psi1.compatible(psi2)?;
    let basis = psi1.basis();
    let adv = psi1.basis().synthesize(psi1.coeffs());
    let d = psi2.basis().synthesize_with_derivs(psi2.coeffs());
    let n = adv.u1.len();
    let mut conv = GridData {
        u1: vec![0.0; n],
        u2: vec![0.0; n],
        t: vec![0.0; n],
    };
    for i in 0..n {
        conv.u1[i] = adv.u1[i] * d.d1u1[i] + adv.u2[i] * d.d2u1[i];
        conv.u2[i] = adv.u1[i] * d.d1u2[i] + adv.u2[i] * d.d2u2[i];
        conv.t[i] = adv.u1[i] * d.d1t[i] + adv.u2[i] * d.d2t[i];
    }
    let mut coeffs = basis.analyze(&conv);
    for c in &mut coeffs {
        *c = -*c;
    }
    basis.enforce_space(&mut coeffs);
    SpectralField::from_coeffs(basis.clone(), coeffs)
}

/// (G(a, b), c)_H by direct quadrature; exact for resolved fields.
pub fn trilinear(a: &SpectralField, b: &SpectralField, c: &SpectralField) -> Result<f64> {
    a.compatible(b)?;
    a.compatible(c)?;
    let basis = a.basis();
    let ua = basis.synthesize(a.coeffs());
    let db = basis.synthesize_with_derivs(b.coeffs());
    let wc = basis.synthesize(c.coeffs());
    let n = ua.u1.len();
    let mut integrand = vec![0.0; n];
    for i in 0..n {
        let conv1 = ua.u1[i] * db.d1u1[i] + ua.u2[i] * db.d2u1[i];
        let conv2 = ua.u1[i] * db.d1u2[i] + ua.u2[i] * db.d2u2[i];
        let convt = ua.u1[i] * db.d1t[i] + ua.u2[i] * db.d2t[i];
        integrand[i] = conv1 * wc.u1[i] + conv2 * wc.u2[i] + convt * wc.t[i];
    }
    Ok(-basis.integrate_grid(&integrand))
}

/// inner_H(a, b): unweighted L2 product over the period cell.
pub fn inner_h(a: &SpectralField, b: &SpectralField) -> Result<f64> {
    a.inner_h(b)
}

/// Gridded velocity samples for the Leray projection: columns at
/// x1_i = i L / n1 for i = 0..=n1 (the periodic seam is stored twice so the
/// periodicity of the input can be checked), rows at the basis analysis
/// nodes in x2. Row-major `[i1 * nq + q]` with i1 in 0..=n1.
#[derive(Debug, Clone)]
pub struct GridVectorField {
    pub n1: usize,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl GridVectorField {
    /// Sample a closure (x1, x2) -> (u1, u2) on the projection grid of a
    /// basis.
    pub fn sample(basis: &Basis, f: impl Fn(f64, f64) -> (f64, f64)) -> Self {
        let (n1, nq) = basis.grid_shape();
        let l = basis.period;
        let x2 = basis.analysis_x2().to_vec();
        let mut u1 = vec![0.0; (n1 + 1) * nq];
        let mut u2 = vec![0.0; (n1 + 1) * nq];
        for i in 0..=n1 {
            let x1 = l * i as f64 / n1 as f64;
            for (q, &xv) in x2.iter().enumerate() {
                let (a, b) = f(x1, xv);
                u1[i * nq + q] = a;
                u2[i * nq + q] = b;
            }
        }
        GridVectorField { n1, u1, u2 }
    }
}

/// Velocity part of a field: coefficients over the divergence-free stream
/// modes of the basis (the velocity parts of the eigenvectors and the k = 0
/// shear modes) with no temperature content.
#[derive(Debug, Clone)]
pub struct VelocityPart {
    basis: Arc<Basis>,
    /// Same (k, j, parity) layout as SpectralField coefficients; k = 0 Cos
    /// slots (temperature) are always zero.
    pub coeffs: Vec<f64>,
}

impl VelocityPart {
    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    /// Velocity at a point.
    pub fn velocity(&self, x1: f64, x2: f64) -> [f64; 2] {
        let b = &self.basis;
        let mut u = [0.0; 2];
        for j in 1..=b.j_max {
            let y = self.coeffs[b.index_of(ModeIndex::new(0, j, Parity::Sin))];
            if y != 0.0 {
                let (s, _) = b.shear_profile(j);
                u[0] += y * s.eval(x2, 0);
            }
        }
        for k in 1..=b.k_max {
            let a = b.wavenumber(k);
            let (sn, cs) = (a * x1).sin_cos();
            for j in 1..=b.j_max {
                let x = self.coeffs[b.index_of(ModeIndex::new(k, j, Parity::Cos))];
                let y = self.coeffs[b.index_of(ModeIndex::new(k, j, Parity::Sin))];
                if x == 0.0 && y == 0.0 {
                    continue;
                }
                let (h, _) = b.roll_profiles(k, j);
                u[0] += (-x * sn + y * cs) * h.eval(x2, 1);
                u[1] += a * (x * cs + y * sn) * h.eval(x2, 0);
            }
        }
        u
    }

    /// Sample onto the projection grid (for idempotence checks).
    pub fn sample(&self) -> GridVectorField {
        GridVectorField::sample(&self.basis, |x1, x2| {
            let u = self.velocity(x1, x2);
            (u[0], u[1])
        })
    }

    /// L2 norm of the velocity over the period cell.
    pub fn norm_l2(&self) -> f64 {
        let b = &self.basis;
        let g = self.sample();
        let (n1, nq) = b.grid_shape();
        let mut sq = vec![0.0; n1 * nq];
        for i in 0..n1 {
            for q in 0..nq {
                let v1 = g.u1[i * nq + q];
                let v2 = g.u2[i * nq + q];
                sq[i * nq + q] = v1 * v1 + v2 * v2;
            }
        }
        b.integrate_grid(&sq).sqrt()
    }
}

/// Leray projection of gridded velocity data onto the resolved
/// divergence-free space: per wavenumber, the L2-orthogonal projection onto
/// the span of the stream modes (a small Gram solve, since the velocity
/// parts of the eigenvectors are not mutually orthogonal on their own).
///
/// Gradients project to zero, divergence-free resolved inputs are
/// reproduced, and the operator is idempotent and self-adjoint in the
/// velocity L2 product.
pub fn leray_project(basis: &Arc<Basis>, v: &GridVectorField) -> Result<VelocityPart> {
    let (n1, nq) = basis.grid_shape();
    if v.n1 != n1 || v.u1.len() != (n1 + 1) * nq || v.u2.len() != (n1 + 1) * nq {
        return Err(Error::BasisMismatch(format!(
            "grid shape ({}, {}) does not match the basis projection grid ({}, {})",
            v.n1,
            v.u1.len() / (v.n1 + 1),
            n1,
            nq
        )));
    }
    // periodicity across the seam
    let mut scale = 0.0f64;
    for x in v.u1.iter().chain(&v.u2) {
        scale = scale.max(x.abs());
    }
    let tol = 1e-8 * scale.max(1e-300);
    let mut mismatch = 0.0f64;
    for q in 0..nq {
        mismatch = mismatch
            .max((v.u1[q] - v.u1[n1 * nq + q]).abs())
            .max((v.u2[q] - v.u2[n1 * nq + q]).abs());
    }
    if mismatch > tol {
        return Err(Error::NonPeriodic { mismatch, tol });
    }

    // trig transforms of the interior columns (drop the duplicated seam)
    let l = basis.period;
    let dx = l / n1 as f64;
    let nk = basis.k_max + 1;
    let mut fc = vec![vec![[0.0f64; 2]; nq]; nk];
    let mut fs = vec![vec![[0.0f64; 2]; nq]; nk];
    for k in 0..nk {
        let a = basis.wavenumber(k);
        for i in 0..n1 {
            let x1 = l * i as f64 / n1 as f64;
            let (sn, cs) = (a * x1).sin_cos();
            for q in 0..nq {
                fc[k][q][0] += cs * dx * v.u1[i * nq + q];
                fc[k][q][1] += cs * dx * v.u2[i * nq + q];
                fs[k][q][0] += sn * dx * v.u1[i * nq + q];
                fs[k][q][1] += sn * dx * v.u2[i * nq + q];
            }
        }
    }

    let mut coeffs = vec![0.0; basis.n_coeffs()];
    let w = basis.gauss_weights();
    // k = 0: shear modes are mutually orthogonal, so diagonal projection
    for j in 1..=basis.j_max {
        let (s, _) = basis.shear_profile(j);
        let svals = s.sample(basis.analysis_x2(), 0);
        let mut num = 0.0;
        let mut den = 0.0;
        for q in 0..nq {
            num += w[q] * fc[0][q][0] * svals[q];
            den += w[q] * svals[q] * svals[q];
        }
        coeffs[basis.index_of(ModeIndex::new(0, j, Parity::Sin))] = num / (l * den);
    }
    // k >= 1: Gram solve over the stream-mode velocity parts
    for k in 1..=basis.k_max {
        let a = basis.wavenumber(k);
        let nj = basis.j_max;
        let mut gram = DMatrix::<f64>::zeros(nj, nj);
        for m in 0..nj {
            for n in 0..nj {
                let (hm, _) = basis.roll_profiles(k, m + 1);
                let (hn, _) = basis.roll_profiles(k, n + 1);
                let mut acc = 0.0;
                for q in 0..nq {
                    let x = basis.analysis_x2()[q];
                    acc += w[q]
                        * (hm.eval(x, 1) * hn.eval(x, 1) + a * a * hm.eval(x, 0) * hn.eval(x, 0));
                }
                gram[(m, n)] = (l / 2.0) * acc;
            }
        }
        // The stream shapes can be linearly dependent (the free-free
        // spectrum carries two branches with the same vertical profile), so
        // solve the Gram system by spectral pseudo-inverse: the projected
        // field is unique, the minimum-norm coefficients represent it.
        let eig = nalgebra::SymmetricEigen::new(gram);
        let lam_max = eig
            .eigenvalues
            .iter()
            .fold(0.0f64, |acc, &v| acc.max(v.abs()));
        for parity in [Parity::Cos, Parity::Sin] {
            let mut b = DVector::<f64>::zeros(nj);
            for m in 0..nj {
                let (hm, _) = basis.roll_profiles(k, m + 1);
                let mut acc = 0.0;
                for q in 0..nq {
                    let x = basis.analysis_x2()[q];
                    let (f1, f2) = match parity {
                        // psi_kj velocity: (-sin h', a cos h)
                        Parity::Cos => (-fs[k][q][0], fc[k][q][1]),
                        // psitilde velocity: (cos h', a sin h)
                        Parity::Sin => (fc[k][q][0], fs[k][q][1]),
                    };
                    acc += w[q] * (f1 * hm.eval(x, 1) + a * f2 * hm.eval(x, 0));
                }
                b[m] = acc;
            }
            let proj = eig.eigenvectors.transpose() * &b;
            let mut sol = DVector::<f64>::zeros(nj);
            for m in 0..nj {
                if eig.eigenvalues[m] > 1e-12 * lam_max {
                    sol += eig.eigenvectors.column(m) * (proj[m] / eig.eigenvalues[m]);
                }
            }
            for m in 0..nj {
                coeffs[basis.index_of(ModeIndex::new(k, m + 1, parity))] = sol[m];
            }
        }
    }
    if basis.bc.zero_mean() {
        for j in 1..=basis.j_max {
            let (_, mean) = basis.shear_profile(j);
            if mean != 0.0 {
                coeffs[basis.index_of(ModeIndex::new(0, j, Parity::Sin))] = 0.0;
            }
        }
    }
    Ok(VelocityPart {
        basis: basis.clone(),
        coeffs,
    })
}
