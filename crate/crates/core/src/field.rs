//! States psi = (u1, u2, T) as coefficient vectors over the eigenmode basis.

use crate::basis::{Basis, GridData, ModeIndex, Parity};
use crate::bc::Wall;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Pointwise values of the three components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldValue {
    pub u1: f64,
    pub u2: f64,
    pub t: f64,
}

/// Physical-space view of a field on a uniform n1 x n2 grid (x2 includes the
/// walls), row-major `[i1 * n2 + i2]`.
#[derive(Debug, Clone)]
pub struct PhysicalGrid {
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub t: Vec<f64>,
}

#[derive(Clone)]
pub struct SpectralField {
    basis: Arc<Basis>,
    coeffs: Vec<f64>,
}

impl std::fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralField")
            .field("bc", &self.basis.bc)
            .field("period", &self.basis.period)
            .field("rayleigh", &self.basis.rayleigh)
            .field("k_max", &self.basis.k_max)
            .field("j_max", &self.basis.j_max)
            .field("norm_h", &self.norm_h())
            .finish()
    }
}

impl SpectralField {
    pub fn zeros(basis: Arc<Basis>) -> Self {
        let n = basis.n_coeffs();
        SpectralField {
            basis,
            coeffs: vec![0.0; n],
        }
    }

    pub fn from_coeffs(basis: Arc<Basis>, mut coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != basis.n_coeffs() {
            return Err(Error::BasisMismatch(format!(
                "coefficient vector has length {}, basis expects {}",
                coeffs.len(),
                basis.n_coeffs()
            )));
        }
        basis.enforce_space(&mut coeffs);
        Ok(SpectralField { basis, coeffs })
    }

    /// The normalized eigenvector psi_kj (parity Cos) or psitilde_kj (Sin),
    /// scaled by `amp`. At k = 0, Cos is the pure-temperature mode and Sin
    /// the pure-shear mode.
    pub fn eigenvector(basis: Arc<Basis>, mode: ModeIndex, amp: f64) -> Result<Self> {
        if mode.k > basis.k_max || mode.j == 0 || mode.j > basis.j_max {
            return Err(Error::InvalidParam(format!(
                "mode {:?} outside truncation K = {}, J = {}",
                mode, basis.k_max, basis.j_max
            )));
        }
        let mut f = SpectralField::zeros(basis);
        let idx = f.basis.index_of(mode);
        f.coeffs[idx] = amp;
        f.basis.enforce_space(&mut f.coeffs);
        if amp != 0.0 && f.coeffs[idx] == 0.0 {
            return Err(Error::InvalidParam(format!(
                "mode {mode:?} carries net momentum and is excluded by the zero-mean space"
            )));
        }
        Ok(f)
    }

    /// Reproducible coefficient noise: independent gaussians scaled by
    /// `amplitude` with a mild decay in k + j so the field is resolved.
    pub fn seeded_noise(basis: Arc<Basis>, seed: u64, amplitude: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = basis.n_coeffs();
        let mut coeffs = vec![0.0; n];
        for (i, c) in coeffs.iter_mut().enumerate() {
            let m = basis.mode_of(i);
            let decay = 0.5f64.powi((m.k + m.j - 1) as i32 / 2);
            // Box-Muller from two uniforms keeps the stream layout stable
            let u1: f64 = rng.gen_range(1e-12..1.0);
            let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let gauss = (-2.0 * u1.ln()).sqrt() * u2.cos();
            *c = amplitude * decay * gauss;
        }
        basis.enforce_space(&mut coeffs);
        SpectralField { basis, coeffs }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn get(&self, mode: ModeIndex) -> f64 {
        self.coeffs[self.basis.index_of(mode)]
    }

    pub fn set(&mut self, mode: ModeIndex, value: f64) {
        let i = self.basis.index_of(mode);
        self.coeffs[i] = value;
        self.basis.enforce_space(&mut self.coeffs);
    }

    pub fn compatible(&self, other: &SpectralField) -> Result<()> {
        if Arc::ptr_eq(&self.basis, &other.basis) || self.basis.same_discretization(&other.basis) {
            Ok(())
        } else {
            Err(Error::BasisMismatch(
                "fields live on different discretizations".into(),
            ))
        }
    }

    /// H-norm; the basis is H-orthonormal so this is the coefficient norm.
    pub fn norm_h(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    /// Unweighted L2 inner product over one period cell, summed over all
    /// three components.
    pub fn inner_h(&self, other: &SpectralField) -> Result<f64> {
        self.compatible(other)?;
        Ok(self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum())
    }

    pub fn scale(&mut self, s: f64) {
        for c in &mut self.coeffs {
            *c *= s;
        }
    }

    pub fn axpy(&mut self, a: f64, x: &SpectralField) -> Result<()> {
        self.compatible(x)?;
        for (o, v) in self.coeffs.iter_mut().zip(&x.coeffs) {
            *o += a * v;
        }
        Ok(())
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.axpy(1.0, other)?;
        Ok(out)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    /// Translate the field by delta in x1 (a feature at x1 = 0 moves to
    /// x1 = delta): a rotation by a_k delta in each (Cos, Sin) pair.
    pub fn shift_x1(&self, delta: f64) -> SpectralField {
        let mut out = self.clone();
        for k in 0..=self.basis.k_max {
            let ang = self.basis.wavenumber(k) * delta;
            let (sn, cs) = ang.sin_cos();
            for j in 1..=self.basis.j_max {
                let ic = self.basis.index_of(ModeIndex::new(k, j, Parity::Cos));
                let is = self.basis.index_of(ModeIndex::new(k, j, Parity::Sin));
                let (x, y) = (self.coeffs[ic], self.coeffs[is]);
                out.coeffs[ic] = x * cs - y * sn;
                out.coeffs[is] = x * sn + y * cs;
            }
        }
        out
    }

    /// Drop every Sin-parity coefficient, leaving a state that is odd in u1
    /// about x1 = 0 (the reflection-symmetric subspace, which the dynamics
    /// preserves and which carries no net horizontal momentum).
    pub fn retain_cos_parity(&mut self) {
        for j in 1..=self.basis.j_max {
            for k in 0..=self.basis.k_max {
                let i = self.basis.index_of(ModeIndex::new(k, j, Parity::Sin));
                self.coeffs[i] = 0.0;
            }
        }
    }

    /// Zero the k = 0 shear family.
    pub fn zero_shear(&mut self) {
        for j in 1..=self.basis.j_max {
            let i = self.basis.index_of(ModeIndex::new(0, j, Parity::Sin));
            self.coeffs[i] = 0.0;
        }
    }

    /// Critical-pair amplitudes.
    pub fn x11(&self) -> f64 {
        self.get(ModeIndex::new(1, 1, Parity::Cos))
    }

    pub fn y11(&self) -> f64 {
        self.get(ModeIndex::new(1, 1, Parity::Sin))
    }

    /// r = sqrt(x11^2 + y11^2).
    pub fn amplitude(&self) -> f64 {
        self.x11().hypot(self.y11())
    }

    /// theta = atan2(y11, x11).
    pub fn phase(&self) -> f64 {
        self.y11().atan2(self.x11())
    }

    /// Net horizontal momentum M = int int u1 dx.
    pub fn mean_flow(&self) -> f64 {
        (1..=self.basis.j_max)
            .map(|j| {
                self.get(ModeIndex::new(0, j, Parity::Sin)) * self.basis.shear_momentum(j)
            })
            .sum()
    }

    /// Horizontally averaged velocity profile q(x2) = (1/L) int u1 dx1 on
    /// the given vertical points, together with M.
    pub fn mean_flow_profile(&self, x2: &[f64]) -> (Vec<f64>, f64) {
        let mut q = vec![0.0; x2.len()];
        for j in 1..=self.basis.j_max {
            let y = self.get(ModeIndex::new(0, j, Parity::Sin));
            if y != 0.0 {
                let (s, _) = self.basis.shear_profile(j);
                for (qi, &x) in q.iter_mut().zip(x2) {
                    *qi += y * s.eval(x, 0);
                }
            }
        }
        (q, self.mean_flow())
    }

    /// Pointwise evaluation by direct mode summation.
    pub fn eval(&self, x1: f64, x2: f64) -> FieldValue {
        let b = &self.basis;
        let mut v = FieldValue {
            u1: 0.0,
            u2: 0.0,
            t: 0.0,
        };
        for j in 1..=b.j_max {
            let x = self.get(ModeIndex::new(0, j, Parity::Cos));
            if x != 0.0 {
                v.t += x * b.temperature_profile(j).eval(x2, 0);
            }
            let y = self.get(ModeIndex::new(0, j, Parity::Sin));
            if y != 0.0 {
                let (s, _) = b.shear_profile(j);
                v.u1 += y * s.eval(x2, 0);
            }
        }
        for k in 1..=b.k_max {
            let a = b.wavenumber(k);
            let (sn, cs) = (a * x1).sin_cos();
            for j in 1..=b.j_max {
                let x = self.get(ModeIndex::new(k, j, Parity::Cos));
                let y = self.get(ModeIndex::new(k, j, Parity::Sin));
                if x == 0.0 && y == 0.0 {
                    continue;
                }
                let (h, theta) = b.roll_profiles(k, j);
                let (h0, h1, t0) = (h.eval(x2, 0), h.eval(x2, 1), theta.eval(x2, 0));
                v.u1 += (-x * sn + y * cs) * h1;
                v.u2 += a * (x * cs + y * sn) * h0;
                v.t += (x * cs + y * sn) * t0;
            }
        }
        v
    }

    /// Velocity and its first and second partial derivatives at a point:
    /// `(u, du, d2u)` with `du[i][a]` = d u_i / d x_a and
    /// `d2u[i][a][b]` = d^2 u_i / d x_a d x_b.
    pub fn velocity_derivatives(&self, x1: f64, x2: f64) -> ([f64; 2], [[f64; 2]; 2], [[[f64; 2]; 2]; 2]) {
        let b = &self.basis;
        let mut u = [0.0; 2];
        let mut du = [[0.0; 2]; 2];
        let mut d2u = [[[0.0; 2]; 2]; 2];
        for j in 1..=b.j_max {
            let y = self.get(ModeIndex::new(0, j, Parity::Sin));
            if y != 0.0 {
                let (s, _) = b.shear_profile(j);
                u[0] += y * s.eval(x2, 0);
                du[0][1] += y * s.eval(x2, 1);
                d2u[0][1][1] += y * s.eval(x2, 2);
            }
        }
        for k in 1..=b.k_max {
            let a = b.wavenumber(k);
            let (sn, cs) = (a * x1).sin_cos();
            for j in 1..=b.j_max {
                let x = self.get(ModeIndex::new(k, j, Parity::Cos));
                let y = self.get(ModeIndex::new(k, j, Parity::Sin));
                if x == 0.0 && y == 0.0 {
                    continue;
                }
                let (h, _) = b.roll_profiles(k, j);
                let (h0, h1, h2, h3) = (
                    h.eval(x2, 0),
                    h.eval(x2, 1),
                    h.eval(x2, 2),
                    h.eval(x2, 3),
                );
                // u1 = (-x sin + y cos) h', u2 = a (x cos + y sin) h
                let c1 = -x * sn + y * cs; // trig factor of u1
                let c1p = a * (-x * cs - y * sn); // d/dx1 of that factor
                let c1pp = a * a * (x * sn - y * cs);
                let c2 = a * (x * cs + y * sn);
                let c2p = a * a * (-x * sn + y * cs);
                let c2pp = a * a * a * (-x * cs - y * sn);
                u[0] += c1 * h1;
                u[1] += c2 * h0;
                du[0][0] += c1p * h1;
                du[0][1] += c1 * h2;
                du[1][0] += c2p * h0;
                du[1][1] += c2 * h1;
                d2u[0][0][0] += c1pp * h1;
                d2u[0][0][1] += c1p * h2;
                d2u[0][1][1] += c1 * h3;
                d2u[1][0][0] += c2pp * h0;
                d2u[1][0][1] += c2p * h1;
                d2u[1][1][1] += c2 * h2;
            }
        }
        d2u[0][1][0] = d2u[0][0][1];
        d2u[1][1][0] = d2u[1][0][1];
        (u, du, d2u)
    }

    /// Values on the analysis grid.
    pub fn to_grid(&self) -> GridData {
        self.basis.synthesize(&self.coeffs)
    }

    /// Physical view on a uniform n1 x n2 grid with walls included.
    pub fn grid_view(&self, n1: usize, n2: usize) -> PhysicalGrid {
        let l = self.basis.period;
        let x1: Vec<f64> = (0..n1).map(|i| l * i as f64 / n1 as f64).collect();
        let x2: Vec<f64> = (0..n2)
            .map(|i| i as f64 / (n2 - 1) as f64)
            .collect();
        let mut u1 = vec![0.0; n1 * n2];
        let mut u2 = vec![0.0; n1 * n2];
        let mut t = vec![0.0; n1 * n2];
        for (i, &xa) in x1.iter().enumerate() {
            for (jj, &xb) in x2.iter().enumerate() {
                let v = self.eval(xa, xb);
                u1[i * n2 + jj] = v.u1;
                u2[i * n2 + jj] = v.u2;
                t[i * n2 + jj] = v.t;
            }
        }
        PhysicalGrid { x1, x2, u1, u2, t }
    }

    /// Largest boundary-condition violation of the velocity/temperature on
    /// the walls, sampled along x1 (diagnostic).
    pub fn boundary_residual(&self) -> f64 {
        let b = &self.basis;
        let mut worst: f64 = 0.0;
        let n = 32;
        for i in 0..n {
            let x1 = b.period * i as f64 / n as f64;
            for (wall, x2) in [(Wall::Bottom, 0.0), (Wall::Top, 1.0)] {
                let v = self.eval(x1, x2);
                worst = worst.max(v.u2.abs()).max(v.t.abs());
                match b.bc.wall(wall) {
                    crate::bc::WallKind::Rigid => {
                        worst = worst.max(v.u1.abs());
                    }
                    crate::bc::WallKind::Free => {
                        let (_, du, _) = self.velocity_derivatives(x1, x2);
                        worst = worst.max(du[0][1].abs());
                    }
                }
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::Basis;
    use crate::bc::{BcTag, BoundaryCondition};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn basis_rr() -> Arc<Basis> {
        Basis::new(
            BoundaryCondition::new(BcTag::RigidRigid),
            2.016,
            1707.76,
            3,
            5,
            None,
        )
        .unwrap()
    }

    #[test]
    fn eigenvector_norm_and_boundary_conditions() {
        let b = basis_rr();
        let f =
            SpectralField::eigenvector(b, ModeIndex::new(1, 1, Parity::Cos), 1.0).unwrap();
        assert_relative_eq!(f.norm_h(), 1.0, epsilon = 1e-12);
        assert!(f.boundary_residual() < 1e-7);
    }

    #[test]
    fn psitilde_is_quarter_period_shift_of_psi() {
        let b = basis_rr();
        let psi =
            SpectralField::eigenvector(b.clone(), ModeIndex::new(1, 1, Parity::Cos), 1.0).unwrap();
        let psit =
            SpectralField::eigenvector(b.clone(), ModeIndex::new(1, 1, Parity::Sin), 1.0).unwrap();
        // shifting psi by L/4 must give psitilde: cos(a(x - L/4)) = sin(ax)
        let shifted = psi.shift_x1(b.period / 4.0);
        let diff = shifted.sub(&psit).unwrap();
        assert!(diff.norm_h() < 1e-12);
    }

    #[test]
    fn norms_match_between_parities() {
        let b = basis_rr();
        for j in 1..=3 {
            let p = SpectralField::eigenvector(b.clone(), ModeIndex::new(2, j, Parity::Cos), 1.0)
                .unwrap();
            let q = SpectralField::eigenvector(b.clone(), ModeIndex::new(2, j, Parity::Sin), 1.0)
                .unwrap();
            assert_relative_eq!(p.norm_h(), q.norm_h(), epsilon = 1e-14);
        }
    }

    #[test]
    fn inner_h_orthogonality_between_parities() {
        let b = basis_rr();
        let p =
            SpectralField::eigenvector(b.clone(), ModeIndex::new(1, 2, Parity::Cos), 1.0).unwrap();
        let q =
            SpectralField::eigenvector(b.clone(), ModeIndex::new(1, 2, Parity::Sin), 1.0).unwrap();
        assert_eq!(p.inner_h(&q).unwrap(), 0.0);
    }

    #[test]
    fn pointwise_eval_matches_grid_synthesis() {
        let b = basis_rr();
        let f = SpectralField::seeded_noise(b.clone(), 7, 1.0);
        let g = f.to_grid();
        let (n1, nq) = b.grid_shape();
        let x1 = b.analysis_x1().to_vec();
        let x2 = b.analysis_x2().to_vec();
        for &(i, q) in &[(0usize, 0usize), (3, 10), (n1 - 1, nq - 1)] {
            let v = f.eval(x1[i], x2[q]);
            assert_relative_eq!(v.u1, g.u1[i * nq + q], epsilon = 1e-11);
            assert_relative_eq!(v.u2, g.u2[i * nq + q], epsilon = 1e-11);
            assert_relative_eq!(v.t, g.t[i * nq + q], epsilon = 1e-11);
        }
    }

    #[test]
    fn velocity_derivatives_match_finite_differences() {
        let b = basis_rr();
        let f = SpectralField::seeded_noise(b, 3, 0.8);
        let (x1, x2) = (0.4, 0.37);
        let (_, du, d2u) = f.velocity_derivatives(x1, x2);
        let h = 1e-6;
        let up = f.eval(x1 + h, x2);
        let um = f.eval(x1 - h, x2);
        assert_relative_eq!(du[0][0], (up.u1 - um.u1) / (2.0 * h), max_relative = 1e-5);
        assert_relative_eq!(du[1][0], (up.u2 - um.u2) / (2.0 * h), max_relative = 1e-5);
        let vp = f.eval(x1, x2 + h);
        let vm = f.eval(x1, x2 - h);
        assert_relative_eq!(du[0][1], (vp.u1 - vm.u1) / (2.0 * h), max_relative = 1e-5);
        // second derivative check via the jacobian
        let (_, dup, _) = f.velocity_derivatives(x1 + h, x2);
        let (_, dum, _) = f.velocity_derivatives(x1 - h, x2);
        assert_relative_eq!(
            d2u[0][0][0],
            (dup[0][0] - dum[0][0]) / (2.0 * h),
            max_relative = 1e-4
        );
        assert_relative_eq!(
            d2u[1][0][1],
            (dup[1][1] - dum[1][1]) / (2.0 * h),
            max_relative = 1e-4
        );
    }

    #[test]
    fn shift_preserves_norm_and_rotates_phase() {
        let b = basis_rr();
        let mut f = SpectralField::zeros(b.clone());
        f.set(ModeIndex::new(1, 1, Parity::Cos), 0.6);
        f.set(ModeIndex::new(1, 1, Parity::Sin), 0.3);
        let delta = 0.23;
        let g = f.shift_x1(delta);
        assert_relative_eq!(g.norm_h(), f.norm_h(), epsilon = 1e-14);
        let expect = f.phase() + 2.0 * PI * delta / b.period;
        assert_relative_eq!(g.phase(), expect, epsilon = 1e-12);
    }

    #[test]
    fn mean_flow_tracks_shear_coefficients() {
        let b = basis_rr();
        let mut f = SpectralField::zeros(b.clone());
        f.set(ModeIndex::new(0, 1, Parity::Sin), 2.0);
        f.set(ModeIndex::new(0, 2, Parity::Sin), 5.0); // even: no momentum
        let expect = 2.0 * b.shear_momentum(1);
        assert_relative_eq!(f.mean_flow(), expect, epsilon = 1e-13);
        // matches the quadrature of u1 over the cell
        let g = f.to_grid();
        assert_relative_eq!(b.integrate_grid(&g.u1), expect, epsilon = 1e-12);
        let (q, m) = f.mean_flow_profile(&[0.5]);
        assert_eq!(m, f.mean_flow());
        let v = f.eval(0.1, 0.5);
        assert_relative_eq!(q[0], v.u1, epsilon = 1e-12);
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let b = basis_rr();
        let f = SpectralField::seeded_noise(b.clone(), 42, 1e-3);
        let g = SpectralField::seeded_noise(b, 42, 1e-3);
        assert_eq!(f.coeffs(), g.coeffs());
        assert!(f.norm_h() > 0.0 && f.norm_h() < 0.1);
    }
}
