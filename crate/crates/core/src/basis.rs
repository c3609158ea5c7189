//! Eigenvector-aligned discretization of the channel.
//!
//! A `Basis` fixes (bc, period L, Rayleigh number R, truncation K x J) and
//! holds the complete set of 2D eigenvectors
//!
//! ```text
//!   psi_kj      = (-sin(a_k x1) h'_kj,  a_k cos(a_k x1) h_kj,  cos(a_k x1) theta_kj)
//!   psitilde_kj = ( cos(a_k x1) h'_kj,  a_k sin(a_k x1) h_kj,  sin(a_k x1) theta_kj)
//! ```
//!
//! for k >= 1 plus the k = 0 pure-temperature and pure-shear families, all
//! normalized to unit H-norm, together with quadrature tables and the
//! per-wavenumber blocks of the linear operator. Fields are coefficient
//! vectors over this basis; every basis velocity is divergence-free by
//! construction, so the Leray projection never appears explicitly in the
//! spectral dynamics.

use crate::bc::BoundaryCondition;
use crate::error::{Error, Result};
use crate::profile::Profile;
use crate::quad::{periodic_grid, Gauss01};
use crate::stability::{k0_shear_modes, k0_temperature_modes, VerticalDiscretization};
use nalgebra::DMatrix;
use std::f64::consts::PI;
use std::sync::Arc;

/// Parity of the horizontal factor: `Cos` selects psi_kj, `Sin` selects
/// psitilde_kj. At k = 0, `Cos` is the pure-temperature family and `Sin`
/// the pure-shear family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    Cos,
    Sin,
}

/// Index of one basis mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    pub k: usize,
    /// 1-based vertical rank.
    pub j: usize,
    pub parity: Parity,
}

impl ModeIndex {
    pub fn new(k: usize, j: usize, parity: Parity) -> Self {
        ModeIndex { k, j, parity }
    }
}

pub(crate) struct RollData {
    pub beta: f64,
    pub h: Profile,
    pub theta: Profile,
    pub h0: Vec<f64>,
    pub h1: Vec<f64>,
    pub h2: Vec<f64>,
    pub t0: Vec<f64>,
    pub t1: Vec<f64>,
}

pub(crate) struct TempData {
    pub beta: f64,
    pub theta: Profile,
    pub t0: Vec<f64>,
    pub t1: Vec<f64>,
}

pub(crate) struct ShearData {
    pub beta: f64,
    pub s: Profile,
    /// int_0^1 s dx2 of the normalized profile.
    pub mean: f64,
    pub s0: Vec<f64>,
    pub s1: Vec<f64>,
}

/// Values of the three field components on the analysis grid
/// (row-major `[i1 * nq + q]`).
#[derive(Debug, Clone)]
pub struct GridData {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub t: Vec<f64>,
}

/// Component values plus first derivatives on the analysis grid.
#[derive(Debug, Clone)]
pub struct GridDerivs {
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
    pub t: Vec<f64>,
    pub d1u1: Vec<f64>,
    pub d2u1: Vec<f64>,
    pub d1u2: Vec<f64>,
    pub d2u2: Vec<f64>,
    pub d1t: Vec<f64>,
    pub d2t: Vec<f64>,
}

impl std::fmt::Debug for Basis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Basis")
            .field("bc", &self.bc)
            .field("period", &self.period)
            .field("rayleigh", &self.rayleigh)
            .field("k_max", &self.k_max)
            .field("j_max", &self.j_max)
            .finish()
    }
}

pub struct Basis {
    pub bc: BoundaryCondition,
    pub period: f64,
    /// Rayleigh number the eigenmodes were computed at.
    pub rayleigh: f64,
    pub k_max: usize,
    pub j_max: usize,
    pub(crate) rolls: Vec<Vec<RollData>>,
    pub(crate) temps: Vec<TempData>,
    pub(crate) shears: Vec<ShearData>,
    pub(crate) gauss: Gauss01,
    pub(crate) x1: Vec<f64>,
    /// cos/sin of a_k x1 per k (k = 0 row holds ones/zeros).
    pub(crate) trig: Vec<(Vec<f64>, Vec<f64>)>,
    /// Linear-operator blocks per k >= 1 (shared by both parities), split by
    /// which equation and which component they act on so the optional
    /// Prandtl scaling of the momentum equation stays available:
    /// A = a_u + a_t (dissipation), B1 = b_ut + b_tu (buoyancy coupling).
    pub(crate) a_u: Vec<DMatrix<f64>>,
    pub(crate) a_t: Vec<DMatrix<f64>>,
    pub(crate) b_ut: Vec<DMatrix<f64>>,
    pub(crate) b_tu: Vec<DMatrix<f64>>,
    /// k = 0 dissipation (dense in general, diagonal for the closed-form
    /// families).
    pub(crate) a_temp: DMatrix<f64>,
    pub(crate) a_shear: DMatrix<f64>,
}

impl Basis {
    /// Build the discretization. `resolution` controls the vertical
    /// eigensolve (None picks a size adequate for `j_max`).
    pub fn new(
        bc: BoundaryCondition,
        period: f64,
        rayleigh: f64,
        k_max: usize,
        j_max: usize,
        resolution: Option<usize>,
    ) -> Result<Arc<Self>> {
        if !(period > 0.0) {
            return Err(Error::InvalidParam(format!("period must be positive, got {period}")));
        }
        if !(rayleigh > 0.0) {
            return Err(Error::InvalidParam(format!(
                "Rayleigh number must be positive, got {rayleigh}"
            )));
        }
        if k_max < 1 || j_max < 1 {
            return Err(Error::InvalidParam(
                "truncation must keep at least k_max >= 1, j_max >= 1".into(),
            ));
        }
        let res = resolution.unwrap_or_else(|| (2 * j_max + 24).max(40));

        // dealiased grids: the x1 trapezoid must integrate wavenumber 3K,
        // the vertical rule triple products of the profiles
        let n1 = (3 * k_max + 2).next_multiple_of(4).max(16);
        let nq = ((3 * (res + 5)) / 2 + 8).max(10 * j_max).max(96);
        let gauss = Gauss01::new(nq);
        let x1 = periodic_grid(period, n1);

        let scale = (2.0 / period).sqrt();
        let mut rolls = Vec::with_capacity(k_max);
        let disc = if bc.tag == crate::bc::BcTag::FreeFree {
            None
        } else {
            Some(VerticalDiscretization::new(bc, res)?)
        };
        for k in 1..=k_max {
            let a = 2.0 * PI * k as f64 / period;
            let pairs = match &disc {
                Some(d) => d.solve(a, rayleigh, j_max)?,
                None => crate::stability::vertical_eigensolve(a, rayleigh, bc, 2 * j_max + 8)?,
            };
            if pairs.len() < j_max {
                return Err(Error::Discretization(format!(
                    "eigensolve at k = {k} returned {} < {j_max} pairs",
                    pairs.len()
                )));
            }
            let mut row = Vec::with_capacity(j_max);
            for p in pairs.into_iter().take(j_max) {
                let h = p.h.scaled(scale);
                let theta = p.theta.scaled(scale);
                row.push(RollData {
                    beta: p.beta,
                    h0: h.sample(&gauss.nodes, 0),
                    h1: h.sample(&gauss.nodes, 1),
                    h2: h.sample(&gauss.nodes, 2),
                    t0: theta.sample(&gauss.nodes, 0),
                    t1: theta.sample(&gauss.nodes, 1),
                    h,
                    theta,
                });
            }
            rolls.push(row);
        }

        let zscale = 1.0 / period.sqrt();
        let temps: Vec<TempData> = k0_temperature_modes(j_max)
            .into_iter()
            .map(|p| {
                let theta = p.theta.scaled(zscale);
                TempData {
                    beta: p.beta,
                    t0: theta.sample(&gauss.nodes, 0),
                    t1: theta.sample(&gauss.nodes, 1),
                    theta,
                }
            })
            .collect();
        let shears: Vec<ShearData> = k0_shear_modes(bc, j_max)
            .into_iter()
            .map(|m| {
                let s = m.s.scaled(zscale);
                ShearData {
                    beta: m.beta,
                    mean: m.mean * zscale,
                    s0: s.sample(&gauss.nodes, 0),
                    s1: s.sample(&gauss.nodes, 1),
                    s,
                }
            })
            .collect();

        let mut trig = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            let a = 2.0 * PI * k as f64 / period;
            trig.push((
                x1.iter().map(|&x| (a * x).cos()).collect(),
                x1.iter().map(|&x| (a * x).sin()).collect(),
            ));
        }

        // operator blocks
        let half_l = period / 2.0;
        let dot = |f: &[f64], g: &[f64], w: &Gauss01| -> f64 {
            f.iter()
                .zip(g)
                .zip(&w.weights)
                .map(|((a, b), wq)| a * b * wq)
                .sum()
        };
        let mut a_u = Vec::new();
        let mut a_t = Vec::new();
        let mut b_ut = Vec::new();
        let mut b_tu = Vec::new();
        for (ki, row) in rolls.iter().enumerate() {
            let a = 2.0 * PI * (ki + 1) as f64 / period;
            let a2 = a * a;
            let n = row.len();
            let mut mu = DMatrix::zeros(n, n);
            let mut mt = DMatrix::zeros(n, n);
            let mut but = DMatrix::zeros(n, n);
            let mut btu = DMatrix::zeros(n, n);
            for m in 0..n {
                for nn in 0..n {
                    let p = &row[nn];
                    let q = &row[m];
                    mu[(m, nn)] = half_l
                        * (dot(&p.h2, &q.h2, &gauss)
                            + 2.0 * a2 * dot(&p.h1, &q.h1, &gauss)
                            + a2 * a2 * dot(&p.h0, &q.h0, &gauss));
                    mt[(m, nn)] =
                        half_l * (dot(&p.t1, &q.t1, &gauss) + a2 * dot(&p.t0, &q.t0, &gauss));
                    // buoyancy in the momentum equation: (P(T_n k), u_m)
                    but[(m, nn)] = half_l * a * dot(&p.t0, &q.h0, &gauss);
                    // vertical advection of the background gradient: (u2_n, T_m)
                    btu[(m, nn)] = half_l * a * dot(&p.h0, &q.t0, &gauss);
                }
            }
            a_u.push(mu);
            a_t.push(mt);
            b_ut.push(but);
            b_tu.push(btu);
        }
        let n0 = temps.len();
        let mut a_temp = DMatrix::zeros(n0, n0);
        let mut a_shear = DMatrix::zeros(n0, n0);
        for m in 0..n0 {
            for nn in 0..n0 {
                a_temp[(m, nn)] = period * dot(&temps[nn].t1, &temps[m].t1, &gauss);
                a_shear[(m, nn)] = period * dot(&shears[nn].s1, &shears[m].s1, &gauss);
            }
        }

        Ok(Arc::new(Basis {
            bc,
            period,
            rayleigh,
            k_max,
            j_max,
            rolls,
            temps,
            shears,
            gauss,
            x1,
            trig,
            a_u,
            a_t,
            b_ut,
            b_tu,
            a_temp,
            a_shear,
        }))
    }

    /// Basis at the critical point of `bc`: L = L_c, R = ratio * R_c.
    pub fn at_critical(
        bc: BoundaryCondition,
        r_ratio: f64,
        k_max: usize,
        j_max: usize,
    ) -> Result<Arc<Self>> {
        let cp = crate::stability::critical_point(bc)?;
        Basis::new(bc, cp.l_c, r_ratio * cp.r_c, k_max, j_max, None)
    }

    pub fn n_coeffs(&self) -> usize {
        (self.k_max + 1) * self.j_max * 2
    }

    pub fn wavenumber(&self, k: usize) -> f64 {
        2.0 * PI * k as f64 / self.period
    }

    pub fn index_of(&self, m: ModeIndex) -> usize {
        debug_assert!(m.k <= self.k_max && m.j >= 1 && m.j <= self.j_max);
        (m.k * self.j_max + (m.j - 1)) * 2
            + match m.parity {
                Parity::Cos => 0,
                Parity::Sin => 1,
            }
    }

    pub fn mode_of(&self, idx: usize) -> ModeIndex {
        let parity = if idx % 2 == 0 { Parity::Cos } else { Parity::Sin };
        let rest = idx / 2;
        ModeIndex {
            k: rest / self.j_max,
            j: rest % self.j_max + 1,
            parity,
        }
    }

    /// Growth rate of a mode at the basis Rayleigh number.
    pub fn beta(&self, m: ModeIndex) -> f64 {
        if m.k == 0 {
            match m.parity {
                Parity::Cos => self.temps[m.j - 1].beta,
                Parity::Sin => self.shears[m.j - 1].beta,
            }
        } else {
            self.rolls[m.k - 1][m.j - 1].beta
        }
    }

    /// Vertical profiles (h, theta) of a roll mode, unit H-norm scaling.
    pub fn roll_profiles(&self, k: usize, j: usize) -> (&Profile, &Profile) {
        let r = &self.rolls[k - 1][j - 1];
        (&r.h, &r.theta)
    }

    pub fn shear_profile(&self, j: usize) -> (&Profile, f64) {
        let s = &self.shears[j - 1];
        (&s.s, s.mean)
    }

    pub fn temperature_profile(&self, j: usize) -> &Profile {
        &self.temps[j - 1].theta
    }

    /// Mean of the shear profile times the period: the net horizontal
    /// momentum carried by a unit coefficient on shear mode j.
    pub fn shear_momentum(&self, j: usize) -> f64 {
        self.period * self.shears[j - 1].mean
    }

    pub fn grid_shape(&self) -> (usize, usize) {
        (self.x1.len(), self.gauss.len())
    }

    pub fn analysis_x1(&self) -> &[f64] {
        &self.x1
    }

    pub fn analysis_x2(&self) -> &[f64] {
        &self.gauss.nodes
    }

    pub fn gauss_weights(&self) -> &[f64] {
        &self.gauss.weights
    }

    /// Two discretizations are interchangeable when all defining data agree.
    pub fn same_discretization(&self, other: &Basis) -> bool {
        self.bc == other.bc
            && self.period == other.period
            && self.rayleigh == other.rayleigh
            && self.k_max == other.k_max
            && self.j_max == other.j_max
    }

    /// Integral of gridded values against the analysis quadrature.
    pub fn integrate_grid(&self, values: &[f64]) -> f64 {
        let (n1, nq) = self.grid_shape();
        debug_assert_eq!(values.len(), n1 * nq);
        let mut total = 0.0;
        for i in 0..n1 {
            let row = &values[i * nq..(i + 1) * nq];
            total += self.gauss.integrate(row);
        }
        total * self.period / n1 as f64
    }

    /// Synthesize component values on the analysis grid.
    pub fn synthesize(&self, coeffs: &[f64]) -> GridData {
        let d = self.synthesize_impl(coeffs, false);
        GridData {
            u1: d.u1,
            u2: d.u2,
            t: d.t,
        }
    }

    /// Synthesize components and their first derivatives.
    pub fn synthesize_with_derivs(&self, coeffs: &[f64]) -> GridDerivs {
        self.synthesize_impl(coeffs, true)
    }

    fn synthesize_impl(&self, coeffs: &[f64], derivs: bool) -> GridDerivs {
        assert_eq!(coeffs.len(), self.n_coeffs());
        let (n1, nq) = self.grid_shape();
        let nk = self.k_max + 1;
        // vertical combination stage: cos/sin parts per component and k
        // [k][q]
        let mut cu1 = vec![vec![0.0; nq]; nk];
        let mut su1 = vec![vec![0.0; nq]; nk];
        let mut cu2 = vec![vec![0.0; nq]; nk];
        let mut su2 = vec![vec![0.0; nq]; nk];
        let mut ct = vec![vec![0.0; nq]; nk];
        let mut st = vec![vec![0.0; nq]; nk];
        // vertical-derivative parts (for d2 of components)
        let mut dcu1 = vec![vec![0.0; nq]; nk];
        let mut dsu1 = vec![vec![0.0; nq]; nk];
        let mut dcu2 = vec![vec![0.0; nq]; nk];
        let mut dsu2 = vec![vec![0.0; nq]; nk];
        let mut dct = vec![vec![0.0; nq]; nk];
        let mut dst = vec![vec![0.0; nq]; nk];

        for j in 1..=self.j_max {
            let x = coeffs[self.index_of(ModeIndex::new(0, j, Parity::Cos))];
            let y = coeffs[self.index_of(ModeIndex::new(0, j, Parity::Sin))];
            if x != 0.0 {
                let tmp = &self.temps[j - 1];
                axpy(&mut ct[0], x, &tmp.t0);
                if derivs {
                    axpy(&mut dct[0], x, &tmp.t1);
                }
            }
            if y != 0.0 {
                let sh = &self.shears[j - 1];
                axpy(&mut cu1[0], y, &sh.s0);
                if derivs {
                    axpy(&mut dcu1[0], y, &sh.s1);
                }
            }
        }
        for k in 1..=self.k_max {
            let a = self.wavenumber(k);
            for j in 1..=self.j_max {
                let x = coeffs[self.index_of(ModeIndex::new(k, j, Parity::Cos))];
                let y = coeffs[self.index_of(ModeIndex::new(k, j, Parity::Sin))];
                if x == 0.0 && y == 0.0 {
                    continue;
                }
                let r = &self.rolls[k - 1][j - 1];
                // u1: -x sin h' + y cos h'
                if y != 0.0 {
                    axpy(&mut cu1[k], y, &r.h1);
                }
                if x != 0.0 {
                    axpy(&mut su1[k], -x, &r.h1);
                }
                // u2: a x cos h + a y sin h
                if x != 0.0 {
                    axpy(&mut cu2[k], a * x, &r.h0);
                }
                if y != 0.0 {
                    axpy(&mut su2[k], a * y, &r.h0);
                }
                // T: x cos theta + y sin theta
                if x != 0.0 {
                    axpy(&mut ct[k], x, &r.t0);
                }
                if y != 0.0 {
                    axpy(&mut st[k], y, &r.t0);
                }
                if derivs {
                    if y != 0.0 {
                        axpy(&mut dcu1[k], y, &r.h2);
                        axpy(&mut dsu2[k], a * y, &r.h1);
                        axpy(&mut dst[k], y, &r.t1);
                    }
                    if x != 0.0 {
                        axpy(&mut dsu1[k], -x, &r.h2);
                        axpy(&mut dcu2[k], a * x, &r.h1);
                        axpy(&mut dct[k], x, &r.t1);
                    }
                }
            }
        }

        // trig expansion stage
        let size = n1 * nq;
        let mut out = GridDerivs {
            u1: vec![0.0; size],
            u2: vec![0.0; size],
            t: vec![0.0; size],
            d1u1: vec![0.0; if derivs { size } else { 0 }],
            d2u1: vec![0.0; if derivs { size } else { 0 }],
            d1u2: vec![0.0; if derivs { size } else { 0 }],
            d2u2: vec![0.0; if derivs { size } else { 0 }],
            d1t: vec![0.0; if derivs { size } else { 0 }],
            d2t: vec![0.0; if derivs { size } else { 0 }],
        };
        for k in 0..=self.k_max {
            let (cos_k, sin_k) = &self.trig[k];
            let a = self.wavenumber(k);
            for i in 0..n1 {
                let (c, s) = (cos_k[i], sin_k[i]);
                let row = i * nq;
                for q in 0..nq {
                    out.u1[row + q] += c * cu1[k][q] + s * su1[k][q];
                    out.u2[row + q] += c * cu2[k][q] + s * su2[k][q];
                    out.t[row + q] += c * ct[k][q] + s * st[k][q];
                }
                if derivs {
                    for q in 0..nq {
                        // d/dx1 swaps cos<->sin with factors -a, +a
                        out.d1u1[row + q] += a * (-s * cu1[k][q] + c * su1[k][q]);
                        out.d1u2[row + q] += a * (-s * cu2[k][q] + c * su2[k][q]);
                        out.d1t[row + q] += a * (-s * ct[k][q] + c * st[k][q]);
                        out.d2u1[row + q] += c * dcu1[k][q] + s * dsu1[k][q];
                        out.d2u2[row + q] += c * dcu2[k][q] + s * dsu2[k][q];
                        out.d2t[row + q] += c * dct[k][q] + s * dst[k][q];
                    }
                }
            }
        }
        out
    }

    /// H-projection of gridded component values onto the basis
    /// (adjoint of `synthesize` with respect to the grid quadrature).
    pub fn analyze(&self, data: &GridData) -> Vec<f64> {
        let (n1, nq) = self.grid_shape();
        assert_eq!(data.u1.len(), n1 * nq);
        let nk = self.k_max + 1;
        let dx = self.period / n1 as f64;
        // trig transform stage: FC_k[q] = int f cos(a_k x1) dx1, FS likewise
        let mut fc = vec![vec![[0.0f64; 3]; nq]; nk];
        let mut fs = vec![vec![[0.0f64; 3]; nq]; nk];
        for k in 0..nk {
            let (cos_k, sin_k) = &self.trig[k];
            for i in 0..n1 {
                let (c, s) = (cos_k[i] * dx, sin_k[i] * dx);
                let row = i * nq;
                for q in 0..nq {
                    fc[k][q][0] += c * data.u1[row + q];
                    fc[k][q][1] += c * data.u2[row + q];
                    fc[k][q][2] += c * data.t[row + q];
                    fs[k][q][0] += s * data.u1[row + q];
                    fs[k][q][1] += s * data.u2[row + q];
                    fs[k][q][2] += s * data.t[row + q];
                }
            }
        }
        let w = &self.gauss.weights;
        let mut coeffs = vec![0.0; self.n_coeffs()];
        for j in 1..=self.j_max {
            let tmp = &self.temps[j - 1];
            let sh = &self.shears[j - 1];
            let mut xc = 0.0;
            let mut ys = 0.0;
            for q in 0..nq {
                xc += w[q] * fc[0][q][2] * tmp.t0[q];
                ys += w[q] * fc[0][q][0] * sh.s0[q];
            }
            coeffs[self.index_of(ModeIndex::new(0, j, Parity::Cos))] = xc;
            coeffs[self.index_of(ModeIndex::new(0, j, Parity::Sin))] = ys;
        }
        for k in 1..=self.k_max {
            let a = self.wavenumber(k);
            for j in 1..=self.j_max {
                let r = &self.rolls[k - 1][j - 1];
                let mut x = 0.0;
                let mut y = 0.0;
                for q in 0..nq {
                    x += w[q]
                        * (-fs[k][q][0] * r.h1[q] + a * fc[k][q][1] * r.h0[q]
                            + fc[k][q][2] * r.t0[q]);
                    y += w[q]
                        * (fc[k][q][0] * r.h1[q] + a * fs[k][q][1] * r.h0[q]
                            + fs[k][q][2] * r.t0[q]);
                }
                coeffs[self.index_of(ModeIndex::new(k, j, Parity::Cos))] = x;
                coeffs[self.index_of(ModeIndex::new(k, j, Parity::Sin))] = y;
            }
        }
        coeffs
    }

    /// Apply L_lambda = -A + lambda B1 blockwise to a coefficient vector.
    /// `pr` optionally scales the momentum-equation part (the restored
    /// 1/Pr form of the primitive equations); None integrates the
    /// pressure-free operator form as written.
    pub fn apply_linear(&self, coeffs: &[f64], lambda: f64, pr: Option<f64>) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.n_coeffs());
        let (pu, pt) = match pr {
            Some(p) => (p, 1.0),
            None => (1.0, 1.0),
        };
        let mut out = vec![0.0; coeffs.len()];
        let nj = self.j_max;
        // k = 0: temperature and shear blocks (no buoyancy coupling)
        for parity in [Parity::Cos, Parity::Sin] {
            let (mat, scale) = match parity {
                Parity::Cos => (&self.a_temp, pt),
                Parity::Sin => (&self.a_shear, pu),
            };
            for m in 0..nj {
                let mut acc = 0.0;
                for n in 0..nj {
                    acc += mat[(m, n)] * coeffs[self.index_of(ModeIndex::new(0, n + 1, parity))];
                }
                out[self.index_of(ModeIndex::new(0, m + 1, parity))] = -scale * acc;
            }
        }
        for k in 1..=self.k_max {
            let au = &self.a_u[k - 1];
            let at = &self.a_t[k - 1];
            let but = &self.b_ut[k - 1];
            let btu = &self.b_tu[k - 1];
            for parity in [Parity::Cos, Parity::Sin] {
                for m in 0..nj {
                    let mut acc = 0.0;
                    for n in 0..nj {
                        let c = coeffs[self.index_of(ModeIndex::new(k, n + 1, parity))];
                        acc += (-pu * au[(m, n)] - pt * at[(m, n)]
                            + lambda * (pu * but[(m, n)] + pt * btu[(m, n)]))
                            * c;
                    }
                    out[self.index_of(ModeIndex::new(k, m + 1, parity))] = acc;
                }
            }
        }
        out
    }

    /// Dissipation block of the k = 0 temperature family.
    pub fn k0_temp_dissipation(&self) -> DMatrix<f64> {
        self.a_temp.clone()
    }

    /// Dissipation block of the k = 0 shear family.
    pub fn k0_shear_dissipation(&self) -> DMatrix<f64> {
        self.a_shear.clone()
    }

    /// Dissipation block at wavenumber index k >= 1, optionally with the
    /// momentum part scaled by Pr.
    pub fn roll_dissipation(&self, k: usize, pr: Option<f64>) -> DMatrix<f64> {
        let (pu, pt) = match pr {
            Some(p) => (p, 1.0),
            None => (1.0, 1.0),
        };
        &self.a_u[k - 1] * pu + &self.a_t[k - 1] * pt
    }

    /// Buoyancy-coupling block lambda B1 at wavenumber index k >= 1.
    pub fn explicit_block(&self, k: usize, lambda: f64, pr: Option<f64>) -> DMatrix<f64> {
        let (pu, pt) = match pr {
            Some(p) => (p, 1.0),
            None => (1.0, 1.0),
        };
        (&self.b_ut[k - 1] * pu + &self.b_tu[k - 1] * pt) * lambda
    }

    /// Apply the buoyancy coupling lambda B1 blockwise (zero at k = 0).
    pub fn apply_buoyancy(&self, coeffs: &[f64], lambda: f64, pr: Option<f64>) -> Vec<f64> {
        assert_eq!(coeffs.len(), self.n_coeffs());
        let (pu, pt) = match pr {
            Some(p) => (p, 1.0),
            None => (1.0, 1.0),
        };
        let nj = self.j_max;
        let mut out = vec![0.0; coeffs.len()];
        for k in 1..=self.k_max {
            let but = &self.b_ut[k - 1];
            let btu = &self.b_tu[k - 1];
            for parity in [Parity::Cos, Parity::Sin] {
                for m in 0..nj {
                    let mut acc = 0.0;
                    for n in 0..nj {
                        let c = coeffs[self.index_of(ModeIndex::new(k, n + 1, parity))];
                        acc += lambda * (pu * but[(m, n)] + pt * btu[(m, n)]) * c;
                    }
                    out[self.index_of(ModeIndex::new(k, m + 1, parity))] = acc;
                }
            }
        }
        out
    }

    /// Zero the coefficients excluded by the space constraint (B3 drops the
    /// mean-carrying shear content so the net horizontal momentum is zero).
    pub fn enforce_space(&self, coeffs: &mut [f64]) {
        if self.bc.zero_mean() {
            for j in 1..=self.j_max {
                if self.shears[j - 1].mean != 0.0 {
                    coeffs[self.index_of(ModeIndex::new(0, j, Parity::Sin))] = 0.0;
                }
            }
        }
    }
}

fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    for (o, v) in acc.iter_mut().zip(x) {
        *o += a * v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bc::BcTag;

    fn basis_ff() -> Arc<Basis> {
        let bc = BoundaryCondition::new(BcTag::FreeFree);
        let l = 2.0 * 2.0_f64.sqrt();
        Basis::new(bc, l, 27.0 * PI.powi(4) / 4.0, 3, 6, None).unwrap()
    }

    fn basis_rr() -> Arc<Basis> {
        let bc = BoundaryCondition::new(BcTag::RigidRigid);
        Basis::new(bc, 2.016, 1707.76, 3, 6, None).unwrap()
    }

    #[test]
    fn analysis_inverts_synthesis() {
        for basis in [basis_ff(), basis_rr()] {
            let n = basis.n_coeffs();
            let mut coeffs = vec![0.0; n];
            for (i, c) in coeffs.iter_mut().enumerate() {
                *c = ((i * 37 + 11) % 17) as f64 / 17.0 - 0.4;
            }
            // zero-mean space drops the constant shear before comparing
            basis.enforce_space(&mut coeffs);
            let grid = basis.synthesize(&coeffs);
            let back = basis.analyze(&grid);
            for i in 0..n {
                assert!(
                    (back[i] - coeffs[i]).abs() < 1e-10,
                    "{:?}: {} vs {}",
                    basis.mode_of(i),
                    back[i],
                    coeffs[i]
                );
            }
        }
    }

    #[test]
    fn modes_have_unit_h_norm_on_the_grid() {
        for basis in [basis_ff(), basis_rr()] {
            for &idx in &[
                basis.index_of(ModeIndex::new(1, 1, Parity::Cos)),
                basis.index_of(ModeIndex::new(2, 3, Parity::Sin)),
                basis.index_of(ModeIndex::new(0, 2, Parity::Cos)),
                basis.index_of(ModeIndex::new(0, 1, Parity::Sin)),
            ] {
                let mut coeffs = vec![0.0; basis.n_coeffs()];
                coeffs[idx] = 1.0;
                let g = basis.synthesize(&coeffs);
                let sq: Vec<f64> = (0..g.u1.len())
                    .map(|i| g.u1[i] * g.u1[i] + g.u2[i] * g.u2[i] + g.t[i] * g.t[i])
                    .collect();
                let norm2 = basis.integrate_grid(&sq);
                assert!(
                    (norm2 - 1.0).abs() < 1e-10,
                    "mode {:?} norm^2 = {norm2}",
                    basis.mode_of(idx)
                );
            }
        }
    }

    #[test]
    fn synthesized_fields_are_divergence_free() {
        let basis = basis_rr();
        let mut coeffs = vec![0.0; basis.n_coeffs()];
        for (i, c) in coeffs.iter_mut().enumerate() {
            *c = (i as f64 * 0.7).sin();
        }
        let g = basis.synthesize_with_derivs(&coeffs);
        let scale = g
            .u1
            .iter()
            .map(|v| v.abs())
            .fold(0.0f64, f64::max)
            .max(1e-30);
        for i in 0..g.d1u1.len() {
            assert!(
                (g.d1u1[i] + g.d2u2[i]).abs() <= 1e-10 * scale,
                "divergence at {i}"
            );
        }
    }

    #[test]
    fn linear_operator_is_diagonal_at_basis_rayleigh() {
        for basis in [basis_ff(), basis_rr()] {
            let lambda = basis.rayleigh.sqrt();
            for &m in &[
                ModeIndex::new(1, 1, Parity::Cos),
                ModeIndex::new(1, 2, Parity::Sin),
                ModeIndex::new(2, 1, Parity::Cos),
                ModeIndex::new(0, 3, Parity::Cos),
                ModeIndex::new(0, 2, Parity::Sin),
            ] {
                let mut coeffs = vec![0.0; basis.n_coeffs()];
                coeffs[basis.index_of(m)] = 1.0;
                let out = basis.apply_linear(&coeffs, lambda, None);
                let beta = basis.beta(m);
                for i in 0..out.len() {
                    let expect = if i == basis.index_of(m) { beta } else { 0.0 };
                    assert!(
                        (out[i] - expect).abs() < 1e-6 * (1.0 + beta.abs()),
                        "mode {m:?} -> {:?}: {} vs {}",
                        basis.mode_of(i),
                        out[i],
                        expect
                    );
                }
            }
        }
    }

    #[test]
    fn b3_enforcement_zeroes_only_mean_carrying_shear() {
        let basis = basis_ff();
        assert!(basis.bc.zero_mean());
        let mut coeffs = vec![1.0; basis.n_coeffs()];
        basis.enforce_space(&mut coeffs);
        // j = 1 shear is the constant (mean-carrying) mode
        assert_eq!(
            coeffs[basis.index_of(ModeIndex::new(0, 1, Parity::Sin))],
            0.0
        );
        assert_eq!(
            coeffs[basis.index_of(ModeIndex::new(0, 2, Parity::Sin))],
            1.0
        );
    }
}
