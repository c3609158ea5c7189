//! Center-manifold reduction of the convection problem near criticality:
//! interaction integrals of the critical pair against the slaved modes, the
//! quadratic manifold coefficients, the Landau coefficient alpha, and the
//! reduced planar system
//!
//! ```text
//!   dx/dt = beta_1(R) x - alpha x (x^2 + y^2)
//!   dy/dt = beta_1(R) y - alpha y (x^2 + y^2)
//! ```
//!
//! whose attractor for beta_1 > 0, alpha > 0 is the circle r = sqrt(beta1/alpha)
//! of steady states.

use crate::basis::{Basis, ModeIndex, Parity};
use crate::bc::BoundaryCondition;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::operators::apply_g;
use crate::stability::critical_point;
use std::sync::Arc;

/// Trilinear integrals of the critical pair against the k = 0 temperature
/// and k = 2 families, with the cross-parity identity blocks verified.
#[derive(Debug, Clone)]
pub struct InteractionTable {
    pub j_max: usize,
    /// c0[j-1] = (G(psi_11, psi_11), psi_0j).
    pub c0: Vec<f64>,
    /// c2[j-1] = (G(psi_11, psi_11), psi_2j).
    pub c2: Vec<f64>,
    /// Temperature-mode eigenvalues beta_0j.
    pub beta0: Vec<f64>,
    /// k = 2 eigenvalues beta_2j.
    pub beta2: Vec<f64>,
    /// Largest residual of the cross-parity equalities.
    pub identity_residual: f64,
}

impl InteractionTable {
    /// Landau coefficient from the leading `j` terms
    /// (unit-normalized basis, so the norm factors are 1).
    pub fn alpha_at(&self, j: usize) -> f64 {
        let j = j.min(self.j_max);
        let mut sum = 0.0;
        for i in 0..j {
            sum += self.c0[i] * self.c0[i] / self.beta0[i];
            sum += self.c2[i] * self.c2[i] / self.beta2[i];
        }
        -sum
    }

    pub fn alpha(&self) -> f64 {
        self.alpha_at(self.j_max)
    }
}

/// Assemble the interaction table on a basis with k_max >= 2. All integrals
/// are dealiased quadrature; an identity residual above `1e-8` is a hard
/// failure because it signals a quadrature or basis bug, not a modelling
/// error.
pub fn interaction_table(basis: &Arc<Basis>) -> Result<InteractionTable> {
    if basis.k_max < 2 {
        return Err(Error::InvalidParam(
            "interaction table needs k_max >= 2 for the second-harmonic family".into(),
        ));
    }
    let j_max = basis.j_max;
    let p11 = SpectralField::eigenvector(basis.clone(), ModeIndex::new(1, 1, Parity::Cos), 1.0)?;
    let q11 = SpectralField::eigenvector(basis.clone(), ModeIndex::new(1, 1, Parity::Sin), 1.0)?;
    let g_pp = apply_g(&p11, &p11)?;
    let g_qq = apply_g(&q11, &q11)?;
    let g_pq = apply_g(&p11, &q11)?;
    let g_qp = apply_g(&q11, &p11)?;

    let mut c0 = Vec::with_capacity(j_max);
    let mut c2 = Vec::with_capacity(j_max);
    let mut beta0 = Vec::with_capacity(j_max);
    let mut beta2 = Vec::with_capacity(j_max);
    let mut resid = 0.0f64;
    for j in 1..=j_max {
        let t0 = ModeIndex::new(0, j, Parity::Cos);
        let t2 = ModeIndex::new(2, j, Parity::Cos);
        let s0 = ModeIndex::new(0, j, Parity::Sin);
        let s2 = ModeIndex::new(2, j, Parity::Sin);
        let a0 = g_pp.get(t0);
        let b0 = g_qq.get(t0);
        let a2 = g_pp.get(t2);
        let b2 = g_qq.get(t2);
        let cross0 = g_pq.get(s0) + g_qp.get(s0);
        let cross2a = g_pq.get(s2);
        let cross2b = g_qp.get(s2);
        // cross-parity equalities forced by the trigonometric structure
        resid = resid
            .max((a0 - b0).abs())
            .max((a2 + b2).abs())
            .max(cross0.abs())
            .max((cross2a - a2).abs())
            .max((cross2b - a2).abs());
        c0.push(a0);
        c2.push(a2);
        beta0.push(basis.beta(t0));
        beta2.push(basis.beta(t2));
    }
    if resid > 1e-8 {
        return Err(Error::Discretization(format!(
            "interaction identity residual {resid:.3e} exceeds 1e-8"
        )));
    }
    Ok(InteractionTable {
        j_max,
        c0,
        c2,
        beta0,
        beta2,
        identity_residual: resid,
    })
}

/// Where the Landau coefficient is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AlphaEval {
    /// At R = R_c, reused for nearby R (the documented default).
    AtCritical,
    /// At the model Rayleigh number.
    AtRayleigh,
}

/// Quadratic center-manifold coefficients at a state (x11, y11):
/// the slaved amplitudes of psi_0j, psi_2j, psitilde_0j, psitilde_2j.
#[derive(Debug, Clone)]
pub struct CmCoefficients {
    pub phi0: Vec<f64>,
    pub phi2: Vec<f64>,
    pub phit0: Vec<f64>,
    pub phit2: Vec<f64>,
}

/// The reduced amplitude system near criticality.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub bc: BoundaryCondition,
    pub period: f64,
    pub rayleigh: f64,
    pub r_c: f64,
    /// beta_1(R) at the critical period.
    pub beta1: f64,
    /// Landau coefficient (evaluated per `alpha_eval`).
    pub alpha: f64,
    pub alpha_eval: AlphaEval,
    pub j_max: usize,
    pub table: InteractionTable,
    /// Relative change of alpha when the truncation is halved; a proxy for
    /// the tail of the slaved-mode sums.
    pub alpha_tail_change: f64,
}

impl ReducedModel {
    /// Build at Rayleigh number `r` with slaved-mode truncation `j_max`.
    pub fn build(
        bc: BoundaryCondition,
        r: f64,
        j_max: usize,
        alpha_eval: AlphaEval,
    ) -> Result<Self> {
        let cp = critical_point(bc)?;
        let r_alpha = match alpha_eval {
            AlphaEval::AtCritical => cp.r_c,
            AlphaEval::AtRayleigh => r,
        };
        let basis = Basis::new(bc, cp.l_c, r_alpha, 2, j_max, None)?;
        let table = interaction_table(&basis)?;
        let alpha = table.alpha();
        let alpha_half = table.alpha_at(j_max / 2);
        let beta1 = crate::stability::growth_rate_beta1(r, bc)?;
        Ok(ReducedModel {
            bc,
            period: cp.l_c,
            rayleigh: r,
            r_c: cp.r_c,
            beta1,
            alpha,
            alpha_eval,
            j_max,
            table,
            alpha_tail_change: ((alpha - alpha_half) / alpha).abs(),
        })
    }

    /// First-order center-manifold coefficients at (x11, y11). Refuses when
    /// a slaved mode is not strictly decaying.
    pub fn cm_coefficients(&self, x11: f64, y11: f64) -> Result<CmCoefficients> {
        for (i, &b) in self.table.beta0.iter().enumerate() {
            if b >= 0.0 {
                return Err(Error::SplittingViolated {
                    k: 0,
                    j: i + 1,
                    beta: b,
                });
            }
        }
        for (i, &b) in self.table.beta2.iter().enumerate() {
            if b >= 0.0 {
                return Err(Error::SplittingViolated {
                    k: 2,
                    j: i + 1,
                    beta: b,
                });
            }
        }
        let r2_sum = x11 * x11 + y11 * y11;
        let r2_diff = x11 * x11 - y11 * y11;
        let xy = x11 * y11;
        let n = self.table.j_max;
        let mut out = CmCoefficients {
            phi0: Vec::with_capacity(n),
            phi2: Vec::with_capacity(n),
            phit0: vec![0.0; n],
            phit2: Vec::with_capacity(n),
        };
        for i in 0..n {
            out.phi0
                .push(-self.table.c0[i] * r2_sum / self.table.beta0[i]);
            out.phi2
                .push(-self.table.c2[i] * r2_diff / self.table.beta2[i]);
            out.phit2
                .push(-2.0 * self.table.c2[i] * xy / self.table.beta2[i]);
        }
        Ok(out)
    }

    /// Right-hand side of the cubic normal form.
    pub fn rhs(&self, state: [f64; 2]) -> [f64; 2] {
        let [x, y] = state;
        let r2 = x * x + y * y;
        [
            self.beta1 * x - self.alpha * x * r2,
            self.beta1 * y - self.alpha * y * r2,
        ]
    }

    /// Analytic Jacobian of `rhs`.
    pub fn jacobian(&self, state: [f64; 2]) -> [[f64; 2]; 2] {
        let [x, y] = state;
        [
            [
                self.beta1 - self.alpha * (3.0 * x * x + y * y),
                -2.0 * self.alpha * x * y,
            ],
            [
                -2.0 * self.alpha * x * y,
                self.beta1 - self.alpha * (x * x + 3.0 * y * y),
            ],
        ]
    }

    /// Amplitude of the bifurcated circle: sqrt(max(beta1, 0)/alpha);
    /// zero at and below criticality. Refuses when alpha <= 0 (subcritical
    /// normal form, outside this model).
    pub fn equilibrium_amplitude(&self) -> Result<f64> {
        if self.alpha <= 0.0 {
            return Err(Error::NonPositiveAlpha(self.alpha));
        }
        Ok((self.beta1.max(0.0) / self.alpha).sqrt())
    }
}

/// Landau coefficient at Rayleigh number `r`, together with the truncation
/// report (relative change from the half truncation).
pub fn alpha(r: f64, bc: BoundaryCondition, j_max: usize) -> Result<(f64, f64)> {
    let model = ReducedModel::build(bc, r, j_max, AlphaEval::AtRayleigh)?;
    Ok((model.alpha, model.alpha_tail_change))
}

/// Outcome of the bifurcation classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BifurcationVerdict {
    /// Supercritical bifurcation to an attractor homeomorphic to S^1
    /// consisting of steady states (the translation circle).
    S1CircleOfSteadyStates,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct ClassifyReport {
    pub r_c: f64,
    /// beta_1 sampled below, at and above R_c.
    pub beta1_below: f64,
    pub beta1_at: f64,
    pub beta1_above: f64,
    pub alpha: f64,
    /// Eigenvalue-crossing condition: sign change of beta_1 across R_c.
    pub crossing_holds: bool,
    /// Cubic-definiteness condition: (g_3(x), x) = alpha |x|^4 with
    /// alpha > 0.
    pub cubic_definite: bool,
    /// Largest rotation-equivariance residual of the reduced rhs over a ring
    /// of probe angles (the O(2) symmetry that degenerates the attractor
    /// into a circle of steady states).
    pub equivariance_residual: f64,
    pub verdict: BifurcationVerdict,
}

/// Classify the bifurcation at R_c for the given walls. `model` supplies
/// alpha; beta_1 is sampled at R_c (1 +/- delta).
pub fn bifurcation_classify(model: &ReducedModel, delta: f64) -> Result<ClassifyReport> {
    let bc = model.bc;
    let r_c = model.r_c;
    let beta1_below = crate::stability::growth_rate_beta1((1.0 - delta) * r_c, bc)?;
    let beta1_at = crate::stability::growth_rate_beta1(r_c, bc)?;
    let beta1_above = crate::stability::growth_rate_beta1((1.0 + delta) * r_c, bc)?;
    let crossing_holds =
        beta1_below < 0.0 && beta1_above > 0.0 && beta1_at.abs() < 1e-4 * beta1_above.abs();
    let cubic_definite = model.alpha > 0.0;

    // rotation equivariance of the full rhs at a probe state
    let probe = [0.37, -0.21];
    let mut equiv = 0.0f64;
    for i in 0..8 {
        let ang = std::f64::consts::TAU * i as f64 / 8.0;
        let (sn, cs) = ang.sin_cos();
        let rot = [
            cs * probe[0] - sn * probe[1],
            sn * probe[0] + cs * probe[1],
        ];
        let f_rot = model.rhs(rot);
        let f = model.rhs(probe);
        let rot_f = [cs * f[0] - sn * f[1], sn * f[0] + cs * f[1]];
        equiv = equiv
            .max((f_rot[0] - rot_f[0]).abs())
            .max((f_rot[1] - rot_f[1]).abs());
    }
    let verdict = if crossing_holds && cubic_definite && equiv < 1e-12 {
        BifurcationVerdict::S1CircleOfSteadyStates
    } else {
        BifurcationVerdict::Inconclusive
    };
    Ok(ClassifyReport {
        r_c,
        beta1_below,
        beta1_at,
        beta1_above,
        alpha: model.alpha,
        crossing_holds,
        cubic_definite,
        equivariance_residual: equiv,
        verdict,
    })
}
