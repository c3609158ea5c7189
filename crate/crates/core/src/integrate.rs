//! Semi-implicit time integration of the Boussinesq system in eigenmode
//! coordinates: dissipation implicit, buoyancy coupling and advection
//! explicit. An optional second-order variant (SBDF2) and the optional
//! restored 1/Pr scaling of the momentum equation sit behind flags.

use crate::basis::{Basis, ModeIndex, Parity};
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::operators::apply_g;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// First-order IMEX Euler (default).
    Imex1,
    /// Second-order semi-implicit BDF.
    Sbdf2,
}

#[derive(Debug, Clone)]
pub struct IntegrateOptions {
    pub dt: f64,
    pub scheme: Scheme,
    /// None integrates the operator form as written; Some(pr) restores the
    /// 1/Pr prefactor of the primitive momentum equation.
    pub pr_scaling: Option<f64>,
    /// Residual norm below which the state counts as steady.
    pub steady_tol: f64,
    /// Record the trajectory every this many steps (also the cadence of the
    /// steadiness check).
    pub record_every: usize,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            dt: 2e-3,
            scheme: Scheme::Imex1,
            pr_scaling: None,
            steady_tol: 1e-9,
            record_every: 20,
        }
    }
}

/// Recorded history of one trajectory.
#[derive(Debug, Clone)]
pub struct TrajectorySummary {
    pub times: Vec<f64>,
    /// H-norm of the state.
    pub norms: Vec<f64>,
    /// Critical-pair amplitude r = sqrt(x11^2 + y11^2).
    pub amplitudes: Vec<f64>,
    /// Critical-pair phase atan2(y11, x11).
    pub phases: Vec<f64>,
    /// Net horizontal momentum M(t).
    pub mean_flows: Vec<f64>,
    pub steady: bool,
    /// Time at which the steady tolerance was met.
    pub steady_time: Option<f64>,
    pub final_field: SpectralField,
}

/// Time stepper bound to one basis, Rayleigh number and step size; the
/// implicit blocks are factored once.
pub struct Integrator {
    basis: Arc<Basis>,
    rayleigh: f64,
    opts: IntegrateOptions,
    /// LU factors of (I + dt A) per k-block and parity family, in the
    /// (j = 1..J) coefficient ordering. k = 0 has separate temperature and
    /// shear blocks; k >= 1 shares one block across parities.
    lu_k0_temp: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_k0_shear: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu_rolls: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    /// Factors of (I + (2/3) dt A) for the second-order scheme.
    lu23_k0_temp: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu23_k0_shear: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    lu23_rolls: Vec<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    /// Explicit-part stability bound on dt.
    pub dt_stability_bound: f64,
}

impl Integrator {
    pub fn new(basis: Arc<Basis>, rayleigh: f64, opts: IntegrateOptions) -> Result<Self> {
        if !(opts.dt > 0.0) {
            return Err(Error::InvalidParam(format!("dt must be positive, got {}", opts.dt)));
        }
        let lambda = rayleigh.sqrt();
        let (pu, pt) = match opts.pr_scaling {
            Some(p) => {
                if !(p > 0.0) {
                    return Err(Error::InvalidParam(format!(
                        "Prandtl number must be positive, got {p}"
                    )));
                }
                (p, 1.0)
            }
            None => (1.0, 1.0),
        };
        let nj = basis.j_max;
        let ident = DMatrix::<f64>::identity(nj, nj);

        // stability bound for the explicit buoyancy coupling: dt < 1/rho
        // with rho the largest spectral radius of lambda B1 over the blocks
        let mut rho = 0.0f64;
        for k in 1..=basis.k_max {
            let b1 = basis.explicit_block(k, lambda, opts.pr_scaling);
            // crude symmetric bound: max row sum
            let mut largest = 0.0f64;
            for m in 0..nj {
                let mut row = 0.0;
                for n in 0..nj {
                    row += b1[(m, n)].abs();
                }
                largest = largest.max(row);
            }
            rho = rho.max(largest);
        }
        let dt_stability_bound = if rho > 0.0 { 1.0 / rho } else { f64::INFINITY };
        if opts.dt > dt_stability_bound {
            return Err(Error::InvalidParam(format!(
                "dt = {} exceeds the explicit stability bound {dt_stability_bound:.3e}",
                opts.dt
            )));
        }

        let dt = opts.dt;
        let dt23 = 2.0 * dt / 3.0;
        let lu_k0_temp = (ident.clone() + basis.k0_temp_dissipation() * (dt * pt)).lu();
        let lu_k0_shear = (ident.clone() + basis.k0_shear_dissipation() * (dt * pu)).lu();
        let lu23_k0_temp = (ident.clone() + basis.k0_temp_dissipation() * (dt23 * pt)).lu();
        let lu23_k0_shear = (ident.clone() + basis.k0_shear_dissipation() * (dt23 * pu)).lu();
        let mut lu_rolls = Vec::with_capacity(basis.k_max);
        let mut lu23_rolls = Vec::with_capacity(basis.k_max);
        for k in 1..=basis.k_max {
            let a = basis.roll_dissipation(k, opts.pr_scaling);
            lu_rolls.push((ident.clone() + a.clone() * dt).lu());
            lu23_rolls.push((ident.clone() + a * dt23).lu());
        }
        Ok(Integrator {
            basis,
            rayleigh,
            opts,
            lu_k0_temp,
            lu_k0_shear,
            lu_rolls,
            lu23_k0_temp,
            lu23_k0_shear,
            lu23_rolls,
            dt_stability_bound,
        })
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn dt(&self) -> f64 {
        self.opts.dt
    }

    /// Explicit part of the right-hand side: lambda B1 psi + G(psi, psi).
    fn explicit_rhs(&self, psi: &SpectralField) -> Result<Vec<f64>> {
        let lambda = self.rayleigh.sqrt();
        let mut out = self
            .basis
            .apply_buoyancy(psi.coeffs(), lambda, self.opts.pr_scaling);
        let g = apply_g(psi, psi)?;
        for (o, v) in out.iter_mut().zip(g.coeffs()) {
            *o += v;
        }
        Ok(out)
    }

    fn implicit_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let basis = &self.basis;
        let nj = basis.j_max;
        let mut out = vec![0.0; rhs.len()];
        let mut buf = DVector::<f64>::zeros(nj);
        let scatter =
            |lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
             k: usize,
             parity: Parity,
             buf: &mut DVector<f64>,
             out: &mut Vec<f64>| {
                for j in 1..=nj {
                    buf[j - 1] = rhs[basis.index_of(ModeIndex::new(k, j, parity))];
                }
                let sol = lu.solve(buf).expect("implicit block is nonsingular");
                for j in 1..=nj {
                    out[basis.index_of(ModeIndex::new(k, j, parity))] = sol[j - 1];
                }
            };
        scatter(&self.lu_k0_temp, 0, Parity::Cos, &mut buf, &mut out);
        scatter(&self.lu_k0_shear, 0, Parity::Sin, &mut buf, &mut out);
        for k in 1..=basis.k_max {
            scatter(&self.lu_rolls[k - 1], k, Parity::Cos, &mut buf, &mut out);
            scatter(&self.lu_rolls[k - 1], k, Parity::Sin, &mut buf, &mut out);
        }
        out
    }

    /// One first-order IMEX step.
    pub fn step(&self, psi: &SpectralField) -> Result<SpectralField> {
        let dt = self.opts.dt;
        let expl = self.explicit_rhs(psi)?;
        let mut star: Vec<f64> = psi
            .coeffs()
            .iter()
            .zip(&expl)
            .map(|(c, e)| c + dt * e)
            .collect();
        self.basis.enforce_space(&mut star);
        let mut next = self.implicit_solve(&star);
        self.basis.enforce_space(&mut next);
        for (i, v) in next.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    t: f64::NAN,
                    context: format!("coefficient {i} after one step"),
                });
            }
        }
        SpectralField::from_coeffs(self.basis.clone(), next)
    }

    /// Norm of the full right-hand side (steadiness measure).
    pub fn rhs_norm(&self, psi: &SpectralField) -> Result<f64> {
        let lambda = self.rayleigh.sqrt();
        let mut r = self
            .basis
            .apply_linear(psi.coeffs(), lambda, self.opts.pr_scaling);
        let g = apply_g(psi, psi)?;
        for (o, v) in r.iter_mut().zip(g.coeffs()) {
            *o += v;
        }
        Ok(r.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Integrate until the right-hand side drops below `steady_tol` or the
    /// horizon is reached, recording amplitude, phase, norm and mean flow.
    pub fn evolve(&self, psi0: &SpectralField, horizon: f64) -> Result<TrajectorySummary> {
        psi0.compatible(&SpectralField::zeros(self.basis.clone()))?;
        let dt = self.opts.dt;
        let n_steps = (horizon / dt).ceil() as usize;
        let cadence = self.opts.record_every.max(1);
        let mut psi = psi0.clone();
        let mut prev_explicit: Option<Vec<f64>> = None;
        let mut prev_coeffs: Option<Vec<f64>> = None;

        let mut out = TrajectorySummary {
            times: vec![0.0],
            norms: vec![psi.norm_h()],
            amplitudes: vec![psi.amplitude()],
            phases: vec![psi.phase()],
            mean_flows: vec![psi.mean_flow()],
            steady: false,
            steady_time: None,
            final_field: psi.clone(),
        };

        for step_idx in 1..=n_steps {
            let t = step_idx as f64 * dt;
            match self.opts.scheme {
                Scheme::Imex1 => {
                    psi = self.step(&psi)?;
                }
                Scheme::Sbdf2 => {
                    let expl = self.explicit_rhs(&psi)?;
                    match (&prev_explicit, &prev_coeffs) {
                        (Some(pe), Some(pc)) => {
                            // (3c' - 4c + c_prev)/(2 dt) = -A c' + 2E - E_prev
                            // => (I + (2/3) dt A) c' = (4c - c_prev + 2dt(2E - E_prev))/3
                            let mut rhs: Vec<f64> = Vec::with_capacity(expl.len());
                            for i in 0..expl.len() {
                                rhs.push(
                                    (4.0 * psi.coeffs()[i] - pc[i]
                                        + 2.0 * dt * (2.0 * expl[i] - pe[i]))
                                        / 3.0,
                                );
                            }
                            self.basis.enforce_space(&mut rhs);
                            let mut next = self.implicit_solve_sbdf2(&rhs);
                            self.basis.enforce_space(&mut next);
                            prev_coeffs = Some(psi.coeffs().to_vec());
                            prev_explicit = Some(expl);
                            psi = SpectralField::from_coeffs(self.basis.clone(), next)?;
                        }
                        _ => {
                            prev_coeffs = Some(psi.coeffs().to_vec());
                            prev_explicit = Some(expl);
                            psi = self.step(&psi)?;
                        }
                    }
                }
            }
            if !psi.norm_h().is_finite() {
                return Err(Error::NonFinite {
                    t,
                    context: "state norm".into(),
                });
            }
            if step_idx % cadence == 0 || step_idx == n_steps {
                out.times.push(t);
                out.norms.push(psi.norm_h());
                out.amplitudes.push(psi.amplitude());
                out.phases.push(psi.phase());
                out.mean_flows.push(psi.mean_flow());
                let resid = self.rhs_norm(&psi)?;
                if resid <= self.opts.steady_tol {
                    out.steady = true;
                    out.steady_time = Some(t);
                    break;
                }
            }
        }
        out.final_field = psi;
        Ok(out)
    }

    fn implicit_solve_sbdf2(&self, rhs: &[f64]) -> Vec<f64> {
        let basis = &self.basis;
        let nj = basis.j_max;
        let mut out = vec![0.0; rhs.len()];
        let mut buf = DVector::<f64>::zeros(nj);
        let scatter =
            |lu: &nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
             k: usize,
             parity: Parity,
             buf: &mut DVector<f64>,
             out: &mut Vec<f64>| {
                for j in 1..=nj {
                    buf[j - 1] = rhs[basis.index_of(ModeIndex::new(k, j, parity))];
                }
                let sol = lu.solve(buf).expect("implicit block is nonsingular");
                for j in 1..=nj {
                    out[basis.index_of(ModeIndex::new(k, j, parity))] = sol[j - 1];
                }
            };
        scatter(&self.lu23_k0_temp, 0, Parity::Cos, &mut buf, &mut out);
        scatter(&self.lu23_k0_shear, 0, Parity::Sin, &mut buf, &mut out);
        for k in 1..=basis.k_max {
            scatter(&self.lu23_rolls[k - 1], k, Parity::Cos, &mut buf, &mut out);
            scatter(&self.lu23_rolls[k - 1], k, Parity::Sin, &mut buf, &mut out);
        }
        out
    }
}

/// Least-squares decay rate of log|values| over the last half of the window.
/// Refused when the signal changes sign or degenerates.
pub fn decay_rate_fit(times: &[f64], values: &[f64]) -> Result<f64> {
    if times.len() != values.len() || times.len() < 4 {
        return Err(Error::FitRefused(format!(
            "need at least 4 samples, got {}",
            times.len()
        )));
    }
    let start = times.len() / 2;
    let t = &times[start..];
    let v = &values[start..];
    let sign = v[0].signum();
    if sign == 0.0 {
        return Err(Error::FitRefused("window starts at zero".into()));
    }
    for &x in v {
        if x.signum() != sign {
            return Err(Error::FitRefused("sign change inside the fit window".into()));
        }
        if x == 0.0 || !x.is_finite() {
            return Err(Error::FitRefused("zero or non-finite sample".into()));
        }
    }
    let n = t.len() as f64;
    let mean_t = t.iter().sum::<f64>() / n;
    let logs: Vec<f64> = v.iter().map(|x| x.abs().ln()).collect();
    let mean_y = logs.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (ti, yi) in t.iter().zip(&logs) {
        num += (ti - mean_t) * (yi - mean_y);
        den += (ti - mean_t) * (ti - mean_t);
    }
    if den == 0.0 {
        return Err(Error::FitRefused("degenerate time window".into()));
    }
    Ok(num / den)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bc::{BcTag, BoundaryCondition, PhysParams};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn ff_basis(r_ratio: f64) -> Arc<Basis> {
        let bc = BoundaryCondition::new(BcTag::FreeFree);
        let r_c = 27.0 * PI.powi(4) / 4.0;
        Basis::new(bc, 2.0 * 2.0_f64.sqrt(), r_ratio * r_c, 4, 6, None).unwrap()
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let b = ff_basis(1.05);
        let integ = Integrator::new(b.clone(), b.rayleigh, IntegrateOptions::default()).unwrap();
        let z = SpectralField::zeros(b);
        let z1 = integ.step(&z).unwrap();
        assert_eq!(z1.norm_h(), 0.0);
    }

    #[test]
    fn pure_diffusion_matches_implicit_euler_factor() {
        // with G absent by smallness and lambda ~ 0: a single temperature
        // mode decays by exactly 1/(1 + dt j^2 pi^2) per step
        let bc = BoundaryCondition::new(BcTag::FreeFree);
        let b = Basis::new(bc, 2.0 * 2.0_f64.sqrt(), 1e-20, 2, 4, None).unwrap();
        let opts = IntegrateOptions {
            dt: 1e-2,
            ..Default::default()
        };
        let integ = Integrator::new(b.clone(), 1e-20, opts).unwrap();
        let amp = 1e-8; // keeps the quadratic term at round-off
        let psi =
            SpectralField::eigenvector(b.clone(), ModeIndex::new(0, 2, Parity::Cos), amp).unwrap();
        let next = integ.step(&psi).unwrap();
        let factor = next.get(ModeIndex::new(0, 2, Parity::Cos)) / amp;
        let expect = 1.0 / (1.0 + 1e-2 * 4.0 * PI * PI);
        assert_relative_eq!(factor, expect, max_relative = 1e-10);
    }

    #[test]
    fn linear_growth_factor_tracks_eigenvalue() {
        let b = ff_basis(1.05);
        let opts = IntegrateOptions {
            dt: 1e-3,
            ..Default::default()
        };
        let integ = Integrator::new(b.clone(), b.rayleigh, opts).unwrap();
        let m = ModeIndex::new(1, 1, Parity::Cos);
        let beta = b.beta(m);
        let amp = 1e-9;
        let psi = SpectralField::eigenvector(b.clone(), m, amp).unwrap();
        let next = integ.step(&psi).unwrap();
        let factor = next.get(m) / amp;
        // first-order scheme: factor = 1 + dt beta + O(dt^2)
        assert!(
            (factor - (1.0 + 1e-3 * beta)).abs() < 5.0 * 1e-6 * (1.0 + beta.abs()),
            "factor {factor} vs {}",
            1.0 + 1e-3 * beta
        );
    }

    #[test]
    fn energy_decays_below_criticality() {
        let b = ff_basis(0.5);
        let opts = IntegrateOptions {
            dt: 5e-3,
            ..Default::default()
        };
        let integ = Integrator::new(b.clone(), b.rayleigh, opts).unwrap();
        let psi0 = SpectralField::seeded_noise(b, 9, 1e-3);
        let traj = integ.evolve(&psi0, 2.0).unwrap();
        for w in traj.norms.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12), "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn supercritical_settles_on_circle_amplitude() {
        let b = ff_basis(1.05);
        let opts = IntegrateOptions {
            dt: 5e-3,
            steady_tol: 1e-9,
            ..Default::default()
        };
        let integ = Integrator::new(b.clone(), b.rayleigh, opts).unwrap();
        let mut psi0 = SpectralField::seeded_noise(b.clone(), 4, 1e-3);
        psi0.zero_shear();
        let traj = integ.evolve(&psi0, 400.0).unwrap();
        assert!(traj.steady, "no steady state before the horizon");
        let model = crate::manifold::ReducedModel::build(
            b.bc,
            b.rayleigh,
            6,
            crate::manifold::AlphaEval::AtCritical,
        )
        .unwrap();
        let predicted = model.equilibrium_amplitude().unwrap();
        let got = traj.final_field.amplitude();
        assert_relative_eq!(got, predicted, max_relative = 0.1);
        // the steady state really is steady for the full operator
        let p = PhysParams::new(b.rayleigh, 1.0).unwrap();
        assert!(crate::operators::rhs_norm(&traj.final_field, &p).unwrap() < 1e-8);
    }

    #[test]
    fn sbdf2_improves_on_imex1_for_the_linear_factor() {
        let b = ff_basis(1.02);
        let m = ModeIndex::new(1, 1, Parity::Cos);
        let beta = b.beta(m);
        let dt = 2e-3;
        let run = |scheme: Scheme| -> f64 {
            let opts = IntegrateOptions {
                dt,
                scheme,
                ..Default::default()
            };
            let integ = Integrator::new(b.clone(), b.rayleigh, opts).unwrap();
            let amp = 1e-10;
            let psi = SpectralField::eigenvector(b.clone(), m, amp).unwrap();
            let traj = integ.evolve(&psi, 50.0 * dt).unwrap();
            let exact = amp * (beta * traj.times.last().unwrap()).exp();
            (traj.final_field.get(m) - exact).abs() / exact
        };
        let e1 = run(Scheme::Imex1);
        let e2 = run(Scheme::Sbdf2);
        assert!(e2 < 0.2 * e1, "sbdf2 {e2} not better than imex1 {e1}");
    }

    #[test]
    fn mean_flow_decays_at_shear_rate() {
        // rigid-rigid: shear mode j decays at exactly -j^2 pi^2
        let bc = BoundaryCondition::new(BcTag::RigidRigid);
        let cp = crate::stability::critical_point(bc).unwrap();
        let b = Basis::new(bc, cp.l_c, 1.05 * cp.r_c, 3, 5, None).unwrap();
        let opts = IntegrateOptions {
            dt: 2e-3,
            record_every: 10,
            ..Default::default()
        };
        let integ = Integrator::new(b.clone(), b.rayleigh, opts).unwrap();
        let mut psi0 = SpectralField::zeros(b.clone());
        psi0.set(ModeIndex::new(0, 1, Parity::Sin), 0.05);
        psi0.set(ModeIndex::new(0, 3, Parity::Sin), 0.02);
        let traj = integ.evolve(&psi0, 0.6).unwrap();
        let rate = decay_rate_fit(&traj.times, &traj.mean_flows).unwrap();
        assert_relative_eq!(rate, -PI * PI, max_relative = 0.02);
    }

    #[test]
    fn decay_rate_fit_on_synthetic_series() {
        let times: Vec<f64> = (0..40).map(|i| i as f64 * 0.1).collect();
        let vals: Vec<f64> = times.iter().map(|&t| 2.5 * (-3.0 * t).exp()).collect();
        let r = decay_rate_fit(&times, &vals).unwrap();
        assert_relative_eq!(r, -3.0, epsilon = 1e-6);
        // two-exponential: the slower rate dominates the late window
        let vals2: Vec<f64> = times
            .iter()
            .map(|&t| (-8.0 * t).exp() + 0.05 * (-1.0 * t).exp())
            .collect();
        let r2 = decay_rate_fit(&times, &vals2).unwrap();
        assert_relative_eq!(r2, -1.0, max_relative = 0.05);
        // sign change refused
        let vals3: Vec<f64> = times.iter().map(|&t| (t - 3.0).sin()).collect();
        assert!(decay_rate_fit(&times, &vals3).is_err());
    }

    #[test]
    fn dt_above_stability_bound_is_rejected() {
        let b = ff_basis(1.05);
        let opts = IntegrateOptions {
            dt: 1e3,
            ..Default::default()
        };
        assert!(Integrator::new(b.clone(), b.rayleigh, opts).is_err());
    }
}
