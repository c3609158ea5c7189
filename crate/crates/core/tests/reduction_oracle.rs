//! The reduction checked against fully independent routes: interaction
//! integrals by Simpson quadrature over closed-form free-free mode shapes,
//! and the Landau coefficient against the steady state of a hand-coded
//! amplitude ODE integrated to equilibrium.

use benard_core::{AlphaEval, BcTag, BoundaryCondition, ReducedModel};
use std::f64::consts::PI;

/// Free-free critical geometry in closed form.
const A_C: f64 = PI / std::f64::consts::SQRT_2;
fn l_c() -> f64 {
    2.0 * PI / A_C
}
fn r_c() -> f64 {
    27.0 * PI.powi(4) / 4.0
}

/// Simpson rule on [0,1].
fn simpson(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let n = n + n % 2;
    let h = 1.0 / n as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(i as f64 * h);
    }
    s * h / 3.0
}

/// Closed-form unit-H-norm free-free critical mode at R_c:
/// h = sin(pi x2) * sqrt(2/(L mu)), theta = sin(pi x2) * sqrt(2/L),
/// velocity (-sin(a x1) h', a cos(a x1) h), temperature cos(a x1) theta.
struct FfCriticalMode {
    h_amp: f64,
    th_amp: f64,
}

impl FfCriticalMode {
    fn new() -> Self {
        let mu = PI * PI + A_C * A_C;
        FfCriticalMode {
            h_amp: (2.0 / (l_c() * mu)).sqrt(),
            th_amp: (2.0 / l_c()).sqrt(),
        }
    }
}

/// Interaction integral (G(psi11, psi11), psi_0j) by 2D Simpson/periodic
/// quadrature over the closed-form shapes. The x1 average of the advection
/// of temperature is computed analytically to keep the oracle short:
/// u . grad T = a pi h th sin(2 pi x2) / 2 * (sin^2 + cos^2 structure).
fn oracle_c0(j: usize) -> f64 {
    let m = FfCriticalMode::new();
    // (u . grad T)(x2) after averaging in x1, times L
    let adv = move |x2: f64| {
        let h = m.h_amp * (PI * x2).sin();
        let hp = m.h_amp * PI * (PI * x2).cos();
        let th = m.th_amp * (PI * x2).sin();
        let thp = m.th_amp * PI * (PI * x2).cos();
        // u1 d1T averages to  (1/2) a hp th ; u2 d2T to (1/2) a h thp
        0.5 * A_C * (hp * th + h * thp)
    };
    let test_amp = (2.0 / l_c()).sqrt();
    -l_c() * simpson(4096, |x2| adv(x2) * test_amp * (j as f64 * PI * x2).sin())
}

#[test]
fn lorenz_type_transfer_is_the_only_temperature_interaction() {
    // c0[2] < 0 is the roll -> second-harmonic-temperature transfer;
    // all other c0[j] vanish, as do all c2[j] (checked via the model table)
    let c0_2 = oracle_c0(2);
    let expect = -PI / (12.0 * 2.0_f64.sqrt()).sqrt();
    assert!(
        (c0_2 - expect).abs() < 1e-9,
        "oracle c0[2] = {c0_2}, closed form {expect}"
    );
    for j in [1usize, 3, 4, 5] {
        assert!(oracle_c0(j).abs() < 1e-10, "c0[{j}] should vanish");
    }

    let model = ReducedModel::build(
        BoundaryCondition::new(BcTag::FreeFree),
        r_c(),
        8,
        AlphaEval::AtCritical,
    )
    .unwrap();
    assert!((model.table.c0[1] - c0_2).abs() < 1e-8);
    for (j, &c) in model.table.c2.iter().enumerate() {
        assert!(c.abs() < 1e-10, "c2[{}] = {c}", j + 1);
    }
}

/// Hand-coded amplitude truncation: the critical amplitude x and the slaved
/// second-harmonic temperature amplitude z with the analytically known
/// coefficients; everything here comes from the dispersion relation and the
/// closed-form integral above, not from the solver stack.
struct AmplitudeOde {
    beta1: f64,
    beta_z: f64,
    c: f64,
}

impl AmplitudeOde {
    fn new(r: f64) -> Self {
        let mu = PI * PI + A_C * A_C;
        AmplitudeOde {
            beta1: -mu + (r * A_C * A_C / mu).sqrt(),
            beta_z: -4.0 * PI * PI,
            c: oracle_c0(2),
        }
    }

    fn rhs(&self, s: [f64; 2]) -> [f64; 2] {
        let [x, z] = s;
        // energy-conserving skew pair: (G(z-mode, x-mode), x-mode) = -c
        [self.beta1 * x - self.c * x * z, self.beta_z * z + self.c * x * x]
    }

    fn equilibrium_from(&self, mut s: [f64; 2], t_end: f64, dt: f64) -> [f64; 2] {
        let n = (t_end / dt) as usize;
        for _ in 0..n {
            let k1 = self.rhs(s);
            let s2 = [s[0] + 0.5 * dt * k1[0], s[1] + 0.5 * dt * k1[1]];
            let k2 = self.rhs(s2);
            let s3 = [s[0] + 0.5 * dt * k2[0], s[1] + 0.5 * dt * k2[1]];
            let k3 = self.rhs(s3);
            let s4 = [s[0] + dt * k3[0], s[1] + dt * k3[1]];
            let k4 = self.rhs(s4);
            for i in 0..2 {
                s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        s
    }
}

#[test]
fn alpha_matches_direct_galerkin_steady_state() {
    // integrate the independent truncation to equilibrium just above
    // criticality and fit alpha = beta1 / x_inf^2
    let r = 1.02 * r_c();
    let ode = AmplitudeOde::new(r);
    assert!(ode.beta1 > 0.0);
    let s_inf = ode.equilibrium_from([1e-3, 0.0], 400.0, 5e-3);
    let alpha_fit = ode.beta1 / (s_inf[0] * s_inf[0]);

    let model = ReducedModel::build(
        BoundaryCondition::new(BcTag::FreeFree),
        r,
        12,
        AlphaEval::AtCritical,
    )
    .unwrap();
    let rel = ((alpha_fit - model.alpha) / model.alpha).abs();
    assert!(
        rel < 1e-2,
        "alpha oracle {alpha_fit} vs model {} (rel {rel:.2e})",
        model.alpha
    );
}

#[test]
fn cm_single_mode_value_matches_the_lorenz_slaving() {
    // at (x11, y11) = (1, 0): phi_0j = -c0[j]/beta_0j; only j = 2 survives
    let model = ReducedModel::build(
        BoundaryCondition::new(BcTag::FreeFree),
        r_c(),
        6,
        AlphaEval::AtCritical,
    )
    .unwrap();
    let cm = model.cm_coefficients(1.0, 0.0).unwrap();
    let expect = -oracle_c0(2) / (-4.0 * PI * PI);
    assert!((cm.phi0[1] - expect).abs() < 1e-8);
    assert!(cm.phi0[0].abs() < 1e-9, "phi_01 = -c0[1]/beta_01 with c0[1] = 0");
    for v in &cm.phit0 {
        assert_eq!(*v, 0.0);
    }
}

#[test]
fn amplitude_exponent_is_one_half() {
    // log r vs log(R - R_c) over ratios 1.001..1.02
    let bc = BoundaryCondition::new(BcTag::FreeFree);
    let mut logs = Vec::new();
    for i in 0..6 {
        let ratio = 1.001 + (1.02 - 1.001) * i as f64 / 5.0;
        let model = ReducedModel::build(bc, ratio * r_c(), 8, AlphaEval::AtCritical).unwrap();
        let r_amp = model.equilibrium_amplitude().unwrap();
        logs.push(((ratio * r_c() - r_c()).ln(), r_amp.ln()));
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = logs
        .iter()
        .map(|p| (p.0 - mx) * (p.1 - my))
        .sum::<f64>()
        / logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<f64>();
    assert!(
        (slope - 0.5).abs() <= 0.02,
        "amplitude exponent {slope} should be 0.5"
    );
}
