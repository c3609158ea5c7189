//! Shared oracles for the integration suites: routines deliberately built on
//! nothing but std + RK4 so they cannot share a failure mode with the
//! Galerkin solvers they check.

#![allow(dead_code)]

/// Wall kinds for the shooting oracle.
#[derive(Clone, Copy, PartialEq)]
pub enum OracleWall {
    Rigid,
    Free,
}

/// Right-hand side of the neutral vertical system as a first-order system
/// z = (h, h', h'', h''', theta, theta'):
///   h'''' = 2 a^2 h'' - a^4 h + sqrt(R) a theta
///   theta'' = a^2 theta - sqrt(R) a h
fn rhs(z: &[f64; 6], a: f64, r: f64) -> [f64; 6] {
    let sr = r.sqrt();
    [
        z[1],
        z[2],
        z[3],
        2.0 * a * a * z[2] - a.powi(4) * z[0] + sr * a * z[4],
        z[5],
        a * a * z[4] - sr * a * z[0],
    ]
}

fn rk4_integrate(mut z: [f64; 6], a: f64, r: f64, steps: usize) -> [f64; 6] {
    let h = 1.0 / steps as f64;
    for _ in 0..steps {
        let k1 = rhs(&z, a, r);
        let mut z2 = z;
        for i in 0..6 {
            z2[i] = z[i] + 0.5 * h * k1[i];
        }
        let k2 = rhs(&z2, a, r);
        for i in 0..6 {
            z2[i] = z[i] + 0.5 * h * k2[i];
        }
        let k3 = rhs(&z2, a, r);
        for i in 0..6 {
            z2[i] = z[i] + h * k3[i];
        }
        let k4 = rhs(&z2, a, r);
        for i in 0..6 {
            z[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    z
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Determinant of the shooting boundary map at (a, R): zero exactly on the
/// neutral curve.
pub fn shooting_determinant(a: f64, r: f64, bottom: OracleWall, top: OracleWall) -> f64 {
    // seeds spanning the bottom-compatible initial conditions
    let seeds: [[f64; 6]; 3] = match bottom {
        OracleWall::Rigid => [
            // h = h' = 0, theta = 0 free: h'', h''', theta'
            [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ],
        OracleWall::Free => [
            // h = h'' = 0, theta = 0 free: h', h''', theta'
            [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
        ],
    };
    let mut m = [[0.0; 3]; 3];
    for (col, seed) in seeds.iter().enumerate() {
        let z1 = rk4_integrate(*seed, a, r, 400);
        let resid = match top {
            OracleWall::Rigid => [z1[0], z1[1], z1[4]], // h, h', theta
            OracleWall::Free => [z1[0], z1[2], z1[4]],  // h, h'', theta
        };
        for row in 0..3 {
            m[row][col] = resid[row];
        }
    }
    det3(m)
}

/// Smallest neutral Rayleigh number at wavenumber a by scan + bisection on
/// the shooting determinant.
pub fn shooting_neutral_r(a: f64, bottom: OracleWall, top: OracleWall) -> f64 {
    let n = 420;
    let (r_lo, r_hi) = (100.0f64, 1.0e6f64);
    let mut prev_r = r_lo;
    let mut prev_d = shooting_determinant(a, prev_r, bottom, top);
    for i in 1..=n {
        let r = r_lo * (r_hi / r_lo).powf(i as f64 / n as f64);
        let d = shooting_determinant(a, r, bottom, top);
        if prev_d * d < 0.0 {
            // bisection
            let (mut lo, mut hi, mut dlo) = (prev_r, r, prev_d);
            for _ in 0..90 {
                let mid = 0.5 * (lo + hi);
                let dm = shooting_determinant(a, mid, bottom, top);
                if dlo * dm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    dlo = dm;
                }
                if (hi - lo) < 1e-9 * hi {
                    break;
                }
            }
            return 0.5 * (lo + hi);
        }
        prev_r = r;
        prev_d = d;
    }
    panic!("shooting oracle found no neutral Rayleigh number at a = {a}");
}

/// Critical point (R_c, a_c) by golden-section on the shooting neutral curve.
pub fn shooting_critical(bottom: OracleWall, top: OracleWall) -> (f64, f64) {
    let (mut lo, mut hi) = (1.5f64, 5.0f64);
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = shooting_neutral_r(x1, bottom, top);
    let mut f2 = shooting_neutral_r(x2, bottom, top);
    for _ in 0..40 {
        if (hi - lo) < 1e-5 {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = shooting_neutral_r(x1, bottom, top);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = shooting_neutral_r(x2, bottom, top);
        }
    }
    let a_c = 0.5 * (lo + hi);
    (shooting_neutral_r(a_c, bottom, top), a_c)
}
