//! Vertical eigenproblem per horizontal wavenumber, neutral Rayleigh numbers
//! and the critical point (R_c, L_c).
//!
//! For a wavenumber a > 0 the profiles (h, theta) satisfy
//!
//! ```text
//!   (D^2 - a^2)^2 h - sqrt(R) a theta = beta (D^2 - a^2) h
//!   -(D^2 - a^2) theta - sqrt(R) a h  = -beta theta
//! ```
//!
//! with theta = 0 at both walls, h = h' = 0 at rigid walls and h = h'' = 0 at
//! free walls. The weak form turns this into the symmetric pencil
//! A z = gamma S z with gamma = -beta and S positive definite (the free-wall
//! condition h'' = 0 is natural), so the spectrum is real by construction and
//! the eigenvectors are S-orthogonal. S is also the vertical Gram matrix of
//! the induced field inner product, which is what makes the assembled 2D
//! eigenvectors mutually orthogonal in H.
//!
//! Rigid and mixed walls use a Legendre-Galerkin basis; free-free is solved
//! in closed form on the sine basis, where the neutral curve is
//! R = (j^2 pi^2 + a^2)^3 / a^2.

use crate::bc::{BcTag, BoundaryCondition, Wall, WallKind};
use crate::error::{Error, Result};
use crate::legendre::RecombinedBasis;
use crate::profile::Profile;
use crate::quad::Gauss01;
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// One vertical eigensolution.
#[derive(Debug, Clone)]
pub struct EigenPair {
    /// Horizontal wavenumber index (0 when the pair was solved for a bare
    /// wavenumber `a`; the basis assembly sets it).
    pub k: usize,
    /// Rank within the spectrum at this wavenumber (1-based, decreasing beta).
    pub j: usize,
    /// Horizontal wavenumber a = 2 pi k / L.
    pub a: f64,
    /// Growth rate beta_kj(R).
    pub beta: f64,
    /// Streamfunction-like vertical profile.
    pub h: Profile,
    /// Temperature vertical profile.
    pub theta: Profile,
    /// H-norm of the 2D eigenvector built from these profiles (1 after the
    /// basis normalizes; sqrt(L/2) directly after a B-unit eigensolve).
    pub norm_h: f64,
}

/// Neutral/critical point data.
#[derive(Debug, Clone)]
pub struct NeutralPoint {
    pub r_c: f64,
    pub l_c: f64,
    pub a_c: f64,
    /// Set when the scan was not unimodal and the global scan minimum was
    /// returned instead of a certified local one.
    pub warning: bool,
}

/// Reusable discretization for a fixed boundary condition: basis tabulated on
/// the quadrature grid and wavenumber-independent Gram matrices.
pub struct VerticalDiscretization {
    bc: BoundaryCondition,
    n: usize,
    basis_h: RecombinedBasis,
    basis_t: RecombinedBasis,
    k0: DMatrix<f64>,
    k1: DMatrix<f64>,
    k2: DMatrix<f64>,
    k0t: DMatrix<f64>,
    k1t: DMatrix<f64>,
    m_ht: DMatrix<f64>,
}

impl VerticalDiscretization {
    pub fn new(bc: BoundaryCondition, resolution: usize) -> Result<Self> {
        if resolution < 32 {
            return Err(Error::InvalidParam(format!(
                "vertical resolution must be at least 32, got {resolution}"
            )));
        }
        let n = resolution;
        let mut conds_h = vec![(0.0, 0), (1.0, 0)];
        if bc.wall(Wall::Bottom) == WallKind::Rigid {
            conds_h.push((0.0, 1));
        }
        if bc.wall(Wall::Top) == WallKind::Rigid {
            conds_h.push((1.0, 1));
        }
        let basis_h = RecombinedBasis::new(n, &conds_h);
        let basis_t = RecombinedBasis::new(n, &[(0.0, 0), (1.0, 0)]);

        // quadrature exact for products of two basis functions and their
        // derivatives (degree <= 2(n + 4))
        let quad = Gauss01::new(n + 8);
        let th = basis_h.tabulate(&quad.nodes, 2);
        let tt = basis_t.tabulate(&quad.nodes, 1);
        let gram = |fa: &[Vec<f64>], fb: &[Vec<f64>]| -> DMatrix<f64> {
            let mut m = DMatrix::zeros(fa.len(), fb.len());
            for (i, va) in fa.iter().enumerate() {
                for (j, vb) in fb.iter().enumerate() {
                    let mut s = 0.0;
                    for q in 0..quad.len() {
                        s += va[q] * vb[q] * quad.weights[q];
                    }
                    m[(i, j)] = s;
                }
            }
            m
        };
        Ok(VerticalDiscretization {
            bc,
            n,
            k0: gram(&th[0], &th[0]),
            k1: gram(&th[1], &th[1]),
            k2: gram(&th[2], &th[2]),
            k0t: gram(&tt[0], &tt[0]),
            k1t: gram(&tt[1], &tt[1]),
            m_ht: gram(&th[0], &tt[0]),
            basis_h,
            basis_t,
        })
    }

    pub fn bc(&self) -> BoundaryCondition {
        self.bc
    }

    /// Leading `n_pairs` eigenpairs at wavenumber a > 0 and Rayleigh number r.
    /// Profiles are normalized to a unit B-product
    /// (int h'^2 + a^2 h^2 + theta^2 = 1) with norm_h left at sqrt(L/2)-free
    /// 1.0 scale; signs follow the theta(1/2) convention.
    pub fn solve(&self, a: f64, r: f64, n_pairs: usize) -> Result<Vec<EigenPair>> {
        if !(a > 0.0) {
            return Err(Error::InvalidParam(format!(
                "wavenumber must be positive for the coupled solve, got {a}"
            )));
        }
        if !(r > 0.0) {
            return Err(Error::InvalidParam(format!("Rayleigh number must be positive, got {r}")));
        }
        let n = self.n;
        let sr = r.sqrt();
        let a2 = a * a;

        let mut amat = DMatrix::zeros(2 * n, 2 * n);
        let mut smat = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                amat[(i, j)] =
                    self.k2[(i, j)] + 2.0 * a2 * self.k1[(i, j)] + a2 * a2 * self.k0[(i, j)];
                amat[(i, n + j)] = -sr * a * self.m_ht[(i, j)];
                amat[(n + i, j)] = -sr * a * self.m_ht[(j, i)];
                amat[(n + i, n + j)] = self.k1t[(i, j)] + a2 * self.k0t[(i, j)];
                smat[(i, j)] = self.k1[(i, j)] + a2 * self.k0[(i, j)];
                smat[(n + i, n + j)] = self.k0t[(i, j)];
            }
        }
        let chol = nalgebra::Cholesky::new(smat).ok_or_else(|| {
            Error::Discretization(
                "vertical Gram matrix is not positive definite (raise the resolution)".into(),
            )
        })?;
        let l = chol.l();
        // C = L^-1 A L^-T, symmetric
        let m1 = l
            .solve_lower_triangular(&amat)
            .ok_or_else(|| Error::Discretization("singular Cholesky factor".into()))?;
        let mut c = l
            .solve_lower_triangular(&m1.transpose())
            .ok_or_else(|| Error::Discretization("singular Cholesky factor".into()))?;
        // symmetrize roundoff
        for i in 0..2 * n {
            for j in 0..i {
                let v = 0.5 * (c[(i, j)] + c[(j, i)]);
                c[(i, j)] = v;
                c[(j, i)] = v;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(c);
        let mut order: Vec<usize> = (0..2 * n).collect();
        // beta = -gamma, leading = smallest gamma
        order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());

        let lt = l.transpose();
        let take = n_pairs.min(2 * n);
        let mut pairs = Vec::with_capacity(take);
        for (rank, &idx) in order.iter().take(take).enumerate() {
            let y = eig.eigenvectors.column(idx).clone_owned();
            let z = lt
                .solve_upper_triangular(&y)
                .ok_or_else(|| Error::Discretization("singular Cholesky factor".into()))?;
            let beta = -eig.eigenvalues[idx];
            if !beta.is_finite() {
                return Err(Error::Discretization(format!(
                    "non-finite eigenvalue at a = {a}, R = {r}"
                )));
            }
            let h_modal: Vec<f64> = z.rows(0, n).iter().copied().collect();
            let t_modal: Vec<f64> = z.rows(n, n).iter().copied().collect();
            let mut h = Profile::Poly(self.basis_h.to_series(&h_modal));
            let mut theta = Profile::Poly(self.basis_t.to_series(&t_modal));
            let sign = sign_convention(&theta, &h);
            if sign < 0.0 {
                h = h.scaled(-1.0);
                theta = theta.scaled(-1.0);
            }
            pairs.push(EigenPair {
                k: 0,
                j: rank + 1,
                a,
                beta,
                h,
                theta,
                norm_h: 1.0,
            });
        }
        Ok(pairs)
    }
}

/// Sign convention: theta(1/2) > 0, falling back to the first vertical
/// sample whose magnitude is significant; shear-like pairs (theta = 0) use
/// the h-derivative instead. Returns +1 or -1 to multiply the profiles by.
fn sign_convention(theta: &Profile, h: &Profile) -> f64 {
    let probe = |p: &Profile, d: usize| -> f64 {
        let mid = p.eval(0.5, d);
        let mut maxabs = mid.abs();
        let mut first = if mid.abs() > 0.0 { mid } else { 0.0 };
        let mut samples = Vec::with_capacity(33);
        for i in 1..32 {
            let x = i as f64 / 32.0;
            let v = p.eval(x, d);
            samples.push(v);
            maxabs = maxabs.max(v.abs());
        }
        if maxabs == 0.0 {
            return 0.0;
        }
        if mid.abs() > 1e-8 * maxabs {
            return mid;
        }
        for v in samples {
            if v.abs() > 1e-6 * maxabs {
                first = v;
                break;
            }
        }
        first
    };
    let mut v = probe(theta, 0);
    if v == 0.0 {
        v = probe(h, 1);
    }
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Closed-form free-free spectrum at wavenumber a > 0: for each vertical
/// index m the pair of branches beta = -mu_m +/- sqrt(R a^2 / mu_m) with
/// mu_m = m^2 pi^2 + a^2 and profiles proportional to sin(m pi x2).
fn free_free_solve(a: f64, r: f64, n_pairs: usize) -> Vec<EigenPair> {
    // enough candidates that the requested count survives sorting
    let m_max = n_pairs + 4;
    let mut all: Vec<(f64, usize, f64)> = Vec::new(); // (beta, m, theta_sign)
    for m in 1..=m_max {
        let mu = (m as f64 * PI).powi(2) + a * a;
        let s = (r * a * a / mu).sqrt();
        all.push((-mu + s, m, 1.0));
        all.push((-mu - s, m, -1.0));
    }
    all.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    all.truncate(n_pairs);
    all.into_iter()
        .enumerate()
        .map(|(rank, (beta, m, sgn))| {
            let mu = (m as f64 * PI).powi(2) + a * a;
            // B-unit: h = sin(m pi x)/sqrt(mu), theta = +/- sin(m pi x)
            let mut h = Profile::sine(m, 1.0 / mu.sqrt());
            let mut theta = Profile::sine(m, sgn);
            // theta(1/2) convention
            if sign_convention(&theta, &h) < 0.0 {
                h = h.scaled(-1.0);
                theta = theta.scaled(-1.0);
            }
            EigenPair {
                k: 0,
                j: rank + 1,
                a,
                beta,
                h,
                theta,
                norm_h: 1.0,
            }
        })
        .collect()
}

/// Temperature modes at k = 0: psi_0j = (0, 0, sin(j pi x2)),
/// beta = -j^2 pi^2, for every wall type. Profiles are B-unit
/// (int theta^2 = 1).
pub fn k0_temperature_modes(j_max: usize) -> Vec<EigenPair> {
    (1..=j_max)
        .map(|j| EigenPair {
            k: 0,
            j,
            a: 0.0,
            beta: -((j as f64) * PI).powi(2),
            h: Profile::Zero,
            theta: Profile::sine(j, std::f64::consts::SQRT_2),
            norm_h: 1.0,
        })
        .collect()
}

/// One k = 0 shear mode: velocity (s(x2), 0), no temperature.
#[derive(Debug, Clone)]
pub struct ShearMode {
    pub j: usize,
    pub beta: f64,
    /// Horizontal velocity profile s(x2), B-unit (int s^2 = 1).
    pub s: Profile,
    /// int_0^1 s dx2; nonzero entries carry net horizontal momentum.
    pub mean: f64,
}

/// Shear modes at k = 0 for the given walls. The first free-free mode is the
/// constant (the neutral harmonic field), which spaces with the zero-mean
/// constraint project away.
pub fn k0_shear_modes(bc: BoundaryCondition, j_max: usize) -> Vec<ShearMode> {
    let sq2 = std::f64::consts::SQRT_2;
    (1..=j_max)
        .map(|j| match bc.tag {
            BcTag::RigidRigid => {
                let m = j as f64;
                ShearMode {
                    j,
                    beta: -(m * PI).powi(2),
                    s: Profile::sine(j, sq2),
                    mean: sq2 * (1.0 - (m * PI).cos()) / (m * PI),
                }
            }
            BcTag::FreeFree => {
                if j == 1 {
                    ShearMode {
                        j,
                        beta: 0.0,
                        s: Profile::cosine(0, 1.0),
                        mean: 1.0,
                    }
                } else {
                    let m = (j - 1) as f64;
                    ShearMode {
                        j,
                        beta: -(m * PI).powi(2),
                        s: Profile::cosine(j - 1, sq2),
                        mean: 0.0,
                    }
                }
            }
            BcTag::FreeRigid => {
                // rigid bottom (s = 0), free top (s' = 0)
                let om = (j as f64 - 0.5) * PI;
                ShearMode {
                    j,
                    beta: -om * om,
                    s: Profile::Harmonics(vec![crate::profile::Harmonic {
                        omega: om,
                        sin_amp: sq2,
                        cos_amp: 0.0,
                    }]),
                    mean: sq2 / om,
                }
            }
        })
        .collect()
}

/// Leading eigenpairs of the vertical problem. For a > 0 this is the coupled
/// (h, theta) problem; a = 0 returns the temperature family of the decoupled
/// limit (shear modes live in `k0_shear_modes`).
pub fn vertical_eigensolve(
    a: f64,
    r: f64,
    bc: BoundaryCondition,
    resolution: usize,
) -> Result<Vec<EigenPair>> {
    if a < 0.0 {
        return Err(Error::InvalidParam(format!("wavenumber must be nonnegative, got {a}")));
    }
    if a == 0.0 {
        return Ok(k0_temperature_modes(resolution.min(64)));
    }
    if bc.tag == BcTag::FreeFree {
        return Ok(free_free_solve(a, r, resolution / 2));
    }
    let disc = VerticalDiscretization::new(bc, resolution)?;
    disc.solve(a, r, resolution / 2)
}

/// Largest growth rate at wavenumber a.
fn beta1_at(disc: Option<&VerticalDiscretization>, bc: BoundaryCondition, a: f64, r: f64) -> Result<f64> {
    if bc.tag == BcTag::FreeFree {
        let mu1 = PI * PI + a * a;
        // leading branch over m is m = 1 for the wavenumbers of interest,
        // but take the max over a few m to be safe
        let mut best = f64::NEG_INFINITY;
        for m in 1..=4 {
            let mu = (m as f64 * PI).powi(2) + a * a;
            best = best.max(-mu + (r * a * a / mu).sqrt());
        }
        let _ = mu1;
        return Ok(best);
    }
    let pairs = disc
        .expect("discretization required for non-free-free walls")
        .solve(a, r, 1)?;
    Ok(pairs[0].beta)
}

/// The unique R with beta_1(R) = 0 at wavenumber a (beta_1 is increasing in
/// R near the zero). Free-free is closed form: R = (pi^2 + a^2)^3 / a^2.
pub fn neutral_rayleigh(a: f64, bc: BoundaryCondition) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::InvalidParam(format!("wavenumber must be positive, got {a}")));
    }
    if bc.tag == BcTag::FreeFree {
        let mu = PI * PI + a * a;
        return Ok(mu.powi(3) / (a * a));
    }
    let disc = VerticalDiscretization::new(bc, default_resolution())?;
    neutral_rayleigh_with(&disc, a)
}

fn default_resolution() -> usize {
    48
}

fn neutral_rayleigh_with(disc: &VerticalDiscretization, a: f64) -> Result<f64> {
    let bc = disc.bc();
    // bracket around the free-free value, which is a lower bound in practice
    let guess = (PI * PI + a * a).powi(3) / (a * a);
    let mut lo = 0.5 * guess;
    let mut hi = 4.0 * guess;
    let mut flo = beta1_at(Some(disc), bc, a, lo)?;
    let mut fhi = beta1_at(Some(disc), bc, a, hi)?;
    let mut expand = 0;
    while flo > 0.0 {
        lo *= 0.5;
        flo = beta1_at(Some(disc), bc, a, lo)?;
        expand += 1;
        if expand > 40 {
            return Err(Error::BracketFailure {
                what: format!("beta_1(R) at a = {a}"),
                lo,
                hi,
            });
        }
    }
    while fhi < 0.0 {
        hi *= 2.0;
        fhi = beta1_at(Some(disc), bc, a, hi)?;
        expand += 1;
        if expand > 60 {
            return Err(Error::BracketFailure {
                what: format!("beta_1(R) at a = {a}"),
                lo,
                hi,
            });
        }
    }
    // Illinois regula falsi on the smooth, monotone beta_1(R)
    let mut side = 0i8;
    for _ in 0..200 {
        let mid = (lo * fhi - hi * flo) / (fhi - flo);
        if !(mid.is_finite() && mid > 0.0) {
            break;
        }
        let fmid = beta1_at(Some(disc), bc, a, mid)?;
        if fmid.abs() < 1e-13 * (1.0 + mid) || (hi - lo) < 1e-8 * mid {
            return Ok(mid);
        }
        if fmid < 0.0 {
            lo = mid;
            flo = fmid;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = mid;
            fhi = fmid;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
        if (hi - lo) < 1e-9 * hi {
            return Ok(0.5 * (lo + hi));
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Neutral Rayleigh number of a channel of period L: minimum over the
/// harmonics k >= 1 that fit the period.
pub fn neutral_rayleigh_period(l: f64, bc: BoundaryCondition, disc: Option<&VerticalDiscretization>) -> Result<f64> {
    if !(l > 0.0) {
        return Err(Error::InvalidParam(format!("period must be positive, got {l}")));
    }
    let mut best = f64::INFINITY;
    for k in 1..=4usize {
        let a = 2.0 * PI * k as f64 / l;
        if a > 12.0 {
            break;
        }
        let r = match (bc.tag, disc) {
            (BcTag::FreeFree, _) => {
                let mu = PI * PI + a * a;
                mu.powi(3) / (a * a)
            }
            (_, Some(d)) => neutral_rayleigh_with(d, a)?,
            (_, None) => neutral_rayleigh(a, bc)?,
        };
        best = best.min(r);
    }
    Ok(best)
}

/// Critical point: minimize the k = 1 neutral curve R_1(L) over L by a
/// coarse scan refined with golden-section search. The k = 1 branch at
/// period L equals the k = m branch at period mL, so its minimum is the
/// minimal critical period.
pub fn critical_rayleigh(bc: BoundaryCondition) -> Result<NeutralPoint> {
    let disc = if bc.tag == BcTag::FreeFree {
        None
    } else {
        Some(VerticalDiscretization::new(bc, default_resolution())?)
    };
    let fundamental = |l: f64| -> Result<f64> {
        let a = 2.0 * PI / l;
        match (bc.tag, disc.as_ref()) {
            (BcTag::FreeFree, _) => {
                let mu = PI * PI + a * a;
                Ok(mu.powi(3) / (a * a))
            }
            (_, Some(d)) => neutral_rayleigh_with(d, a),
            (_, None) => unreachable!(),
        }
    };
    let (l_lo, l_hi, n_scan) = (0.5, 10.0, 64);
    let ls: Vec<f64> = (0..n_scan)
        .map(|i| l_lo + (l_hi - l_lo) * i as f64 / (n_scan - 1) as f64)
        .collect();
    // scan points are independent eigensolves; run them in a work pool
    let rs: Vec<f64> = {
        use rayon::prelude::*;
        ls.par_iter()
            .map(|&l| fundamental(l))
            .collect::<Result<Vec<f64>>>()?
    };
    let mut imin = 0;
    for i in 1..n_scan {
        if rs[i] < rs[imin] {
            imin = i;
        }
    }
    // unimodality on the scan grid: a single interior minimum
    let mut sign_changes = 0;
    for i in 1..n_scan - 1 {
        if (rs[i] < rs[i - 1]) != (rs[i + 1] < rs[i]) {
            sign_changes += 1;
        }
    }
    let warning = sign_changes > 1 || imin == 0 || imin == n_scan - 1;

    let (mut lo, mut hi) = if imin == 0 {
        (ls[0], ls[1])
    } else if imin == n_scan - 1 {
        (ls[n_scan - 2], ls[n_scan - 1])
    } else {
        (ls[imin - 1], ls[imin + 1])
    };
    // golden-section refinement down to a width safely above the rounding
    // noise of the neutral curve, then one parabolic vertex step (golden
    // section alone cannot localize a flat minimum better than sqrt(eps))
    let phi = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = fundamental(x1)?;
    let mut f2 = fundamental(x2)?;
    for _ in 0..60 {
        if (hi - lo).abs() < 1e-6 * hi {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = fundamental(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = fundamental(x2)?;
        }
    }
    let mut l_c = 0.5 * (lo + hi);
    for scale in [1e-4, 1e-5, 1e-6] {
        let h = scale * l_c;
        let (fm, f0, fp) = (
            fundamental(l_c - h)?,
            fundamental(l_c)?,
            fundamental(l_c + h)?,
        );
        let curv = fp - 2.0 * f0 + fm;
        if curv <= 0.0 {
            break;
        }
        let step = 0.5 * h * (fm - fp) / curv;
        if step.abs() < 2.0 * h {
            l_c += step;
        }
    }
    let r_c = fundamental(l_c)?;
    Ok(NeutralPoint {
        r_c,
        l_c,
        a_c: 2.0 * PI / l_c,
        warning,
    })
}

/// Cached critical points (the three wall types are the whole domain).
pub fn critical_point(bc: BoundaryCondition) -> Result<NeutralPoint> {
    use std::sync::OnceLock;
    static RR: OnceLock<NeutralPoint> = OnceLock::new();
    static FR: OnceLock<NeutralPoint> = OnceLock::new();
    static FF: OnceLock<NeutralPoint> = OnceLock::new();
    let cell = match bc.tag {
        BcTag::RigidRigid => &RR,
        BcTag::FreeRigid => &FR,
        BcTag::FreeFree => &FF,
    };
    if let Some(p) = cell.get() {
        return Ok(p.clone());
    }
    let p = critical_rayleigh(bc)?;
    let _ = cell.set(p.clone());
    Ok(p)
}

/// beta_11(R) at the critical period L_c(bc): negative below R_c, zero at
/// R_c, positive above.
pub fn growth_rate_beta1(r: f64, bc: BoundaryCondition) -> Result<f64> {
    let cp = critical_point(bc)?;
    if bc.tag == BcTag::FreeFree {
        let a = cp.a_c;
        let mu = PI * PI + a * a;
        return Ok(-mu + (r * a * a / mu).sqrt());
    }
    let disc = VerticalDiscretization::new(bc, default_resolution())?;
    beta1_at(Some(&disc), bc, cp.a_c, r)
}
