//! Vertical profile functions on [0,1].
//!
//! Rigid and mixed boundary conditions produce polynomial eigenprofiles
//! (Legendre series); the free-free problem is closed-form trigonometric,
//! and the free-rigid shear family needs half-integer frequencies, so the
//! trigonometric variant carries explicit frequencies.

use crate::legendre::LegendreSeries;
use std::f64::consts::PI;

/// One frequency of a trigonometric profile:
/// sin_amp * sin(omega x) + cos_amp * cos(omega x).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Harmonic {
    pub omega: f64,
    pub sin_amp: f64,
    pub cos_amp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    /// Identically zero.
    Zero,
    /// Legendre series on [0,1].
    Poly(LegendreSeries),
    /// Sum of harmonics with explicit frequencies.
    Harmonics(Vec<Harmonic>),
}

impl Profile {
    /// amp * sin(m pi x).
    pub fn sine(m: usize, amp: f64) -> Self {
        Profile::Harmonics(vec![Harmonic {
            omega: m as f64 * PI,
            sin_amp: amp,
            cos_amp: 0.0,
        }])
    }

    /// amp * cos(m pi x); m = 0 gives the constant.
    pub fn cosine(m: usize, amp: f64) -> Self {
        Profile::Harmonics(vec![Harmonic {
            omega: m as f64 * PI,
            sin_amp: 0.0,
            cos_amp: amp,
        }])
    }

    /// d-th derivative at x, d <= 3.
    pub fn eval(&self, x: f64, d: usize) -> f64 {
        match self {
            Profile::Zero => 0.0,
            Profile::Poly(series) => series.eval(x, d),
            Profile::Harmonics(terms) => terms
                .iter()
                .map(|t| {
                    if t.omega == 0.0 {
                        return if d == 0 { t.cos_amp } else { 0.0 };
                    }
                    let scale = t.omega.powi(d as i32);
                    let arg = t.omega * x;
                    scale * (t.sin_amp * sin_deriv(arg, d) + t.cos_amp * cos_deriv(arg, d))
                })
                .sum(),
        }
    }

    /// Values on a grid.
    pub fn sample(&self, xs: &[f64], d: usize) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(x, d)).collect()
    }

    pub fn scaled(&self, s: f64) -> Profile {
        match self {
            Profile::Zero => Profile::Zero,
            Profile::Poly(series) => {
                Profile::Poly(LegendreSeries(series.0.iter().map(|c| c * s).collect()))
            }
            Profile::Harmonics(terms) => Profile::Harmonics(
                terms
                    .iter()
                    .map(|t| Harmonic {
                        omega: t.omega,
                        sin_amp: t.sin_amp * s,
                        cos_amp: t.cos_amp * s,
                    })
                    .collect(),
            ),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Profile::Zero)
    }
}

fn sin_deriv(arg: f64, d: usize) -> f64 {
    match d % 4 {
        0 => arg.sin(),
        1 => arg.cos(),
        2 => -arg.sin(),
        _ => -arg.cos(),
    }
}

fn cos_deriv(arg: f64, d: usize) -> f64 {
    match d % 4 {
        0 => arg.cos(),
        1 => -arg.sin(),
        2 => -arg.cos(),
        _ => arg.sin(),
    }
}
