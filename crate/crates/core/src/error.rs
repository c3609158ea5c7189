//! Error type shared across the solver modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Two fields (or a field and an operator) do not share the same
    /// discretization: period, truncation, boundary condition or Rayleigh
    /// number of the underlying basis.
    #[error("mismatched discretizations: {0}")]
    BasisMismatch(String),

    /// Gridded input does not match across the x1 periodicity seam.
    #[error("non-periodic input: seam mismatch {mismatch:.3e} exceeds tolerance {tol:.3e}")]
    NonPeriodic { mismatch: f64, tol: f64 },

    /// The vertical eigensolve failed to produce a usable spectrum.
    #[error("discretization failure: {0}")]
    Discretization(String),

    /// Root bracketing failed while searching for a neutral Rayleigh number.
    #[error("no sign change of {what} in bracket [{lo:.6e}, {hi:.6e}]")]
    BracketFailure { what: String, lo: f64, hi: f64 },

    /// A mode required to be stable has a nonnegative eigenvalue, so the
    /// center-stable splitting behind the reduction does not hold.
    #[error("center-stable splitting violated: beta_({k},{j}) = {beta:.6e} >= 0")]
    SplittingViolated { k: usize, j: usize, beta: f64 },

    /// Landau coefficient is not positive; the supercritical normal form
    /// does not apply.
    #[error("subcritical regime: alpha = {0:.6e} <= 0")]
    NonPositiveAlpha(f64),

    /// Time integration produced NaN or infinity.
    #[error("non-finite state at t = {t:.6e}: {context}")]
    NonFinite { t: f64, context: String },

    /// A rate fit was refused (sign change or degenerate window).
    #[error("fit refused: {0}")]
    FitRefused(String),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("snapshot format: {0}")]
    SnapshotFormat(String),
}

pub type Result<T> = std::result::Result<T, Error>;
