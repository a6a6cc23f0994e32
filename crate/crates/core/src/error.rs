use thiserror::Error;

use crate::spectral::PeriodicField;

/// Errors produced by the solvers and transforms in this crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("spinor pair is not conjugate: |conj(psi+) - psi-| = {defect:e}")]
    NonConjugatePair { defect: f64 },

    #[error("eigenvalue iteration did not converge (residual {residual:e})")]
    ConvergenceFailure { residual: f64 },

    #[error("spectrum has no purely imaginary pair")]
    NoEllipticPair,

    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("state left the finite region at t = {time}")]
    NonFiniteState { time: f64 },

    #[error("trajectory is empty")]
    EmptyTrajectory,

    #[error("truncation mismatch: expected {expected} modes, found {found}")]
    TruncationMismatch { expected: usize, found: usize },

    #[error("reduction solve stalled after {iterations} iterations (residual {residual:e})")]
    SolverStall { iterations: usize, residual: f64 },

    #[error("ground state did not converge: gradient norm {gradient_norm:e}")]
    NonConvergence {
        gradient_norm: f64,
        best: Box<PeriodicField>,
    },

    #[error("shooting converged to an equilibrium (distance {distance:e})")]
    ConvergedToEquilibrium { distance: f64 },

    #[error("requested grid point {value} lies outside the source grid [{lo}, {hi}]")]
    GridCoverage { value: f64, lo: f64, hi: f64 },

    #[error("profile is degenerate: spinor density vanishes identically")]
    DegenerateProfile,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by the caller's data rather than by a solver.
    pub fn is_invalid_input(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::GridCoverage { .. }
                | Error::TruncationMismatch { .. }
                | Error::NonConjugatePair { .. }
                | Error::DegenerateProfile
                | Error::Io(_)
                | Error::Json(_)
                | Error::Csv(_)
        )
    }
}
