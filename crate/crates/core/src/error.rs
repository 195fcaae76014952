use thiserror::Error;

/// Errors raised by the analytic and simulation engines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("quadrature did not converge: estimated error {estimate:e} exceeds tolerance {tol:e}")]
    QuadratureDivergence { estimate: f64, tol: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate gradient: df/dz_d vanishes at the evaluation point")]
    DegenerateGradient,

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("no asymptotic formula for this regime: {0}")]
    RegimeUnknown(String),

    #[error(
        "small-jump cutoff too coarse: discarded variance is {fraction:.3} of total jump variance"
    )]
    CutoffTooCoarse { fraction: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(
        "insufficient signal: {zero_like} of {total} estimates are within 2 std errors of zero"
    )]
    InsufficientSignal { zero_like: usize, total: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
