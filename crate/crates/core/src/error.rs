use thiserror::Error;

/// Errors raised by kernels, samplers and estimators.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("model does not exist: {0}")]
    NonExistent(String),

    #[error("pair correlation undefined where the kernel diagonal vanishes")]
    UndefinedPairCorrelation,

    #[error("kernel matrix is numerically singular (condition estimate {condition:e})")]
    IllConditioned { condition: f64 },

    #[error("rejection sampler stalled after {proposals} proposals with {remaining} points left")]
    Stalled { proposals: u64, remaining: usize },

    #[error("degenerate point: residual norm {norm:e} below threshold")]
    DegeneratePoint { norm: f64 },

    #[error("numerical integrity violated: conditional density {value:e} is negative beyond tolerance")]
    NumericalIntegrity { value: f64 },

    #[error("eigenvalue {value} at index {index} is outside [0, 1]")]
    InvalidSpectrum { index: usize, value: f64 },

    #[error("invalid conditioning set: {0}")]
    InvalidConditioning(String),

    #[error("spectrum cannot produce {m} points after {redraws} redraws")]
    InfeasibleSpectrum { m: usize, redraws: usize },

    #[error("truncation captured trace {trace} below required {required}")]
    InsufficientTruncation { trace: f64, required: f64 },

    #[error("eigensolver failed: {0}")]
    Eigensolver(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("dominating bound {bound} violated: observed {observed}")]
    InvalidBound { bound: f64, observed: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub(crate) fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(msg()))
    }
}
