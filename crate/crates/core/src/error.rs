use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SrlwError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate exponential family: frequencies {0} and {1} collide")]
    DegenerateFamily(f64, f64),

    #[error("Gram matrix ill-conditioned (estimated condition number {cond:e})")]
    IllConditioned { cond: f64 },

    #[error("bump profile has zero mean; the moment problem cannot be solved")]
    ZeroMeanBump,

    #[error("mean of v is dynamically invariant: initial {initial:e}, target {target:e}")]
    MeanMismatch { initial: f64, target: f64 },

    #[error("fixed-point iteration did not converge after {iterations} iterations (last increment {increment:e})")]
    NonConvergence { iterations: usize, increment: f64 },

    #[error("convolution magnitude {0:e} exceeds the configured bound")]
    Overflow(f64),

    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, SrlwError>;

impl SrlwError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        SrlwError::InvalidArgument(msg.into())
    }
}
