use thiserror::Error;

/// Errors raised by the numerical kernels, solvers and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian (max asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("SINR targets ({gamma0:.6e}, {gamma1:.6e}) are not achievable for this channel")]
    Infeasible { gamma0: f64, gamma1: f64 },

    #[error("solver did not converge after {iterations} iterations (residual {residual:.3e})")]
    DidNotConverge { iterations: usize, residual: f64 },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("waterfilling needs at least one positive eigenvalue")]
    NoPositiveEigenvalue,

    #[error("multiplexing gain {r} outside [0, {max}]")]
    InvalidMultiplexingGain { r: f64, max: f64 },

    #[error("only {usable} SNR points have enough outage events (need 2)")]
    InsufficientEvents { usable: usize },

    #[error("result validation failed: {0}")]
    Validation(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
