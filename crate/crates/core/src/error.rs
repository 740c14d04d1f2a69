use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("coupling matrix is not symmetric (max asymmetry {asymmetry:.3e}, allowed {allowed:.3e})")]
    NotSymmetric { asymmetry: f64, allowed: f64 },

    #[error("coupling matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("distinguished index {index} out of range 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("drift matrix is not Hurwitz (spectral abscissa {abscissa:.3e}, required <= {threshold:.3e})")]
    NotHurwitz { abscissa: f64, threshold: f64 },

    #[error("operation requires {0}")]
    ModeMismatch(String),

    #[error("matrix exponential overflow (norm of tA = {0:.3e})")]
    ExpmOverflow(f64),

    #[error("time step {dt} too large: dt * spectral radius = {product:.3e} (must be < {limit})")]
    StepTooLarge { dt: f64, product: f64, limit: f64 },

    #[error("trajectory {trajectory} diverged at step {step} (state norm {norm:.3e})")]
    Diverged { trajectory: usize, step: usize, norm: f64 },

    #[error("singular linear system in {0}")]
    Singular(&'static str),

    #[error("{path}: line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
