use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unstable Hawkes parameters: spectral radius of A/omega is {0:.6} (must be < 1)")]
    Unstable(f64),

    #[error("spectral radius is zero; the matrix cannot be rescaled")]
    ZeroSpectralRadius,

    #[error("power iteration did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid event log: {0}")]
    InvalidLog(String),

    #[error("stage window is empty: t = {t} must exceed stage start {t_start}")]
    EmptyWindow { t_start: f64, t: f64 },

    #[error("action violates its constraints: {0}")]
    InvalidAction(String),

    #[error("non-finite gradient encountered")]
    NonFiniteGradient,

    #[error("not enough samples: need {needed}, have {available}")]
    InsufficientSamples { needed: usize, available: usize },

    #[error("no legal action available")]
    NoLegalAction,

    #[error("singular design matrix; use a ridge weight > 0")]
    SingularDesign,

    #[error("unknown policy `{name}` (valid: {valid})")]
    UnknownPolicy { name: String, valid: String },

    #[error("{path}:{line}: {reason}")]
    Parse {
        path: PathBuf,
        line: usize,
        reason: String,
    },

    #[error("bad checkpoint: {0}")]
    Checkpoint(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, reason: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            reason: reason.into(),
        }
    }
}
