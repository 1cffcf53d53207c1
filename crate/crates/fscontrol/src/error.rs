use std::path::PathBuf;

use crate::constrained_dual::DualSolution;

/// Errors raised by the numerical pipeline and its configuration front end.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("unsupported spatial dimension {0} (only 1 and 2 are supported)")]
    UnsupportedDimension(usize),

    #[error("mode index {index} out of range for a basis of {len} modes")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("truncated generator is not strictly stable (max eigenvalue real part {max_real:e})")]
    SpectralInstability { max_real: f64 },

    #[error("Lyapunov equation is singular")]
    SingularLyapunov,

    #[error("regularized Gram inverse is ill-conditioned (smallest shifted eigenvalue {min_eig:e})")]
    IllConditioned { min_eig: f64 },

    #[error("time {tau} lies outside the horizon [0, {t_final}]")]
    TimeOutOfRange { tau: f64, t_final: f64 },

    #[error("dual solver stopped after {} iterations with projected-gradient norm {:e}", .0.iterations, .0.kkt_residual)]
    NotConverged(Box<DualSolution>),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid value for `{key}`: {message}")]
    Validation { key: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn validation(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Name of the configuration key a validation error refers to.
    pub fn key(&self) -> Option<&str> {
        match self {
            Error::Validation { key, .. } => Some(key),
            Error::Stage { source, .. } => source.key(),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
