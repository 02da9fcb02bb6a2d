use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time {t} s is outside the trajectory domain [{start}, {end}] s")]
    OutOfRange { t: f64, start: f64, end: f64 },

    #[error("degenerate tangent at t = {t} s: trajectory is stationary and has no usable heading")]
    DegenerateTangent { t: f64 },

    #[error("duplicate points at index {index}: curvature is undefined")]
    DuplicatePoints { index: usize },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("time domains do not overlap: target [{target_start}, {target_end}] s, tracked [{tracked_start}, {tracked_end}] s")]
    NoOverlap {
        target_start: f64,
        target_end: f64,
        tracked_start: f64,
        tracked_end: f64,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("alignment construction failed: {0}")]
    Alignment(String),

    #[error("infeasible speed profile: {0}")]
    InfeasibleProfile(String),

    #[error("Riccati iteration did not converge after {iterations} iterations (last residuals: {residuals:?})")]
    DareNoConvergence {
        iterations: usize,
        residuals: Vec<f64>,
    },

    #[error("controller diverged at t = {t:.3} s: {reason}")]
    Divergence { t: f64, reason: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("missing inputs in {dir}: {}", .missing.join(", "))]
    MissingInputs { dir: PathBuf, missing: Vec<String> },
}

/// Coarse grouping used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Config,
    Input,
    Divergence,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config { .. } | Error::Alignment(_) | Error::InfeasibleProfile(_) | Error::DareNoConvergence { .. } => {
                ErrorKind::Config
            }
            Error::Divergence { .. } => ErrorKind::Divergence,
            _ => ErrorKind::Input,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            message: message.into(),
        }
    }
}
