use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("alpha must be in the open interval (0, 1), got {0}")]
    InvalidAlpha(f64),

    #[error("quantile level {alpha} is not stored in this series (available: {available:?})")]
    QuantileUnavailable { alpha: f64, available: Vec<f64> },

    #[error("time grids do not match: {0}")]
    GridMismatch(String),

    #[error("representation mismatch: {0}")]
    RepresentationMismatch(String),

    #[error("unit mismatch: expected {expected}, got {actual}")]
    UnitMismatch {
        expected: &'static str,
        actual: &'static str,
    },

    #[error("utilization {0} is outside [0, 1]")]
    InvalidUtilization(f64),

    #[error("invalid power model: {0}")]
    InvalidPowerModel(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("invariant violated at step {step} (row {row}): {message}")]
    InvariantViolation {
        step: usize,
        row: usize,
        message: String,
    },

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("invalid site profile: {0}")]
    InvalidProfile(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by user-supplied settings rather than by input data.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidAlpha(_)
                | Error::QuantileUnavailable { .. }
                | Error::InvalidUtilization(_)
                | Error::InvalidPowerModel(_)
                | Error::InvalidProfile(_)
                | Error::Config(_)
        )
    }
}
