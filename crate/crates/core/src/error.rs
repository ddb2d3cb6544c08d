//! Error type shared across the crate.

use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum CoreError {
    /// Two objects that must agree in shape or dimensionality do not.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A parameter or configuration value is outside its admissible range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Cholesky factorisation hit a non-positive pivot.
    #[error("matrix not positive definite: pivot {pivot} is {value:.6e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    /// An operation needs more data than it was given.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A log density evaluated to a non-finite value; carries the offending
    /// parameter snapshot for debugging.
    #[error("non-finite log density at {params:?}")]
    NonFiniteDensity { params: Vec<(String, f64)> },

    /// File-system level failure.
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// A file exists but its contents do not parse.
    #[error("parse error in {path} at {position}: {message}")]
    Parse {
        path: String,
        position: String,
        message: String,
    },
}

impl CoreError {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CoreError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(
        path: impl Into<String>,
        position: impl Into<String>,
        message: impl Into<String>,
    ) -> Self {
        CoreError::Parse {
            path: path.into(),
            position: position.into(),
            message: message.into(),
        }
    }
}
