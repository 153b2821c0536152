use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A configuration or argument failed validation; `field` names the offender.
    #[error("invalid {field}: {reason}")]
    Invalid { field: String, reason: String },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("expected {expected} samples, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("derivative order {order} exceeds the configured cap {cap}")]
    OrderCap { order: usize, cap: usize },

    #[error("time-derivative power {k} exceeds the configured cap {cap}")]
    PowerCap { k: usize, cap: usize },

    #[error("exponent p = {0} is not an odd integer >= 3")]
    NonPolynomial(f64),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("non-finite value at t = {t} (step {step}); diagnostic written to {}", .path.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<none>".into()))]
    NonFinite {
        t: f64,
        step: u64,
        path: Option<PathBuf>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {reason}")]
    Format { what: String, reason: String },
}

impl Error {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn format(what: impl Into<String>, reason: impl std::fmt::Display) -> Self {
        Error::Format {
            what: what.into(),
            reason: reason.to_string(),
        }
    }

    /// Validation failures map to exit code 1, everything else to 2.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Invalid { .. }
                | Error::NonPolynomial(_)
                | Error::Unsupported(_)
                | Error::PowerCap { .. }
                | Error::OrderCap { .. }
                | Error::Format { .. }
        )
    }
}
