use thiserror::Error;

/// Errors raised by estimators, transforms and the experiment harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("{regime} regime needs at least {required} users ({groups} groups x {min_per_group}), got {available}")]
    InsufficientUsers {
        regime: String,
        groups: usize,
        min_per_group: usize,
        required: usize,
        available: usize,
    },

    #[error("kashin frame for d={d} certified K={k_cert:.4}, above the limit {k_max}")]
    Certification { d: usize, k_cert: f64, k_max: f64 },

    #[error("loss oracle violates {assumption}: {detail}")]
    Oracle {
        assumption: &'static str,
        detail: String,
    },

    #[error("invalid experiment spec: {0}")]
    Spec(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Spec(e.to_string())
    }
}
