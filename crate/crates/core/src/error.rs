use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite value {0} cannot be placed on a tape")]
    NonFinite(f64),

    #[error("division by zero")]
    DivisionByZero,

    #[error("logarithm of non-positive value {0}")]
    LogDomain(f64),

    #[error("square root of negative value {0}")]
    SqrtDomain(f64),

    #[error("variable belongs to a different tape")]
    ForeignVar,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("wav: {0}")]
    Wav(String),

    #[error("config: {0}")]
    Config(String),

    #[error("csv line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Short stable identifier for the variant.
    pub fn code(&self) -> &'static str {
        match self {
            Error::NonFinite(_) => "non-finite",
            Error::DivisionByZero => "division-by-zero",
            Error::LogDomain(_) | Error::SqrtDomain(_) => "domain",
            Error::ForeignVar => "foreign-var",
            Error::InvalidParameter { .. } => "invalid-parameter",
            Error::Degenerate(_) => "degenerate",
            Error::Wav(_) => "wav",
            Error::Config(_) => "config",
            Error::Csv { .. } => "csv",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
