use thiserror::Error;

/// Errors raised by the library.
///
/// The variants are grouped so callers (the CLI in particular) can tell
/// configuration problems apart from failures that happen while running.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("configuration key `{key}`: {message}")]
    ConfigKey { key: String, message: String },

    #[error("invalid evaluation: {0}")]
    InvalidEvaluation(String),

    #[error("archive is empty")]
    EmptyArchive,

    #[error("undefined: {0}")]
    Undefined(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("resolution mismatch: expected {expected:?}, found {found:?}")]
    ResolutionMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("malformed {what}: {message}")]
    Parse { what: &'static str, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub fn key(key: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigKey {
            key: key.into(),
            message: message.into(),
        }
    }

    pub fn parse(what: &'static str, message: impl Into<String>) -> Self {
        Error::Parse {
            what,
            message: message.into(),
        }
    }

    /// True for errors that stem from user-supplied configuration.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::ConfigKey { .. } | Error::ResolutionMismatch { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
