use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("expected {expected} actions, got {actual}")]
    ActionCount { expected: usize, actual: usize },

    #[error("observation width {actual} does not match network input width {expected}")]
    WidthMismatch { expected: usize, actual: usize },

    #[error("non-finite loss in PPO update (epoch {epoch}, minibatch {minibatch}):\n{dump}")]
    NonFiniteLoss {
        epoch: usize,
        minibatch: usize,
        dump: String,
    },

    #[error("trace config does not match its fingerprint (tampered trace?)\n{diff}")]
    TamperedTrace { diff: String },

    #[error("config fingerprint mismatch, refusing to replay:\n{diff}")]
    FingerprintMismatch { diff: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed {what}: {message}")]
    Format { what: &'static str, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
