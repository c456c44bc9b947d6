//! Error type shared by the whole pipeline.

use thiserror::Error;

/// Errors raised by parsing, training and pipeline stages.
///
/// `Usage` marks bad invocations (flags, thresholds, configs) and `Data`
/// marks malformed or inconsistent input files. The CLI maps them to exit
/// codes 1 and 2 respectively.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }

    /// Prefixes the message with a stage name, keeping the variant.
    pub fn in_stage(self, stage: &str) -> Self {
        match self {
            Error::Usage(m) => Error::Usage(format!("stage {stage}: {m}")),
            Error::Data(m) => Error::Data(format!("stage {stage}: {m}")),
            Error::Io(e) => Error::Data(format!("stage {stage}: {e}")),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
