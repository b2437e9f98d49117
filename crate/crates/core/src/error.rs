use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "delay aliasing: path delay {delay_ns:.3} ns must stay below {limit_ns:.3} ns \
         (half the unambiguous range 1/df) so doubled multiplicative-array delays do not wrap"
    )]
    DelayAliasing { delay_ns: f64, limit_ns: f64 },

    #[error("frequency {0} Hz is not a point of the frequency grid")]
    OffGridFrequency(f64),

    #[error("no signal: {0}")]
    NoSignal(String),

    #[error("no peak found: {0}")]
    NoPeak(String),

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("malformed CFR file {path}: {reason}")]
    CfrFormat { path: PathBuf, reason: String },

    #[error("scenario {path}: {reason}")]
    Scenario { path: PathBuf, reason: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit status used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::DimensionMismatch(_)
            | Error::DelayAliasing { .. }
            | Error::OffGridFrequency(_)
            | Error::CfrFormat { .. }
            | Error::Scenario { .. } => 2,
            Error::NoSignal(_) | Error::NoPeak(_) | Error::CheckFailed(_) => 3,
            Error::Io { .. } => 4,
        }
    }
}
