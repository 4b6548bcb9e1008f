use thiserror::Error;

/// Coarse classification used by front ends to pick exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Validation,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("time tags not monotonic at index {index}")]
    NonMonotonic { index: usize },

    #[error("negative time {time} at index {index}")]
    NegativeTime { index: usize, time: i64 },

    #[error("channel {channel} at index {index} outside {{0, 1}}")]
    BadChannel { index: usize, channel: u8 },

    #[error("bad magic number {found:?}, expected \"NTAG\"")]
    BadMagic { found: [u8; 4] },

    #[error("unsupported NTAG version {0}")]
    UnsupportedVersion(u16),

    #[error("framing error: {0}")]
    Framing(String),

    #[error("csv parse error on line {line}: {reason}")]
    Csv { line: usize, reason: String },

    #[error("config error on line {line}: {reason}")]
    Config { line: usize, reason: String },

    #[error("no convergence after {iterations} iterations: {context}")]
    NoConvergence { iterations: usize, context: String },

    #[error("root bracketing failed: {0}")]
    Bracket(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            field,
            reason: reason.into(),
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::NoConvergence { .. } | Error::Bracket(_) | Error::Numerical(_) => {
                ErrorKind::Numerical
            }
            Error::Io(_) => ErrorKind::Io,
            _ => ErrorKind::Validation,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
