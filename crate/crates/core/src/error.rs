use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("CDF total {total} cannot hold {vocab} unit floors")]
    PrecisionInfeasible { vocab: usize, total: u32 },

    #[error("coder integrity: {0}")]
    CoderIntegrity(String),

    #[error("truncated stream: {0}")]
    TruncatedStream(String),

    #[error("bad magic {0:02x?}")]
    BadMagic([u8; 4]),

    #[error("truncated container: {0}")]
    TruncatedContainer(&'static str),

    #[error("malformed container: {0}")]
    Malformed(String),

    #[error("too many {what}: {count} exceeds {max}")]
    Overflow {
        what: &'static str,
        count: usize,
        max: usize,
    },

    #[error("tokenizer round trip failed for a {len}-byte chunk")]
    TokenizerRoundTrip { len: usize },

    #[error("backend: {0}")]
    Backend(String),

    #[error("vocabulary mismatch: backend reports {got}, expected {expected}")]
    VocabMismatch { expected: usize, got: usize },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    /// Process exit code for the CLI: 1 for format/data problems, 2 for
    /// predictor backend failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Backend(_) | Error::VocabMismatch { .. } | Error::TokenizerRoundTrip { .. } => 2,
            _ => 1,
        }
    }
}
