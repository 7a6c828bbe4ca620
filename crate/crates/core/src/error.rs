use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("invalid law: {0}")]
    InvalidLaw(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{what} = {value} exceeds the configured cap {cap}")]
    CapExceeded {
        what: &'static str,
        value: u128,
        cap: u128,
    },

    #[error("real flavor requested for a complex-valued law")]
    FlavorMismatch,

    #[error("non-finite value in {what} at n = {n}")]
    NonFinite { what: &'static str, n: usize },

    #[error("sequence too short: need {needed} values, got {got}")]
    SequenceTooShort { needed: usize, got: usize },

    #[error(
        "ill-conditioned spectral fit (condition estimate {condition:.3e}); \
         eigenvalue clustering is ambiguous or higher precision is required"
    )]
    IllConditioned { condition: f64 },

    #[error("expansion order N = {0} is not supported (only 1 and 2)")]
    UnsupportedOrder(usize),

    #[error("integrity check failed: {0}")]
    Integrity(String),
}

pub type Result<T> = std::result::Result<T, Error>;
