use thiserror::Error;

/// Errors raised by the library and mapped onto CLI exit codes.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input (bad flag, malformed ordering, oversized oracle input).
    #[error("usage error: {0}")]
    Usage(String),
    /// A mathematical precondition failed (e.g. `k_n` outside the subconnectivity window).
    #[error("domain error: {0}")]
    Domain(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    /// A deterministic invariant did not hold. Always a bug.
    #[error("invariant violated: {0}")]
    Invariant(String),
}

impl Error {
    /// Stable process exit code for this error class.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Domain(_) => 1,
            Error::Io(_) => 2,
            Error::Invariant(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
