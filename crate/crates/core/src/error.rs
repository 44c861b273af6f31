use thiserror::Error;

/// Everything that can go wrong in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violated a documented invariant.
    #[error("invalid parameter {name}: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    /// The tree (or a derived count) does not fit the native integer width.
    #[error("tree too large: {0}")]
    Overflow(String),

    /// A problem-size guard refused to start the computation.
    #[error("scale guard exceeded for {what}: {actual} > {limit}")]
    ScaleGuard {
        what: &'static str,
        limit: u64,
        actual: u64,
    },

    /// A sampler hit its work cap; the replicate produced no value.
    #[error("work cap of {cap} vertex draws exceeded")]
    WorkCapExceeded { cap: u64 },

    /// An iteration or root-finder did not converge.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The requested quantity is not defined at these arguments.
    #[error("undefined: {0}")]
    Undefined(String),

    /// One or more replicates of a batch failed.
    #[error("{} replicate(s) failed, first at index {}: {}", failures.len(), failures[0].0, failures[0].1)]
    Batch { failures: Vec<(u64, Error)> },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    /// Process exit code used by the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParam { .. } => 1,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
