use thiserror::Error;

use crate::combinatorics::UserSet;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("planning error: {0}")]
    Planning(String),

    #[error("incomplete delivery for user {user}: missing subpacket {subset} #{index}")]
    IncompleteDelivery {
        user: usize,
        subset: UserSet,
        index: usize,
    },

    #[error("verification failed for user {user}: subpacket {subset} #{index} differs")]
    Verification {
        user: usize,
        subset: UserSet,
        index: usize,
    },

    #[error("solver error: {message}")]
    Solver {
        message: String,
        /// Iteration trace collected up to the failure, if any.
        trace: Vec<crate::beamformer::TraceRecord>,
    },

    #[error("invalid rate point: {0}")]
    InvalidPoint(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn solver(message: impl Into<String>) -> Self {
        Error::Solver {
            message: message.into(),
            trace: Vec::new(),
        }
    }

    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Input(_) | Error::Domain(_) | Error::Planning(_) => 2,
            Error::Solver { .. } | Error::InvalidPoint(_) => 3,
            Error::IncompleteDelivery { .. } | Error::Verification { .. } => 4,
            Error::Io(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
