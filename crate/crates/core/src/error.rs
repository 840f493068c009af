use std::collections::BTreeSet;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Malformed or out-of-range input (bad parameter, dimension mismatch, parse failure).
    #[error("invalid input: {0}")]
    Input(String),

    /// An outcome sequence that the protocol cannot produce under noiseless semantics.
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),

    /// The requested evaluation mode does not apply to the instance.
    #[error("mode mismatch: {0}")]
    ModeMismatch(String),

    /// No vector with at most `k_max` infected is consistent with the outcomes.
    #[error("decode failure: no set of at most {k_max} people explains the outcomes; {} nearest candidate(s) at Hamming distance {distance}", candidates.len())]
    DecodeFailure {
        k_max: usize,
        distance: usize,
        candidates: Vec<BTreeSet<usize>>,
    },

    #[error("strategy did not terminate within {limit} tests")]
    NonTermination { limit: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    /// True for errors caused by the caller's input rather than by the engine.
    pub fn is_input(&self) -> bool {
        matches!(
            self,
            Error::Input(_) | Error::ProtocolViolation(_) | Error::ModeMismatch(_) | Error::DecodeFailure { .. }
        )
    }
}
