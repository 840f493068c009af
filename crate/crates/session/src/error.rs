use uuid::Uuid;

pub type Result<T, E = SessionError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum SessionError {
    #[error("no session with id {0}")]
    NotFound(Uuid),

    /// The protocol spec or request payload does not describe a valid session.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    #[error("malformed request: {0}")]
    Malformed(String),

    #[error("stage has {expected} pending test(s) but {submitted} result(s) were submitted")]
    PartialStage { expected: usize, submitted: usize },

    #[error("test id {0} appears more than once in the submission")]
    DuplicateTestId(u64),

    #[error("test id {0} was never prescribed")]
    UnknownTestId(u64),

    /// The id belongs to a stage that has already been answered, typically
    /// because a concurrent submission won.
    #[error("test id {0} is no longer pending")]
    StaleTestId(u64),

    #[error("session {0} has already concluded")]
    Concluded(Uuid),

    /// Outcomes that the protocol cannot produce (e.g. a positive parent with
    /// every child negative under a noiseless flowchart).
    #[error("{0}")]
    Rejected(poolscreen_core::Error),

    #[error("storage failure: {0}")]
    Storage(String),
}

impl SessionError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            SessionError::NotFound(_) => "session_not_found",
            SessionError::InvalidSpec(_) => "invalid_spec",
            SessionError::Malformed(_) => "malformed_request",
            SessionError::PartialStage { .. } => "partial_stage",
            SessionError::DuplicateTestId(_) => "duplicate_test_id",
            SessionError::UnknownTestId(_) => "unknown_test_id",
            SessionError::StaleTestId(_) => "stale_test_id",
            SessionError::Concluded(_) => "session_concluded",
            SessionError::Rejected(_) => "outcomes_rejected",
            SessionError::Storage(_) => "storage_failure",
        }
    }

    pub(crate) fn storage(err: impl std::fmt::Display) -> Self {
        SessionError::Storage(err.to_string())
    }
}
