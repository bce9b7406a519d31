use fillin_core::graph::Pair;

pub type Result<T> = std::result::Result<T, ElicitError>;

#[derive(Debug, thiserror::Error)]
pub enum ElicitError {
    #[error("{0}")]
    Validation(String),
    #[error("no session {0}")]
    NotFound(String),
    /// The pair is not askable yet; `allowed` lists the ones that are.
    #[error("{message}")]
    Sequencing { message: String, allowed: Vec<Pair> },
    #[error("{0}")]
    State(String),
    #[error("{0}")]
    Conflict(String),
    #[error(transparent)]
    Core(#[from] fillin_core::Error),
    #[error("journal: {0}")]
    Io(#[from] std::io::Error),
    #[error("journal: {0}")]
    Json(#[from] serde_json::Error),
}

impl ElicitError {
    pub fn code(&self) -> &'static str {
        match self {
            ElicitError::Validation(_) => "validation",
            ElicitError::NotFound(_) => "not_found",
            ElicitError::Sequencing { .. } => "sequencing",
            ElicitError::State(_) => "state",
            ElicitError::Conflict(_) => "idempotency_conflict",
            ElicitError::Core(_) | ElicitError::Io(_) | ElicitError::Json(_) => "internal",
        }
    }
}
