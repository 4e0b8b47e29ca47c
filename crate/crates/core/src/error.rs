use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// The operation needs a model feature the given model lacks
    /// (for example a lattice lifetime).
    #[error("unsupported model: {0}")]
    Unsupported(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("coefficient {k} requested but the series is truncated at order {order}")]
    Truncation { k: usize, order: usize },

    #[error("empty sample: {0}")]
    EmptySample(String),

    #[error("state space too large: {0}")]
    StateSpace(String),

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
