use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("lambda^2 = {lambda2} is not an admissible radius in dimension {d}")]
    Inadmissible { d: usize, lambda2: u64 },

    #[error("torus side {side} wraps around; at least {required} is needed")]
    Wraparound { side: usize, required: usize },

    #[error("precision loss: {0}")]
    Precision(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
