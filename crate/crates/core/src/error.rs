use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    Param(String),

    #[error("universe has {size} variables, more than the supported {limit}")]
    Capacity { size: usize, limit: usize },

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("invalid code table: {0}")]
    CodeTable(String),

    #[error("code is not admissible: {0}")]
    Inadmissible(String),

    #[error("cannot parse rational number '{0}'")]
    ParseRational(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
