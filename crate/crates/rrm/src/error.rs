use thiserror::Error;

#[derive(Debug, Error)]
pub enum RrmError {
    #[error("base station {bs} and user {user} are co-located")]
    ZeroDistance { bs: usize, user: usize },

    #[error("expected {expected} values, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("layout json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, RrmError>;

impl From<RrmError> for locbo::Error {
    fn from(e: RrmError) -> Self {
        locbo::Error::Other(e.to_string())
    }
}
