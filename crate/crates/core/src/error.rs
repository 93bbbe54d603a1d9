use thiserror::Error;

pub type Result<T> = std::result::Result<T, GsError>;

#[derive(Debug, Error)]
pub enum GsError {
    #[error("matrix must have at least one row and one column")]
    EmptyMatrix,
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("negative entry {value} at ({row}, {col})")]
    Negative { row: usize, col: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("matrix is not scalable: {0}")]
    NotScalable(String),
    #[error("matrix has zero norm")]
    ZeroMatrix,
    #[error("solver diverged: {0}")]
    Diverged(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
