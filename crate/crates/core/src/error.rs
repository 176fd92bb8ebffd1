use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("domain error: Chebyshev argument {0} outside [0, 1] (was the input normalized?)")]
    Domain(f64),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("rank-deficient normal equations (pivot {pivot} = {value:e}); use lambda > 0")]
    RankDeficient { pivot: usize, value: f64 },

    #[error("non-finite loss at iteration {iter}")]
    NonFinite { iter: usize },

    #[error("line search failed: {0}")]
    LineSearch(String),

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("config error in `{field}`: {msg}")]
    Config { field: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
