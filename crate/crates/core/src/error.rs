use thiserror::Error;

/// Error type shared across the crate.
#[derive(Error, Debug)]
pub enum Error {
    /// Tensor or layer shapes do not line up.
    #[error("dimension error: {0}")]
    Dimension(String),
    /// Input outside the operation's domain (empty input, overflow, non-PD matrix, ...).
    #[error("domain error: {0}")]
    Domain(String),
    /// Non-finite values where finite ones are required.
    #[error("numeric error: {0}")]
    Numeric(String),
    /// Inconsistent configuration (view counts, radii ordering, fold counts, ...).
    #[error("config error: {0}")]
    Config(String),
    /// Coincident points make an interaction matrix singular.
    #[error("singularity error: {0}")]
    Singularity(String),
    /// A stated modeling assumption does not hold on the given instance.
    #[error("assumption violation: {0}")]
    Assumption(String),
    /// Malformed dataset line.
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    /// Record is syntactically valid JSON but misses or mistypes a field.
    #[error("schema error at line {line}: {msg}")]
    Schema { line: usize, msg: String },
    /// Synthetic data generation could not satisfy its constraints.
    #[error("generation error: {0}")]
    Generation(String),
    /// Training aborted (divergence or invalid state).
    #[error("training error: {0}")]
    Training(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
