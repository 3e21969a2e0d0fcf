use thiserror::Error;

use crate::value::Value;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("unknown catalog entry `{0}`")]
    UnknownEntry(String),
    #[error("value {value} outside the declared state space {space} at generation {generation}")]
    StateSpace {
        value: Value,
        space: String,
        generation: u64,
    },
    #[error("operation needs scalar pools")]
    VectorPool,
    #[error("operation needs finite values")]
    InfiniteValues,
    #[error("pool sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("pool too small: {0} values")]
    TooSmall(usize),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("no sign change on [{0}, {1}]")]
    NoSignChange(f64, f64),
    #[error("numerical method failed: {0}")]
    Numeric(String),
    #[error("node budget of {0} exceeded")]
    Budget(usize),
    #[error("entry `{0}` has no {1} oracle")]
    NoOracle(String, &'static str),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
