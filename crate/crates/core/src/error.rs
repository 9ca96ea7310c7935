use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("malformed dependency tree in sentence starting at line {line}: {message}")]
    Structure { line: usize, message: String },

    #[error("index {index} out of range (length {len})")]
    Index { index: usize, len: usize },

    #[error("unknown {kind} `{value}`")]
    Vocabulary { kind: &'static str, value: String },

    #[error("no shared predicates between the verbal and nominal corpora")]
    NoSharedPredicates,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("corpora are incompatible: {0}")]
    Incompatible(String),

    #[error("training diverged: {0}")]
    Diverged(String),

    #[error("invalid checkpoint: {0}")]
    Checkpoint(String),

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
