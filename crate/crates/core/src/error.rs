use std::io;

/// Errors produced by corpus handling, training and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid document: {0}")]
    Validation(String),

    #[error("vocabulary is empty after applying min_count = {min_count}")]
    EmptyVocabulary { min_count: u64 },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("graph has no edges")]
    EmptyGraph,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("non-finite loss {loss} ({context}); lower the learning rate")]
    NonFinite { loss: f64, context: String },

    #[error("node {0} has no neighbors")]
    IsolatedNode(usize),

    #[error("unknown key `{0}`")]
    UnknownKey(String),

    #[error("vector has zero norm")]
    ZeroVector,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("{0}")]
    InsufficientData(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}
