use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("sentence {sentence}: {msg}")]
    InvalidTree { sentence: usize, msg: String },
    #[error("tree is not projective")]
    NonProjective,
    #[error("root already appended")]
    RootAlreadyAppended,
    #[error("{action}: {reason}")]
    InvalidAction { action: &'static str, reason: String },
    #[error("oracle failure: {0}")]
    Oracle(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("all sentences were skipped")]
    AllSkipped,
    #[error("optimizer: {0}")]
    Optimizer(String),
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
