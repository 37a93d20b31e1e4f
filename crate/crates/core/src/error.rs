use thiserror::Error;

/// Errors raised anywhere in the validated pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("insufficient precision: {0}")]
    Precision(String),

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("i/o error: {0}")]
    Io(String),

    #[error("no contraction certificate at this level (n = {n}, j = {j})")]
    NoCertificate { n: usize, j: u32 },

    #[error("window error: {0}")]
    Window(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
