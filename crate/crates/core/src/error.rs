use thiserror::Error;

/// Errors raised by every stage of the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown attribute: {0}")]
    UnknownAttribute(String),
    #[error("reserved attribute name used as a variable: {0}")]
    ReservedAttribute(String),
    #[error("invalid attribute name: {0:?}")]
    InvalidName(String),
    #[error("empty attribute set in {0}")]
    EmptyAttributeSet(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("malformed structure: {0}")]
    MalformedStructure(String),
    #[error("structure is not complete: {equations} equations, {variables} variables")]
    Incomplete { equations: usize, variables: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("integrity violation: {0}")]
    Integrity(String),
    #[error("capacity exceeded: {what} is {actual}, limit {limit}")]
    Capacity {
        what: String,
        limit: usize,
        actual: usize,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn capacity(what: impl Into<String>, limit: usize, actual: usize) -> Self {
        Error::Capacity {
            what: what.into(),
            limit,
            actual,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Process exit code: 2 input contract, 3 integrity, 4 capacity.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Integrity(_) => 3,
            Error::Capacity { .. } => 4,
            _ => 2,
        }
    }
}
