//! Error type shared by every stage of the pipeline.

use std::io;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    /// Malformed input text (CSV, N-Triples, JSON).
    #[error("parse error in {source_name}{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        source_name: String,
        line: Option<usize>,
        message: String,
    },

    /// Structurally valid input that violates a data-model invariant.
    #[error("validation error: {0}")]
    Validation(String),

    /// A field, record or indexing function name could not be resolved.
    #[error("lookup error: {0}")]
    Lookup(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The learner could not produce a scheme (nothing survived pruning).
    #[error("learner failure: {0}")]
    LearnerFailure(String),

    #[error("capacity exceeded: {what} would reach {needed}, cap is {cap}")]
    Capacity {
        what: &'static str,
        needed: usize,
        cap: usize,
    },
}

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, line: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code for this error: 2 parse, 3 validation, 4 learner failure,
    /// 5 capacity, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse { .. } => 2,
            Error::Validation(_) | Error::Lookup(_) | Error::Argument(_) => 3,
            Error::LearnerFailure(_) => 4,
            Error::Capacity { .. } => 5,
            Error::Io(_) => 1,
        }
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        let line = err.position().map(|p| p.line() as usize);
        match err.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            other => Error::parse("csv", line, format!("{other:?}")),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            return Error::Io(err.into());
        }
        if err.is_data() {
            return Error::Validation(err.to_string());
        }
        Error::parse("json", Some(err.line()), err.to_string())
    }
}
