use std::path::PathBuf;

use thiserror::Error;

/// Which family of one-hot constraints a binary encoding violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum ConstraintKind {
    /// Row constraint: location `i` must hold exactly one facility.
    Row,
    /// Column constraint: facility `j` must sit in exactly one location.
    Column,
}

impl std::fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintKind::Row => f.write_str("g1"),
            ConstraintKind::Column => f.write_str("g2"),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: expected {expected} tokens, found {found}")]
    TokenCount { expected: usize, found: usize },

    #[error("parse error: token {position} `{token}` is not an integer")]
    BadToken { position: usize, token: String },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("generation error: {0}")]
    Generation(String),

    #[error("infeasible binary assignment: constraint {constraint} index {index} sums to {sum}")]
    Infeasible {
        constraint: ConstraintKind,
        index: usize,
        sum: usize,
    },

    #[error("degenerate front: need at least 2 points, got {0}")]
    DegenerateFront(usize),

    #[error("degenerate pair: left must have smaller f1 and larger f2 than right")]
    DegeneratePair,

    #[error("exhaustive backend supports n <= {max}, got n = {n}")]
    Capacity { n: usize, max: usize },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            context: path.into().display().to_string(),
            source,
        }
    }

    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Whether the root cause is an IO failure.
    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } | Error::Json { .. } => true,
            Error::Context { source, .. } => source.is_io(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
