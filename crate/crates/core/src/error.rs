use thiserror::Error;

use crate::tensor::{Object, Shape};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{kind}: shape mismatch, {detail}")]
    ShapeMismatch { kind: &'static str, detail: String },

    #[error("cannot compose: left codomain {left} does not match right domain {right}")]
    Boundary { left: Object, right: Object },

    #[error("context mismatch: {left} vs {right}")]
    Context { left: Object, right: Object },

    #[error("invalid shape {0:?}: dims must be positive and rank 1 or 2")]
    InvalidShape(Vec<usize>),

    #[error("tensor of shape {shape} needs {expected} entries, got {actual}")]
    EntryCount {
        shape: Shape,
        expected: usize,
        actual: usize,
    },

    #[error("non-finite value at entry {index}")]
    NonFinite { index: usize },

    #[error("non-finite intermediate produced by {op} at node {path}")]
    NonFiniteIntermediate { op: String, path: String },

    #[error("expected inputs {expected}, got {actual}")]
    Inputs { expected: Object, actual: Object },

    #[error("node {node} has zero or negative degree after adding self-loops")]
    ZeroDegree { node: usize },

    #[error("line {line}: row has {found} entries, expected {expected}")]
    RaggedRow {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("line {line}, column {column}: cannot parse {token:?} as a finite number")]
    Token {
        line: usize,
        column: usize,
        token: String,
    },

    #[error("empty matrix text")]
    EmptyMatrix,

    #[error("training diverged at step {step}: {what} is not finite")]
    Diverged { step: usize, what: &'static str },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },
}

impl Error {
    pub(crate) fn shape(kind: &'static str, detail: impl Into<String>) -> Self {
        Error::ShapeMismatch {
            kind,
            detail: detail.into(),
        }
    }

    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
