use thiserror::Error;

/// Errors produced by the engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QhamError {
    #[error("unsupported group model `{0}`")]
    UnsupportedModel(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not an element of the group: {0}")]
    NotInGroup(String),
    #[error("vector is not tangent at the given point: {0}")]
    NotTangent(String),
    #[error("log outside the principal branch: {0}")]
    LogDomain(String),
    #[error("singular input: {0}")]
    Singular(String),
    #[error("point outside the domain: {0}")]
    Domain(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("invalid quiver: {0}")]
    InvalidQuiver(String),
    #[error("invalid morphism: {0}")]
    InvalidMorphism(String),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, QhamError>;
