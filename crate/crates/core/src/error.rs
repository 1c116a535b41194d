use thiserror::Error;

/// Errors surfaced by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// Two objects that must share a domain size or label count do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// An input violates a documented domain restriction.
    #[error("domain error: {0}")]
    Domain(String),

    /// A value that must be finite is not.
    #[error("numeric error: {0}")]
    NonFinite(String),

    /// The requested operation is not defined for this entropy notion.
    #[error("unsupported operation: {0}")]
    Unsupported(String),

    /// An internal invariant that the algorithm guarantees was observed to fail.
    /// Seeing this means the implementation is buggy, not the input.
    #[error("internal contract violated: {0}")]
    Contract(String),
}

pub type Result<T> = std::result::Result<T, Error>;
