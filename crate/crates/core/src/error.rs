use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("dimension mismatch: expected {expected} atoms, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid function: {0}")]
    InvalidFunction(String),

    #[error("empty class")]
    EmptyClass,

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("value {value} at position {position} is not on the {grid} grid")]
    OffGrid {
        grid: &'static str,
        value: f64,
        position: usize,
    },

    #[error("classes are not nested: member {member} of class {class} is missing from class {next}")]
    NotNested {
        class: usize,
        member: usize,
        next: usize,
    },

    #[error("precondition failed: {0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
