use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("parameter out of range: {0}")]
    Parameter(String),

    #[error("vertex set does not span the ambient space (rank {rank} < dim {dim})")]
    NotFullDimensional { rank: usize, dim: usize },

    #[error("operation requires a polytope norm, got {0}")]
    NotPolytope(String),

    #[error("linearly dependent input: {0}")]
    Dependent(String),

    #[error("budget exceeded: {0}")]
    Budget(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("outside validity range: {0}")]
    Validity(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("linear program is {0}")]
    Lp(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}
