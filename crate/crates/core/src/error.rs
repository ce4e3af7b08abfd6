use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("index {index} outside truncation of dimension {dim}")]
    IndexOutOfTruncation { index: usize, dim: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("divergent family: {0}")]
    Divergent(String),

    #[error("unsatisfiable constraint: {0}")]
    Unsatisfiable(String),

    #[error("truncation guard violated: {0}")]
    Guard(String),

    #[error("contour error: {0}")]
    Contour(String),

    #[error("branch error: {0}")]
    Branch(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("iteration cap reached after {iterations} steps (last estimate {estimate}, last change {change:e})")]
    IterationCap { iterations: usize, estimate: f64, change: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
