use thiserror::Error;

/// Errors produced by the alignmark library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("matrix dimensions {0}x{1} exceed the supported maximum of {max} per side", max = crate::matrix::MAX_SIDE)]
    DimensionLimit(usize, usize),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error(
        "search budget exceeded: estimated {estimated} leaf nodes, budget {budget} \
         (pass force to run anyway)"
    )]
    BudgetExceeded { estimated: u128, budget: u128 },

    #[error("diagonal symmetry restriction requires a square matrix, got {0}x{1}")]
    DiagonalRequiresSquare(usize, usize),

    #[error("operation requires a square matrix, got {0}x{1}")]
    NonSquare(usize, usize),

    #[error("not an autocorrelation map: {0}")]
    NotAutocorrelation(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
