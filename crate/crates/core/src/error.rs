use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A group × occasion cell has fewer than two observations.
    #[error("cell (group {group}, occasion {occasion}) has {observed} observed values; at least 2 are required")]
    EmptyCell {
        group: usize,
        occasion: usize,
        observed: usize,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("not a contrast matrix: row {row} sums to {sum:e}")]
    NotAContrast { row: usize, sum: f64 },

    #[error("tr(T V) = {0:e} is not positive; the ATS is undefined")]
    DegenerateTrace(f64),

    #[error("diagonal covariance entry {index} is zero; the MATS is undefined")]
    ZeroDiagonal { index: usize },

    #[error("covariance setting is not positive definite")]
    NotPositiveDefinite,

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("config error at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
