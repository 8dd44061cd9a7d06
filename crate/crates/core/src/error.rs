use thiserror::Error;

pub type Result<T> = std::result::Result<T, FairError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FairError {
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("non-finite coordinate {value} at point {point}, axis {axis}")]
    NonFinite { point: usize, axis: usize, value: f64 },

    #[error("invalid exponent {0}: must be >= 1 or infinite")]
    InvalidExponent(String),

    #[error("dataset is not balanced: color {color} has {count} points, expected {expected}")]
    Unbalanced {
        color: usize,
        count: usize,
        expected: usize,
    },

    #[error("invalid coloring: {0}")]
    InvalidColoring(String),

    #[error("invalid distance matrix: {0}")]
    InvalidMetric(String),

    #[error("operation requires point coordinates, dataset is in distance-matrix mode")]
    CoordinatesRequired,

    #[error("k = {k} exceeds the {available} distinct candidate points")]
    TooFewPoints { k: usize, available: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("instance too large for exhaustive search: {0}")]
    TooLarge(String),

    #[error("infeasible transport: {0}")]
    Infeasible(String),

    #[error("missing matching between colors {from} and {to}")]
    MissingMatching { from: usize, to: usize },

    #[error("no rows left for color {color}: need {needed}, have {available}")]
    InsufficientRows {
        color: usize,
        needed: usize,
        available: usize,
    },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("dichotomization of `{column}` leaves side {side} empty")]
    EmptySide { column: String, side: u8 },

    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),
}

impl From<std::io::Error> for FairError {
    fn from(e: std::io::Error) -> Self {
        FairError::Io(e.to_string())
    }
}

impl From<csv::Error> for FairError {
    fn from(e: csv::Error) -> Self {
        FairError::Parse(e.to_string())
    }
}
