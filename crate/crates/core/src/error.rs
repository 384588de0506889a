use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors surfaced by the fitting, ridge and credible-set routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid basis specification: {0}")]
    InvalidSpec(String),

    #[error("coordinate {value} lies outside [0, 1]")]
    Domain { value: f64 },

    #[error("row {row}: point ({x1}, {x2}) lies outside [0, 1]^2")]
    DomainRow { row: usize, x1: f64, x2: f64 },

    #[error("derivative of order {deriv} is not supported by order-{order} B-splines")]
    UnsupportedDerivative { deriv: usize, order: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("distance between point sets is undefined: {0} set is empty")]
    EmptySet(&'static str),

    #[error("estimation failed: {0}")]
    Estimation(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
