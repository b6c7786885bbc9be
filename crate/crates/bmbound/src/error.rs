//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("bound order must be even and in 2..={max}, got {got}")]
    InvalidOrder { got: usize, max: usize },

    #[error("variational parameter mu_{index} is not finite")]
    InvalidParameter { index: usize },

    #[error("derivative index must be even and in 0..={}, got {index}", order - 2)]
    InvalidDerivativeIndex { index: usize, order: usize },

    #[error("moment vector must cover n = 0..={needed}, got {got} entries")]
    MissingMoments { needed: usize, got: usize },

    #[error("invalid moment vector: {reason}")]
    InvalidMoments { reason: String },

    #[error("degenerate denominator <Y_{index}(dH)> = 0; input moments are inconsistent")]
    DegenerateDenominator { index: usize },

    #[error("magnetization must satisfy |m| < 1, got {value}")]
    InvalidMagnetization { value: f64 },

    #[error("corrected moments require degree >= 1, got {got}")]
    InvalidMomentDegree { got: usize },

    #[error("exact enumeration supports at most {max} units, got {got}; use the polynomial bounds instead")]
    NetworkTooLarge { got: usize, max: usize },

    #[error("invalid network: {reason}")]
    InvalidNetwork { reason: String },

    #[error("partition graphs are supported for orders 2..={max}, got {order}")]
    UnsupportedOrder { order: usize, max: usize },

    #[error("no catalog available for order {order}")]
    MissingCatalog { order: usize },

    #[error("moment table covers degrees up to {have}, graph needs degree {need}")]
    MissingMomentDegree { need: usize, have: usize },

    #[error("catalog parse error at line {line}, column {column}: {message}")]
    CatalogParse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error(
        "catalog convention mismatch: file declares {found:?}, this build expects {expected:?}"
    )]
    CatalogVersion { found: String, expected: String },

    #[error("catalog for order {order} failed validation: {message}")]
    CatalogInvalid { order: usize, message: String },

    #[error("relative error is undefined when log Z = 0")]
    UndefinedMetric,

    #[error("numeric failure: {reason}")]
    NumericFailure { reason: String },

    #[error("invalid configuration: {reason}")]
    InvalidConfig { reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to: 2 for configuration and
    /// input problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::DegenerateDenominator { .. }
            | Error::InvalidMoments { .. }
            | Error::InvalidMagnetization { .. }
            | Error::NumericFailure { .. } => 3,
            _ => 2,
        }
    }
}
