use thiserror::Error;

/// Errors produced by the publishing pipeline and its consumers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("epsilon must be finite and > 0, got {0}")]
    InvalidEpsilon(f64),

    #[error("Laplace scale must be finite and > 0, got {0}")]
    InvalidScale(f64),

    #[error("group size {k} is invalid for a sequence of length {n}")]
    InvalidGroupSize { k: usize, n: usize },

    #[error("Hilbert order {0} outside 1..=31")]
    InvalidOrder(u32),

    #[error("domain rectangle must have positive width and height: {0:?}")]
    DegenerateDomain([f64; 4]),

    #[error("coordinate is not finite: ({0}, {1})")]
    NonFinite(f64, f64),

    #[error("point #{index} ({x}, {y}) lies outside the domain")]
    OutsideDomain { index: usize, x: f64, y: f64 },

    #[error("value {value} at position {index} is outside the unit interval")]
    OutsideUnitInterval { index: usize, value: f64 },

    #[error("curve position {0} is outside [0, 1)")]
    CurvePosition(f64),

    #[error("expected a nonempty input")]
    Empty,

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed document: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidEpsilon(epsilon))
    }
}
