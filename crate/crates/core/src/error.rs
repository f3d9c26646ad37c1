use std::fmt;

use crate::highprec::LogNumber;

pub type Result<T> = std::result::Result<T, Error>;

/// Why a configurable-precision computation gave up.
#[derive(Debug, Clone, PartialEq)]
pub enum Exhaustion {
    /// The last two precisions disagreed (in sign or beyond the tolerance).
    Disagreement {
        coarse: LogNumber<f64>,
        fine: LogNumber<f64>,
    },
    /// A solve did not reproduce its right-hand side.
    Residual { residual: f64, tolerance: f64 },
}

impl fmt::Display for Exhaustion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exhaustion::Disagreement { coarse, fine } => {
                write!(f, "last two evaluations disagree: {coarse} vs {fine}")
            }
            Exhaustion::Residual {
                residual,
                tolerance,
            } => write!(f, "residual {residual:e} exceeds {tolerance:e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("node list is empty")]
    Empty,
    #[error("node {index} is not finite")]
    NonFinite { index: usize },
    #[error("node {index} does not exceed its predecessor")]
    NotStrictlyIncreasing { index: usize },
    #[error("node lists differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("matrix is not square or is empty")]
    DimensionMismatch,
    #[error("invalid precision configuration: {0}")]
    InvalidPrecision(String),
    #[error("precision exhausted at {mantissa_bits} bits: {reason}")]
    PrecisionExhausted {
        mantissa_bits: usize,
        reason: Exhaustion,
    },
    #[error("determinant sign is not positive ({context})")]
    PositivityViolated {
        context: String,
        rows: Vec<usize>,
        cols: Vec<usize>,
    },
    #[error("n = {n} exceeds the enumeration limit {max_n}")]
    NTooLarge { n: usize, max_n: usize },
    #[error("sum of shifted y-nodes must be positive, got {0}")]
    InvalidUSum(f64),
    #[error("invalid exponential family (scale {scale}, prefactor power {power})")]
    InvalidFamily { scale: f64, power: u32 },
    #[error("{dims} integration dimensions exceed the cap of {max_dims}")]
    TooManyDims { dims: usize, max_dims: usize },
    #[error("quadrature order {0} is below 2")]
    InvalidOrder(usize),
    #[error("shape parameter must be positive and finite, got {0}")]
    InvalidLambda(f64),
    #[error("nodes have zero spread; no finite shape parameter maximizes the objective")]
    DegenerateNodes,
    #[error("{0}")]
    InvalidArgument(String),
}

impl Error {
    /// Stable identifier used in machine-readable error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Empty => "Empty",
            Error::NonFinite { .. } => "NonFinite",
            Error::NotStrictlyIncreasing { .. } => "NotStrictlyIncreasing",
            Error::LengthMismatch { .. } => "LengthMismatch",
            Error::DimensionMismatch => "DimensionMismatch",
            Error::InvalidPrecision(_) => "InvalidPrecision",
            Error::PrecisionExhausted { .. } => "PrecisionExhausted",
            Error::PositivityViolated { .. } => "PositivityViolated",
            Error::NTooLarge { .. } => "NTooLarge",
            Error::InvalidUSum(_) => "InvalidUSum",
            Error::InvalidFamily { .. } => "InvalidFamily",
            Error::TooManyDims { .. } => "TooManyDims",
            Error::InvalidOrder(_) => "InvalidOrder",
            Error::InvalidLambda(_) => "InvalidLambda",
            Error::DegenerateNodes => "DegenerateNodes",
            Error::InvalidArgument(_) => "InvalidArgument",
        }
    }

    /// True for failures of a mathematical check rather than of the input.
    pub fn is_check_failure(&self) -> bool {
        matches!(self, Error::PositivityViolated { .. })
    }

    pub fn is_precision_exhausted(&self) -> bool {
        matches!(self, Error::PrecisionExhausted { .. })
    }
}
