//! Rigorous log-domain bounds on determinants of exponential matrices
//! `[exp(x_i y_j)]` and univariate Gaussian kernel matrices, a
//! configurable-precision determinant oracle to check them against, and
//! the shape-parameter rule that falls out of the Gaussian lower bound.
//!
//! The numeric kernels are generic over the scalar type: anything
//! implementing [`num_traits::Float`] (so `f32` and `f64`) and the
//! multi-precision [`MpReal`] all implement [`Real`]. The aliases below
//! fix the common double-precision instantiations.

pub mod divdiff;
pub mod error;
pub mod expdet;
pub mod gaussrbf;
pub mod highprec;
pub mod nodes;
pub mod quadcheck;
pub mod scalar;
pub mod verify;

pub use error::{Error, Exhaustion, Result};
pub use expdet::{ExpMatrixSpec, LogBounds};
pub use gaussrbf::GaussianModel;
pub use highprec::{Escalated, LogNumber, PrecisionConfig, Sign, SquareMatrix};
pub use nodes::NodeVector;
pub use scalar::{MpReal, Real};

/// Double-precision node vector.
pub type Nodes = NodeVector<f64>;
/// Single-precision node vector.
pub type Nodes32 = NodeVector<f32>;
/// Double-precision exponential matrix specification.
pub type ExpSpec = ExpMatrixSpec<f64>;
/// Double-precision bound certificate.
pub type Bounds = LogBounds<f64>;
/// Sign and log-magnitude rounded to double precision.
pub type LogValue = LogNumber<f64>;
/// Sign and log-magnitude at working (multi-)precision.
pub type MpLogValue = LogNumber<MpReal>;
/// Multi-precision matrix.
pub type MpMatrix = SquareMatrix<MpReal>;
