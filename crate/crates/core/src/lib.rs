//! Approximately optimal excess-of-loss retentions: severity models, distortion risk
//! measures, model-based and plug-in solvers with asymptotic inference, and a Monte Carlo
//! oracle.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases below fix
//! `f64`, which is what the Monte Carlo layer and the command line use.

// `!(x > 0)` style guards reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod distortion;
pub mod error;
pub mod inference;
pub mod montecarlo;
pub mod numerics;
pub mod retention;
pub mod scalar;
pub mod severity;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Severity = severity::SeverityModel<f64>;
pub type Moments = severity::TruncatedMoments<f64>;
pub type Measure = distortion::DistortionMeasure<f64>;
pub type Loading = retention::LoadingRule<f64>;
pub type Solution = retention::RetentionSolution<f64>;
pub type Estimation = inference::EstimationResult<f64>;
