//! Discrete-time Lucas-Uzawa endogenous growth: model primitives,
//! assumption checks, dynamic-programming solvers and path analysis.
//!
//! Returns may be unbounded below. `-inf` is an ordinary `f64` value here
//! and flows through sums and comparisons without special casing.

// `!(x > 0.0)` is how NaN gets rejected alongside the out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod paths;
pub mod primitives;
pub mod solver;
pub mod utility;
pub mod verify;

#[cfg(test)]
mod properties;

pub use error::{ModelError, PathError, SolveError};
pub use primitives::{ModelParams, PhiSpec, State};
pub use solver::{GridSpec, PolicyField, SolveOptions, SolveResult, ValueField};
pub use utility::{Theta, UtilityForm};
pub use verify::AssumptionReport;
