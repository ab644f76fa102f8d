//! Extremal dependence of stochastic volatility models with Gamma-type
//! log-volatility.
//!
//! - [`model`]: model data and marginal tail constants.
//! - [`cone`]: the cone functional `τ` and Breiman-type limits on `(0,∞)^d`.
//! - [`lp`]: the tail-dependence linear programs, `η_h` profiles and the
//!   inverse construction of coefficients from a target profile.
//! - [`limit`]: limit measures and constants attached to LP solutions.
//! - [`simulate`]: seeded sample paths and tail estimators.
//! - [`verify`]: theory-versus-simulation checks.

// `!(x > 0.0)` also rejects NaN, which is the point
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cone;
pub mod error;
pub mod limit;
pub mod lp;
pub mod model;
pub mod parallel;
pub mod simulate;
pub mod verify;
mod numeric;

pub use error::{Error, Result};
