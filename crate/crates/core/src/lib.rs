//! Numerical laboratory for nonlocal operators of fractional calculus.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod base;
pub mod caputo;
pub mod error;
pub mod heatflow;
pub mod oracles;
pub mod pointops;
pub mod quad;
pub mod special;
pub mod spectral;
pub mod stats;
pub mod walkers;

pub use base::*;
pub use error::{FracError, Result};
pub use quad::Estimate;
