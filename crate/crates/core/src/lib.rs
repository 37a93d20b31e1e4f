//! Validated numerics for wavelet projection confidence bands: interval
//! arithmetic, certified cascade approximations of scaling functions, a
//! verifier for the variance-maximum condition, Gumbel critical values, and a
//! Monte Carlo harness.

// `!(x > 0.0)` style checks deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cascade;
pub mod error;
pub mod filters;
pub mod interval;
pub mod simulate;
pub mod verify;

pub use error::{Error, Result};
pub use interval::{Interval, Precision};
