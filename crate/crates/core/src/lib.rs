//! Complex-valued Gaussian process regression for instantaneous amplitude,
//! phase and frequency of oscillatory signals.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose; indexed loops
// read better than zipped iterators in the numeric code.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod cgpr;
pub mod error;
pub mod io;
pub mod kernels;
pub mod par;
pub mod signals;
pub mod simulate;
pub mod stats;
pub mod study;

pub use error::{Error, Result};
