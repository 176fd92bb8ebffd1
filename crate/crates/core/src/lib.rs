//! Behavioral models and fitting procedures for digital cancellation of
//! second-order intermodulation (IMD2) interference in FDD receivers.
//!
//! Two cancellers are provided, both driven by delayed magnitudes of the
//! baseband transmit signal:
//!
//! - [`cheb::ChebyshevModel`]: a memory polynomial in the Chebyshev basis of the
//!   first kind, linear in its coefficients.
//! - [`nn::NnModel`]: a small bias-free feed-forward network over the same
//!   delayed magnitudes.
//!
//! Either model can be fitted with closed-form ridge least squares (Chebyshev
//! only), Adam, or L-BFGS, see [`train`]. [`chain`] synthesizes (Tx, Rx) datasets
//! from a baseband-equivalent transmitter leakage chain with a known noise floor.
//!
//! Sample-parallel loss and gradient evaluation uses rayon when the `parallel`
//! feature is enabled (default). Reductions are chunked in a fixed order, so
//! results are bit-identical with and without the feature.

// NaN must fail these checks, so `!(x > 0.0)` is intended.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod chain;
pub mod cheb;
pub mod error;
pub mod matrix;
pub mod metrics;
pub mod model;
pub mod nn;
pub mod optim;
pub mod par;
pub mod signal;
pub mod train;

pub use error::{Error, Result};
