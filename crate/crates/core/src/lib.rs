//! Non-intrusive reduced-order surrogates for uncertainty propagation.
//!
//! The crate combines a two-step proper orthogonal decomposition of
//! space-time snapshots with a third POD level over each mode's
//! time/sample coefficients, and regresses the remaining parameter
//! dependence on tensor-product B-spline bases defined over Bézier
//! elements of the unit hypercube. Statistics of the surrogate are
//! integrated element by element with Gauss–Legendre quadrature.
//!
//! Modules:
//!
//! * [`sampling`]: input distributions, CDF maps, LHS/MC designs and
//!   per-element collocation points.
//! * [`splines`]: B-spline spaces, IEN connectivity and element quadrature.
//! * [`pod`]: SVD-based POD, the two-step POD and the third-level POD.
//! * [`rom`]: the offline regression/assembly/solve pipeline and the
//!   online evaluation and statistics.
//! * [`baselines`]: full-order Legendre chaos regression and sampling
//!   reference statistics.
//! * [`problems`]: analytical benchmark models (stochastic Ackley,
//!   viscous Burgers).
//! * [`metrics`]: relative L² errors and kernel density estimation.
//!
//! The crate is `no_std` (with `alloc`) when the default `std` feature is
//! disabled; file formats, parallel drivers and the command-line tool live in
//! the companion `bsbem` crate.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(a > b)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod baselines;
mod error;
pub mod metrics;
pub mod pod;
pub mod problems;
pub mod rom;
pub mod sampling;
pub mod splines;

pub use error::{Error, Result};

/// Dense column-major matrix type used throughout the crate.
pub type Matrix = faer::Mat<f64>;
