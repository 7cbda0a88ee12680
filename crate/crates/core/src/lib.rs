//! Clipped stochastic solvers for variational inequalities with
//! generalized (α-symmetric) smoothness.
//!
//! The crate is organized bottom-up:
//!
//! - [`point`]: dense real vectors and the handful of BLAS-1 helpers the
//!   solvers need.
//! - [`rng`]: a counter-based Philox generator keyed by
//!   `(master seed, method index, run index)`.
//! - [`problems`]: operators, additive-Gaussian oracles, feasible sets with
//!   Euclidean projections, and solution-distance metrics.
//! - [`smoothness`]: α-symmetry constants and sampled verification of the
//!   structural assumptions.
//! - [`schedules`]: `β_k` families, the clipping rule and theorem constants.
//! - [`methods`]: the four clipped solvers and the run loop.
//! - [`harness`]: configuration, multi-seed execution, aggregation, slope
//!   fitting and persistence.
//! - [`cli`]: the `clipvi` command line.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod harness;
pub mod methods;
pub mod point;
pub mod problems;
pub mod rng;
pub mod schedules;
pub mod smoothness;

pub use error::{Error, Result};
pub use point::Point;
