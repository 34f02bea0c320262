//! Robust fuzzy local k-plane clustering.
//!
//! The main entry point is [`rflkpc::fit`]. Baselines ([`baselines`]),
//! clustering scores ([`metrics`]), synthetic benchmarks ([`datagen`]) and
//! the benchmark harness behind the `planeclust` binary ([`cli`]) are built
//! on the same [`Dataset`] / [`PlaneModel`] / [`Membership`] types.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// index loops mirror the matrix notation of the updates
#![allow(clippy::needless_range_loop)]

pub mod baselines;
pub mod cli;
pub mod datagen;
pub mod error;
pub mod init;
pub mod linalg;
pub mod matrix;
pub mod metrics;
pub mod rflkpc;
pub mod types;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use types::{
    hard_labels, minmax_normalize, Dataset, FitReport, HyperParams, Membership, PlaneModel, OUTLIER,
};
