//! Command-line driver for `bsbem-core`: run configuration, snapshot and
//! surrogate file formats, multi-threaded sweeps and benchmarks.

// `!(a <= b)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod config;
pub mod container;
pub mod error;
pub mod output;
pub mod parallel;
pub mod pipeline;
pub mod snapshots;

pub use error::{CliError, CliResult};
