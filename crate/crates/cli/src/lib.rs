//! Scenario files, validation runs, sweeps and deployment benchmarks on top of
//! `dris-core`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiments;
pub mod scenario;
pub mod units;

pub use scenario::{Scenario, ScenarioError};
