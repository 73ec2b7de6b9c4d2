//! Asymptotic ergodic rate analysis and statistical-CSI design for
//! double-RIS assisted MIMO links.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod covariance;
pub mod error;
pub mod fixed_point;
pub mod io;
pub mod linalg;
pub mod monte_carlo;
pub mod optimizer;

pub use error::{Error, Result};

/// `nats / ln 2`.
pub fn nats_to_bits(nats: f64) -> f64 {
    nats / std::f64::consts::LN_2
}
