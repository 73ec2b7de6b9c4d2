use thiserror::Error;

/// Errors produced by the channel model, the fixed-point engine and the optimizers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("distance {distance} m is below the 1 m reference of the path-loss model")]
    Domain { distance: f64 },

    #[error("quadrature did not converge for correlation entry lag {lag} (last change {change:e})")]
    Quadrature { lag: usize, change: f64 },

    #[error("matrix `{name}` is not positive semi-definite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { name: String, min_eigenvalue: f64 },

    #[error("dimension mismatch for `{name}`: expected {expected:?}, found {found:?}")]
    Dimension {
        name: String,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("fixed-point solver did not converge after {iterations} iterations (max residual {max_residual:e})")]
    NoConvergence {
        iterations: usize,
        max_residual: f64,
        residuals: [f64; 10],
    },

    #[error("fixed-point iteration diverged at iteration {iteration}; try a smaller damping factor")]
    Divergence { iteration: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("{what} did not converge within {iterations} iterations (last rate change {last_change:e})")]
    OuterLoop {
        what: &'static str,
        iterations: usize,
        last_change: f64,
    },

    #[error("water-filling has no usable eigenmode (largest eigenvalue {largest:e})")]
    DegenerateWaterFilling { largest: f64 },

    #[error("{source} (after {} optimizer iterations)", trace.records.len())]
    Optimizer {
        /// Records of the iterations completed before the failure.
        trace: crate::optimizer::AoTrace,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
