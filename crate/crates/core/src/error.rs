use std::path::PathBuf;

use ndarray::Array1;
use thiserror::Error;

/// Errors produced by the solvers, the instance generator and the report writers.
#[derive(Debug, Error)]
pub enum DcaError {
    #[error("dimension mismatch: expected length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A fixed-point solve did not reach its tolerance. Carries the best iterate.
    #[error("fixed-point iteration did not converge after {iterations} steps (last step norm {residual:e})")]
    NonConvergence {
        best: Array1<f64>,
        residual: f64,
        iterations: usize,
    },

    /// The cDCA inner loop hit its cap before the adaptive rule was met.
    #[error(
        "inner loop at outer iteration {outer_iteration} stopped after {inner_iterations} steps: \
         step norm {last_step:e} above threshold {threshold:e}"
    )]
    InnerLoop {
        outer_iteration: usize,
        inner_iterations: usize,
        last_step: f64,
        threshold: f64,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization failed: {0}")]
    Serialization(String),
}

pub type Result<T> = std::result::Result<T, DcaError>;

pub(crate) fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(DcaError::DimensionMismatch { expected, found })
    }
}
