use thiserror::Error;

use crate::projection::ProjectionResult;

/// Errors raised by the numerical and tomography routines.
#[derive(Debug, Error)]
pub enum QptError {
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("map is not completely positive (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("degenerate parametrization: {0}")]
    DegenerateParametrization(String),

    #[error("state tomography failed for input {index}: {source}")]
    Tomography {
        index: usize,
        #[source]
        source: Box<QptError>,
    },

    #[error("projection did not converge after {evaluations} evaluations (best distance {distance:.3e})")]
    NonConvergence {
        best: Box<ProjectionResult>,
        distance: f64,
        evaluations: usize,
    },
}

pub type Result<T> = std::result::Result<T, QptError>;
