//! Critical points of a scalar field inside an extracted domain.
//!
//! Seeds are the grid-local extrema of the sampled field plus the local
//! extrema along the coordinate axes through the origin (where the symmetric
//! constructions put their maxima). Each seed is refined by damped Newton on
//! the gradient, and the survivors are deduplicated and classified by their
//! Hessian spectrum.

mod scan;

pub use scan::{
    critical_csv, find_critical_points, interpolate_solution, is_reflection_symmetric, markers, nondegeneracy_margin,
    CriticalPoint, Kind, Scan, ScanOptions,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScanError {
    #[error("Newton stalled from seed {seed} at |grad| = {grad_norm:e}")]
    NewtonStalled { seed: usize, grad_norm: f64 },
    #[error("no critical points found")]
    NoCriticalPoints,
    #[error("no nondegenerate maximum among the critical points")]
    NoMaxima,
    #[error("degenerate maximum at {location:?}: largest Hessian eigenvalue {eig:e}, floor {floor:e}")]
    DegenerateFound { location: Vec<f64>, eig: f64, floor: f64 },
    #[error("field has dim {field}, domain has dim {domain}")]
    DimensionMismatch { field: usize, domain: usize },
}
