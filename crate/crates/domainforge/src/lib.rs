//! The domain `Ω_ε`: connected component of `{U > 0}` containing the origin.
//!
//! Extraction works on a tensor grid. The component is a node mask found by
//! flood fill; its boundary is a polyline (2-D, marching squares) or a
//! triangle soup (3-D, marching tetrahedra) whose vertices sit on grid edges
//! and are refined by root finding on `U`. Those edge crossings double as
//! cut-cell fractions for the elliptic solver.

mod checks;
mod export;
mod extract;
mod remark;

pub use checks::{
    check_bounding_box, check_far_boundary, check_inclusion, check_star_shape, check_strip_convergence,
    check_symmetry, m_eps, BoxReport, FarBoundaryReport, StarReport,
};
pub use export::{boundary_csv, mask_pgm, obj_mesh, svg_contour, write_mask_raw, Marker};
pub use extract::{extract_component, BoundaryVertex, DomainSlab, Face, SURFACE_TOL};
pub use remark::{remark_r_demo, remark_r_field, RemarkReport, RemarkWidth};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("U is not positive at the origin ({value})")]
    OriginOutside { value: f64 },
    #[error("component touches the grid edge on faces {}", faces.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(", "))]
    ComponentTouchesGridEdge { faces: Vec<Face> },
    #[error("bounding box violated at {point:?} (allowed half-extents {limits:?})")]
    BoxViolated { point: Vec<f64>, limits: Vec<f64> },
    #[error("inclusion violated at {point:?}")]
    InclusionViolated { point: Vec<f64> },
    #[error("not star-shaped: r.grad U = {value} at {point:?}")]
    NotStarShaped { value: f64, point: Vec<f64> },
    #[error("mask not symmetric under reflection of axis {axis} at node {node:?}")]
    AsymmetryDetected { axis: usize, node: Vec<usize> },
    #[error("symmetric difference does not decrease: {volumes:?}")]
    NonConvergence { volumes: Vec<f64> },
    #[error("far-boundary relation off by {worst} at {point:?}")]
    FarBoundaryViolated { worst: f64, point: Vec<f64> },
    #[error("unsupported dimension {0}")]
    UnsupportedDimension(usize),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Field(#[from] fieldkit::FieldError),
    #[error("io: {0}")]
    Io(String),
}
