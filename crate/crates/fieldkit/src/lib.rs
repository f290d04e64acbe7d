//! Scalar fields on `ℝ^d` with value, gradient and Hessian access.
//!
//! Coordinates of the strip construction are ordered `(x_1, …, x_N, y)`; the
//! profile direction is always last. Fields are immutable and `Sync`, so grid
//! sampling can fan out over rows.

mod field;
mod grid;
mod phi;
mod smallness;
mod spline;

pub use field::{FieldKind, FnField, Jet, ScalarField};
pub use grid::{sample_on_grid, write_grid_dump, GridSamples, GridSpec, MAX_NODES};
pub use phi::{assemble_phi, superpose, PhiField, Superposed};
pub use smallness::{smallness_threshold, Smallness, DOMINANCE};
pub use spline::GridSpline;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("mode set does not match the combination frequencies: {0}")]
    ModeMismatch(String),
    #[error("u0(0) + eps*phi(0) = {value} is not positive")]
    OriginNotPositive { value: f64 },
    #[error("grid has {nodes} nodes, above the budget {budget}")]
    OutOfMemoryBudget { nodes: usize, budget: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io: {0}")]
    Io(String),
}
