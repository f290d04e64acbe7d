//! Finite differences for `-Δu = λf(u)`, `u = 0` on the boundary of an
//! extracted domain.
//!
//! The stable solution is the minimal one, reached by monotone iteration
//! from zero; stability is certified by the lowest eigenvalue of the
//! linearized operator. For the strip constructions the solution can also
//! be computed in perturbation form about the discrete strip profile, which
//! resolves corrections far below the discretization error of `u` itself.

mod export;
mod expansion;
mod operator;
mod solve;
mod strip;

pub use export::{residual_csv, write_solution_dump, ResidualRow};
pub use expansion::{
    barrier_check, build_barriers, build_barriers_from, eta_of, expansion_residual, loglog_slope, monotone_bound_check, BarrierReport,
    BarrierSet, BoundReport, CoshModeSum, ExpansionReport, KBox,
};
pub use operator::{discretize, dot, sup_norm, Arm, Operator, PcgStats, System, THETA_MIN};
pub use solve::{
    linearized_eigen, lowest_eigen, solve_stable, solve_stable_split, solve_stable_with, taylor_remainder,
    DiscreteSolution, Eigen, SolveOptions, Split,
};
pub use strip::{base_and_residual, strip_profile, StripProfile};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("boundary node {node:?} has no interior neighbour; refine the grid")]
    TooCoarse { node: Vec<usize> },
    #[error("monotone iteration diverged: sup u = {sup} after {iterations} iterations")]
    IterationDiverged { sup: f64, iterations: usize },
    #[error("linearized eigenvalue {mu} is not positive")]
    StabilityLost { mu: f64 },
    #[error("iterates decreased by {drop} at iteration {iteration}")]
    MonotonicityLost { iteration: usize, drop: f64 },
    #[error("solution is not positive at node {node:?} ({value})")]
    NotPositive { node: Vec<usize>, value: f64 },
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("linear solver stalled after {iterations} iterations at relative residual {relative_residual:e}")]
    LinearSolverStalled { iterations: usize, relative_residual: f64 },
    #[error("eigen iteration did not settle after {iterations} iterations (mu = {mu})")]
    EigenNotConverged { mu: f64, iterations: usize },
    #[error("perturbation-form solution differs from the monotone one by {gap:e}")]
    BranchMismatch { gap: f64 },
    #[error("K reaches outside the domain at {point:?}")]
    KOutsideDomain { point: Vec<f64> },
    #[error("ladder violated: mu_inf = {mu_inf} >= mu0 = {mu0}")]
    LadderViolation { mu_inf: f64, mu0: f64 },
    #[error("barrier not positive (mode mu = {mu}, min = {min})")]
    BarrierNotPositive { mu: f64, min: f64 },
    #[error("strip bound violated by {excess:e}")]
    BoundViolated { excess: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Profile(#[from] profile1d::ProfileError),
    #[error(transparent)]
    Field(#[from] fieldkit::FieldError),
    #[error("io: {0}")]
    Io(String),
}
