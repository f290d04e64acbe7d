//! One-dimensional building blocks for strip-like domains.
//!
//! Solves the profile problem `-u'' = λ f(u)` on `(-L, L)` with `u(±L) = 0`,
//! continues it past the endpoints, and computes the first eigenvalue of the
//! linearized operator `-d²/dy² - λ f'(u₀)` together with the even transverse
//! modes `ω_μ` solving `-ω'' - λ f'(u₀) ω = μ ω`.
//!
//! The stable profile is the minimal one: shooting scans the initial height
//! `u(0)` upward from zero and takes the first root of `u(L)`.

mod eigen;
mod hermite;
mod mode;
mod nonlinearity;
pub mod ode;
mod profile;

pub use eigen::{dirichlet_ground_state, first_eigenvalue, rect_eigenvalue, GroundState};
pub use hermite::HermiteTable;
pub use mode::{omega_mode, Mode};
pub use nonlinearity::{Nonlinearity, FLAG_RANGE};
pub use profile::{
    find_minimal_height, lambda_star_estimate, profile_csv, shoot, solve_profile, solve_profile_on,
    Profile1D, ProfileOptions,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProfileError {
    #[error("no solution of the profile problem for lambda = {lambda}")]
    NoSolution { lambda: f64 },
    #[error("shooting diverged from height {height} at y = {y}")]
    ShootingDiverged { height: f64, y: f64 },
    #[error("profile fails to turn negative past the endpoint: u({y}) = {value}")]
    ExtensionSignError { y: f64, value: f64 },
    #[error("extended profile is unstable (mu0 = {mu0}) even after shrinking sigma to {sigma}")]
    UnstableExtension { mu0: f64, sigma: f64 },
    #[error("eigen iteration did not converge: {0}")]
    ConvergenceFailure(String),
    #[error("mode frequency {mu} outside (0, mu0 = {mu0})")]
    MuOutOfRange { mu: f64, mu0: f64 },
    #[error("mode vanishes at y = {y}; the boundary value problem is singular for mu = {mu}")]
    SingularBVP { mu: f64, y: f64 },
    #[error("degenerate side ({a}, {b})")]
    DegenerateSide { a: f64, b: f64 },
    #[error("still solvable at the cap lambda = {cap}")]
    NoFailureFound { cap: f64 },
    #[error("nonlinearity {name} violates: {missing}")]
    Hypothesis { name: String, missing: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}
