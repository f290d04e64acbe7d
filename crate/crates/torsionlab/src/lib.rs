//! The explicit torsion construction on `ℝ × ℝ^N`.
//!
//! `u_ε = ½(N - |y|²) + ε Σ_j v(x, y_j)` with `v = Re F_k(t + is)` and
//! `F_k(z) = -Π(z² - t_ℓ²)`. The polynomial is expanded exactly in rational
//! arithmetic; evaluation and derivatives go through complex Horner
//! schemes. `-Δu_ε = N` because `v` is harmonic, and the level set
//! `u_ε = 0` has positive mean curvature for `N ≥ 2` and small ε.

mod certify;
mod field;
mod poly;

pub use certify::{
    boundary_asymptotics, certify_eps, certify_positive_curvature, certify_torsion_theorem, curvature_csv,
    cylinder_difference, extract_torsion_domain, tip_numerator, torsion_grid, AsymptoticsReport, Check, CurvatureReport, EpsReport,
    TorsionOptions, TorsionReport, CYLINDER_PATCH_X, CYLINDER_TOL,
};
pub use field::{build_torsion_field, mean_curvature, mean_curvature_of_jet, TorsionField};
pub use poly::{Harmonic, TorsionPoly};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorsionError {
    #[error("roots must be positive and strictly increasing: {0:?}")]
    RootOrder(Vec<f64>),
    #[error("eps = {eps} is too large: u_eps(0) = {origin}")]
    EpsTooLarge { eps: f64, origin: f64 },
    #[error("N = {0}: the construction needs N >= 2")]
    DimensionTooSmall(usize),
    #[error("gradient vanishes (|grad| = {grad_norm:e})")]
    SingularGradient { grad_norm: f64 },
    #[error("negative mean curvature {k_m:e} at {point:?}")]
    NegativeCurvatureFound { point: Vec<f64>, k_m: f64 },
    #[error("boundary asymptotics violated: {0}")]
    AsymptoticViolated(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Domain(#[from] domainforge::DomainError),
    #[error(transparent)]
    Field(#[from] fieldkit::FieldError),
}
