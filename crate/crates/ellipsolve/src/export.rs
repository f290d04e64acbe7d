//! Solution dumps and residual tables.

use std::fmt::Write as _;
use std::path::Path;

use fieldkit::{write_grid_dump, GridSamples};

use crate::solve::DiscreteSolution;
use crate::SolveError;

/// Grid values (zero outside) as `<base>.bin` plus `<base>.json`.
pub fn write_solution_dump(sol: &DiscreteSolution, base: &Path) -> Result<(), SolveError> {
    let samples = GridSamples { spec: sol.op.spec.clone(), values: sol.grid_values(), gradients: None };
    Ok(write_grid_dump(&samples, base)?)
}

/// One line of an ε sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualRow {
    pub eps: f64,
    pub eps_top: f64,
    pub analytic: f64,
    pub discrete: f64,
    pub psi_min: f64,
    pub mu_lin: f64,
}

pub fn residual_csv(rows: &[ResidualRow]) -> String {
    let mut s = String::from("eps,eps_top,sup_k_analytic,sup_k_discrete,psi_min,mu_lin\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{:e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.eps, r.eps_top, r.analytic, r.discrete, r.psi_min, r.mu_lin
        );
    }
    s
}
