//! Even transverse modes `-ω'' - λ f'(u₀) ω = μ ω` normalized by `ω(0) = 1`.
//!
//! The even solution is unique up to scale, so it is integrated as an initial
//! value problem from the origin together with the profile itself. This is the
//! boundary value problem with equal data at `±(L+σ)`, rescaled; it is
//! singular exactly when the even solution vanishes at the ends.

use crate::hermite::HermiteTable;
use crate::ode::{integrate, OdeFailure};
use crate::profile::Profile1D;
use crate::ProfileError;

#[derive(Debug, Clone)]
pub struct Mode {
    mu: f64,
    table: HermiteTable,
}

impl Mode {
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn omega(&self) -> &[f64] {
        &self.table.v
    }
    pub fn omega_d1(&self) -> &[f64] {
        &self.table.d1
    }
    pub fn omega_d2(&self) -> &[f64] {
        &self.table.d2
    }
    pub fn table(&self) -> &HermiteTable {
        &self.table
    }
    /// `(ω, ω', ω'')` at `y`.
    pub fn eval(&self, y: f64) -> (f64, f64, f64) {
        self.table.eval(y)
    }
    pub fn value(&self, y: f64) -> f64 {
        self.table.eval(y).0
    }
    /// Minimum of the sampled mode over `[-r, r]`.
    pub fn min_on(&self, r: f64) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.table.len() {
            if self.table.node(i).abs() <= r + 1e-12 {
                best = best.min(self.table.v[i]);
            }
        }
        best.min(self.value(r)).min(self.value(-r))
    }
}

/// Mode for frequency `mu` on the profile's grid.
pub fn omega_mode(p: &Profile1D, mu: f64) -> Result<Mode, ProfileError> {
    if !(mu > 0.0 && mu < p.mu0()) {
        return Err(ProfileError::MuOutOfRange { mu, mu0: p.mu0() });
    }
    let f = p.nonlinearity();
    let lambda = p.lambda();
    let base = p.table();
    let n = base.len();
    let half = (n - 1) / 2;
    let h = base.spacing();
    let g = |_t: f64, s: &[f64; 4]| {
        [s[1], -lambda * f.eval(s[0]), s[3], -(lambda * f.d1(s[0]) + mu) * s[2]]
    };

    let mut pos = vec![(1.0, 0.0, 0.0); half + 1];
    pos[0].2 = -(lambda * f.d1(p.height()) + mu);
    let mut state = [p.height(), 0.0, 1.0, 0.0];
    let mut hint = 0.0;
    for i in 1..=half {
        let (t0, t1) = ((i - 1) as f64 * h, i as f64 * h);
        state = integrate(&g, t0, state, t1, p.ode_tolerance(), &mut hint).map_err(|e| {
            let y = match e {
                OdeFailure::BlowUp(t) | OdeFailure::Stalled(t) => t,
            };
            ProfileError::SingularBVP { mu, y }
        })?;
        if state[2] <= 0.0 {
            return Err(ProfileError::SingularBVP { mu, y: t1 });
        }
        let curv = -(lambda * f.d1(state[0]) + mu) * state[2];
        pos[i] = (state[2], state[3], curv);
    }

    let mut v = vec![0.0; n];
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for (i, &(w, dw, ddw)) in pos.iter().enumerate() {
        v[half + i] = w;
        v[half - i] = w;
        d1[half + i] = dw;
        d1[half - i] = -dw;
        d2[half + i] = ddw;
        d2[half - i] = ddw;
    }
    Ok(Mode { mu, table: HermiteTable::new(base.node(0), h, v, d1, d2) })
}
