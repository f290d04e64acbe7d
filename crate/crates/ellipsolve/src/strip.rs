//! The discrete strip profile `u₀ʰ` on the grid's y-nodes.
//!
//! On `(-L, L)` it solves the 1-D version of the same cut-cell scheme. Beyond
//! the cut it is continued by the plain three-point recurrence, so the full
//! stencil holds at every node outside the strip. Used as the base state of
//! the perturbation-form solve, it makes the residual vanish identically
//! away from the places where `Ω_ε` differs from the strip.

use profile1d::Profile1D;

use crate::operator::{Arm, Operator};
use crate::SolveError;

const NEWTON_MAX: usize = 50;

/// Discrete profile on the y-nodes of the operator's grid.
#[derive(Debug, Clone, PartialEq)]
pub struct StripProfile {
    pub half_width: f64,
    pub y: Vec<f64>,
    pub values: Vec<f64>,
    /// First and last node strictly inside `(-L, L)`.
    pub inner: (usize, usize),
    /// Cut fractions at the two ends.
    pub theta: (f64, f64),
    /// Source weight of the 1-D scheme on each y-node (`1` off the ends).
    pub weight: Vec<f64>,
    /// `λf(b)` on each y-node.
    pub lambda_f: Vec<f64>,
}

impl StripProfile {
    fn is_inner(&self, j: usize) -> bool {
        j >= self.inner.0 && j <= self.inner.1
    }
}

/// Solves the 1-D cut-cell problem `-D²b = λf(b)` on `(-half, half)` by
/// Newton's method from the continuous profile, then extends.
pub fn strip_profile(op: &Operator, p: &Profile1D, half: f64) -> Result<StripProfile, SolveError> {
    let dim = op.dim();
    let ny = op.spec.counts[dim - 1];
    let h = op.spec.h(dim - 1);
    let y: Vec<f64> = (0..ny).map(|j| op.spec.coord(dim - 1, j)).collect();
    let f = p.nonlinearity();
    let lambda = p.lambda();
    let eps = 1e-12 * h;
    let first = y.iter().position(|&t| t > -half + eps);
    let last = y.iter().rposition(|&t| t < half - eps);
    let (j0, j1) = match (first, last) {
        (Some(a), Some(b)) if b >= a && a > 0 && b + 1 < ny => (a, b),
        _ => return Err(SolveError::InvalidInput(format!("grid does not straddle the strip of half-width {half}"))),
    };
    let th0 = ((y[j0] + half) / h).clamp(crate::operator::THETA_MIN, 1.0);
    let th1 = ((half - y[j1]) / h).clamp(crate::operator::THETA_MIN, 1.0);
    let m = j1 - j0 + 1;
    let inv = 1.0 / (h * h);
    let scale = p.half_width() / half;
    let mut b: Vec<f64> = (j0..=j1).map(|j| p.value(y[j] * scale)).collect();
    let diag0: Vec<f64> = (0..m)
        .map(|k| {
            let lo = if k == 0 { inv / th0 } else { inv };
            let hi = if k + 1 == m { inv / th1 } else { inv };
            lo + hi
        })
        .collect();
    let wt: Vec<f64> = (0..m)
        .map(|k| {
            let lo = if k == 0 { th0 } else { 1.0 };
            let hi = if k + 1 == m { th1 } else { 1.0 };
            0.5 * (lo + hi)
        })
        .collect();
    let residual = |b: &[f64]| -> Vec<f64> {
        (0..m)
            .map(|k| {
                let mut r = diag0[k] * b[k] - lambda * wt[k] * f.eval(b[k]);
                if k > 0 {
                    r -= inv * b[k - 1];
                }
                if k + 1 < m {
                    r -= inv * b[k + 1];
                }
                r
            })
            .collect()
    };
    let mut converged = false;
    for _ in 0..NEWTON_MAX {
        let r = residual(&b);
        let jd: Vec<f64> = (0..m).map(|k| diag0[k] - lambda * wt[k] * f.d1(b[k])).collect();
        let delta = thomas(&jd, -inv, &r)?;
        let mut change = 0.0f64;
        for k in 0..m {
            b[k] -= delta[k];
            change = change.max(delta[k].abs());
        }
        if change <= 1e-14 * b.iter().fold(1e-300f64, |a, v| a.max(v.abs())) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(SolveError::IterationDiverged { sup: f64::NAN, iterations: NEWTON_MAX });
    }
    let mut values = vec![0.0; ny];
    values[j0..=j1].copy_from_slice(&b);
    let step = |a: f64, c: f64| 2.0 * c - a - h * h * lambda * f.eval(c);
    // The full stencil must hold at j1 + 1, j1 + 2, ... : seed j1 + 1 from
    // the continuous profile corrected by the discrete offset at j1.
    let off1 = values[j1] - p.value(y[j1] * scale);
    let off0 = values[j0] - p.value(y[j0] * scale);
    if j1 + 1 < ny {
        values[j1 + 1] = p.value(y[j1 + 1] * scale) + off1;
        for j in j1 + 2..ny {
            values[j] = step(values[j - 2], values[j - 1]);
        }
    }
    if j0 >= 1 {
        values[j0 - 1] = p.value(y[j0 - 1] * scale) + off0;
        for j in (0..j0 - 1).rev() {
            values[j] = step(values[j + 2], values[j + 1]);
        }
    }
    let mut weight = vec![1.0; ny];
    weight[j0..=j1].copy_from_slice(&wt);
    let lambda_f = values.iter().map(|&v| lambda * f.eval(v)).collect();
    Ok(StripProfile { half_width: half, y, values, inner: (j0, j1), theta: (th0, th1), weight, lambda_f })
}

/// Base state on the unknowns and the residual `A_ε b - λwf(b)` computed
/// arm by arm (and weight by weight) against the strip stencil, so it is
/// exactly zero where the two stencils agree.
pub fn base_and_residual(op: &Operator, s: &StripProfile) -> (Vec<f64>, Vec<f64>) {
    let dim = op.dim();
    let ya = dim - 1;
    let base: Vec<f64> = (0..op.len()).map(|i| s.values[op.y_index(i)]).collect();
    let mut r = vec![0.0; op.len()];
    for i in 0..op.len() {
        let j = op.y_index(i);
        let bi = base[i];
        let mut acc = 0.0;
        for a in 0..dim {
            let inv = op.inv_h2(a);
            for upper in [false, true] {
                let here = match op.arm(i, a, upper) {
                    Arm::Node(_) => None,
                    Arm::Cut(t) => Some(bi * inv / t),
                };
                if a != ya {
                    // Strip reference: a full arm to an equal value.
                    if let Some(v) = here {
                        acc += v;
                    }
                    continue;
                }
                let jn = if upper { j + 1 } else { j - 1 };
                let strip_cut = s.is_inner(j) && !s.is_inner(jn);
                let reference = if strip_cut {
                    let t = if upper { s.theta.1 } else { s.theta.0 };
                    bi * inv / t
                } else {
                    (bi - s.values[jn]) * inv
                };
                let eps_arm = match here {
                    Some(v) => v,
                    None if !strip_cut => continue,
                    None => (bi - s.values[jn]) * inv,
                };
                acc += eps_arm - reference;
            }
        }
        r[i] = acc + (s.weight[j] - op.weight[i]) * s.lambda_f[j];
    }
    (base, r)
}

/// Tridiagonal solve with constant off-diagonal.
fn thomas(diag: &[f64], off: f64, rhs: &[f64]) -> Result<Vec<f64>, SolveError> {
    let n = diag.len();
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    for k in 0..n {
        let den = diag[k] - if k > 0 { off * cp[k - 1] } else { 0.0 };
        if den == 0.0 || !den.is_finite() {
            return Err(SolveError::NotPositiveDefinite("strip Jacobian is singular".into()));
        }
        cp[k] = off / den;
        dp[k] = (rhs[k] - if k > 0 { off * dp[k - 1] } else { 0.0 }) / den;
    }
    for k in (0..n.saturating_sub(1)).rev() {
        dp[k] -= cp[k] * dp[k + 1];
    }
    Ok(dp)
}
