//! How small is "ε small enough".
//!
//! The box argument for `Ω_ε` works once the top mode `−cosh(√μ₁x)ω₁(y)`
//! dominates `φ` beyond `M_ε`. This module turns the three hypotheses used in
//! that argument into explicit bounds on the top coefficient `ε`:
//!
//! * beyond `M_ε` the lower modes are at most a quarter of the top mode,
//! * `u₀(±(1+η)) + εφ < u₀(±(1+η))/2` on the horizontal faces,
//! * `u₀(0) + εφ(0) ≥ u₀(0)/2` at the origin.
//!
//! `ε₀` is the smallest of them; pipelines express their `ε` in units of it.

use profile1d::Profile1D;

use crate::field::ScalarField;
use crate::phi::PhiField;
use crate::FieldError;

/// Lower-mode dominance ratio required beyond `M_ε`.
pub const DOMINANCE: f64 = 0.25;
const Y_SAMPLES: usize = 401;
const X_SAMPLES: usize = 4001;

#[derive(Debug, Clone, PartialEq)]
pub struct Smallness {
    pub eps0: f64,
    /// Point beyond which the lower modes are dominated.
    pub x0: f64,
    pub eps_box: f64,
    pub eps_slab: f64,
    pub eps_origin: f64,
    pub eps_cross: f64,
    pub eta: f64,
}

/// Thresholds for `U = u₀ + εφ` on `|y| ≤ 1+η`. The top mode of `phi` must
/// carry coefficient `-1`.
pub fn smallness_threshold(p: &Profile1D, phi: &PhiField, eta: f64) -> Result<Smallness, FieldError> {
    let modes = phi.modes();
    let alphas = phi.alphas();
    let top = (0..modes.len())
        .max_by(|&a, &b| modes[a].mu().total_cmp(&modes[b].mu()))
        .ok_or_else(|| FieldError::InvalidInput("no modes".into()))?;
    if (alphas[top] + 1.0).abs() > 1e-12 {
        return Err(FieldError::InvalidInput(format!("top coefficient is {}, expected -1", alphas[top])));
    }
    let yb = p.half_width() + eta;
    let ys: Vec<f64> = (0..Y_SAMPLES).map(|i| -yb + 2.0 * yb * i as f64 / (Y_SAMPLES - 1) as f64).collect();
    let r1 = modes[top].mu().sqrt();
    let rho: Vec<f64> = modes
        .iter()
        .map(|m| ys.iter().map(|&y| m.value(y) / modes[top].value(y)).fold(0.0, f64::max))
        .collect();
    // Each cosh(a x)/cosh(r1 x) with a < r1 decreases on x > 0, so g does.
    let g = |x: f64| -> f64 {
        (0..modes.len())
            .filter(|&l| l != top)
            .map(|l| alphas[l].abs() * rho[l] * (modes[l].mu().sqrt() * x).cosh() / (r1 * x).cosh())
            .sum()
    };
    let x0 = if g(0.0) <= DOMINANCE {
        0.0
    } else {
        let mut hi = 1.0;
        while g(hi) > DOMINANCE {
            hi *= 2.0;
            if hi > 1e7 {
                return Err(FieldError::InvalidInput("lower modes never become dominated".into()));
            }
        }
        let mut lo = 0.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > DOMINANCE {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let norm = p.sup_norm();
    let eps_box = 3.0 * norm * (-r1 * x0).exp() / modes[top].value(yb);

    let n = phi.n();
    // One-coordinate profile φ̃(t, y) on t ≥ 0.
    let single = |t: f64, y: f64| -> f64 {
        modes.iter().zip(alphas).map(|(m, a)| a * (m.mu().sqrt() * t).cosh() * m.value(y)).sum()
    };
    let span = x0.max(1.0) * 1.5;
    let sup_plus = |y: f64| -> f64 {
        (0..X_SAMPLES).map(|i| single(span * i as f64 / (X_SAMPLES - 1) as f64, y)).fold(0.0, f64::max)
    };
    let face = sup_plus(yb).max(sup_plus(-yb));
    let u_face = p.value(yb);
    if !(u_face < 0.0) {
        return Err(FieldError::InvalidInput(format!("u0(1+eta) = {u_face} is not negative")));
    }
    let eps_slab = if face > 0.0 { -u_face / (2.0 * n as f64 * face) } else { f64::INFINITY };
    let phi0 = phi.value(&vec![0.0; n + 1]);
    let eps_origin = if phi0 < 0.0 { p.value(0.0) / (2.0 * -phi0) } else { f64::INFINITY };
    let eps_cross = if n > 1 {
        let s = ys.iter().map(|&y| sup_plus(y)).fold(0.0, f64::max);
        if s > 0.0 { norm / (8.0 * (n - 1) as f64 * s) } else { f64::INFINITY }
    } else {
        f64::INFINITY
    };
    let eps0 = eps_box.min(eps_slab).min(eps_origin).min(eps_cross);
    Ok(Smallness { eps0, x0, eps_box, eps_slab, eps_origin, eps_cross, eta })
}
