//! `u_ε(x, y) = ½(N - |y|²) + ε Σ_j v(x, y_j)` on `ℝ × ℝ^N`, coordinates
//! ordered `(x, y_1, …, y_N)`.

use fieldkit::{Jet, ScalarField};

use crate::poly::TorsionPoly;
use crate::TorsionError;

#[derive(Debug, Clone, PartialEq)]
pub struct TorsionField {
    pub poly: TorsionPoly,
    pub n: usize,
    pub eps: f64,
}

/// Checked constructor: `N ≥ 2`, ordered positive roots, `u_ε(0) > 0`.
pub fn build_torsion_field(k: usize, roots: &[f64], n: usize, eps: f64) -> Result<TorsionField, TorsionError> {
    if n < 2 {
        return Err(TorsionError::DimensionTooSmall(n));
    }
    if roots.len() != k {
        return Err(TorsionError::RootOrder(roots.to_vec()));
    }
    TorsionField::unchecked_dimension(roots, n, eps)
}

impl TorsionField {
    /// Same as [`build_torsion_field`] but admits `N = 1`, for the control
    /// experiment where the curvature is expected to change sign.
    pub fn unchecked_dimension(roots: &[f64], n: usize, eps: f64) -> Result<Self, TorsionError> {
        if n == 0 {
            return Err(TorsionError::DimensionTooSmall(n));
        }
        if !(eps > 0.0) {
            return Err(TorsionError::InvalidInput(format!("eps = {eps}")));
        }
        let poly = TorsionPoly::new(roots)?;
        let tf = TorsionField { poly, n, eps };
        let origin = tf.value(&vec![0.0; n + 1]);
        if !(origin > 0.0) {
            return Err(TorsionError::EpsTooLarge { eps, origin });
        }
        Ok(tf)
    }

    pub fn k(&self) -> usize {
        self.poly.k()
    }

    /// `M_ε = ε^{-1/(2k)}`.
    pub fn m_eps(&self) -> f64 {
        self.eps.powf(-1.0 / (2.0 * self.k() as f64))
    }

    /// `∂xx u_ε = εN q″(t)` on the x-axis.
    pub fn uxx_on_axis(&self, t: f64) -> f64 {
        self.eps * self.n as f64 * self.poly.q(t)[2]
    }

    /// Smallest positive root of `u_ε(x, 0) = N/2 + εN q(x)`.
    pub fn axis_crossing(&self) -> Option<f64> {
        let g = |x: f64| 0.5 + self.eps * self.poly.q(x)[0];
        let step = 1e-3 * self.poly.roots[0].min(1.0);
        let mut x = 0.0;
        while g(x + step) > 0.0 {
            x += step;
            if x > 1e6 {
                return None;
            }
        }
        let (mut lo, mut hi) = (x, x + step);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }

    /// `x u_x + Σ y_j u_{y_j}` and the boundary form
    /// `-N + ε Σ (x v_t + y_j v_s - 2v)`; they agree where `u_ε = 0`.
    pub fn radial_pair(&self, p: &[f64]) -> (f64, f64) {
        let j = self.jet(p);
        let lhs: f64 = p.iter().zip(&j.grad).map(|(a, b)| a * b).sum();
        let x = p[0];
        let rhs = -(self.n as f64)
            + self.eps
                * p[1..]
                    .iter()
                    .map(|&y| {
                        let v = self.poly.v_jet(x, y);
                        x * v[1] + y * v[2] - 2.0 * v[0]
                    })
                    .sum::<f64>();
        (lhs, rhs)
    }
}

impl ScalarField for TorsionField {
    fn dim(&self) -> usize {
        self.n + 1
    }

    fn value(&self, p: &[f64]) -> f64 {
        let x = p[0];
        p[1..].iter().map(|&y| 0.5 * (1.0 - y * y) + self.eps * self.poly.f_jet(x, y)[0].re).sum()
    }

    fn jet(&self, p: &[f64]) -> Jet {
        let d = self.n + 1;
        let x = p[0];
        let mut j = Jet::zeros(d);
        for (a, &y) in p[1..].iter().enumerate() {
            let v = self.poly.v_jet(x, y);
            let r = a + 1;
            j.value += 0.5 * (1.0 - y * y) + self.eps * v[0];
            j.grad[0] += self.eps * v[1];
            j.grad[r] = -y + self.eps * v[2];
            j.hess[0] += self.eps * v[3];
            j.hess[r] = self.eps * v[4];
            j.hess[r * d] = self.eps * v[4];
            j.hess[r * d + r] = -1.0 + self.eps * v[5];
        }
        j
    }
}

/// Mean curvature of the level set through a point, from the jet of `F` in
/// coordinates `(x, y_1, …, y_N)` with `F_{y_i y_j} = 0` for `i ≠ j`:
/// `K_m = -[Σ_j (F_x² F_jj - 2F_x F_j F_xj + F_j² F_xx) + Σ_j F_j² Σ_{ℓ≠j} F_ℓℓ] / (N|∇F|³)`.
pub fn mean_curvature_of_jet(jet: &Jet) -> Result<f64, TorsionError> {
    let d = jet.dim();
    let n = d - 1;
    let g = jet.grad_norm();
    if !(g > 0.0) {
        return Err(TorsionError::SingularGradient { grad_norm: g });
    }
    let fx = jet.grad[0];
    let fxx = jet.h(0, 0);
    let diag_sum: f64 = (1..d).map(|j| jet.h(j, j)).sum();
    let mut bracket = 0.0;
    for j in 1..d {
        let fj = jet.grad[j];
        let fjj = jet.h(j, j);
        bracket += fx * fx * fjj - 2.0 * fx * fj * jet.h(0, j) + fj * fj * fxx;
        bracket += fj * fj * (diag_sum - fjj);
    }
    Ok(-bracket / (n as f64 * g * g * g))
}

pub fn mean_curvature(tf: &TorsionField, point: &[f64]) -> Result<f64, TorsionError> {
    mean_curvature_of_jet(&tf.jet(point))
}
