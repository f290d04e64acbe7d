//! The cosh-mode perturbation `φ = Σ_j Σ_ℓ α_ℓ cosh(√μ_ℓ x_j) ω_ℓ(y)` and
//! the superposition `U = u₀(y) + εφ`.
//!
//! The x-dependence is evaluated in closed form; the y-dependence comes from
//! the C² mode tables. Mixed `∂x_i∂x_j` terms vanish identically for `i ≠ j`.

use coshcombo::CoshCombo;
use profile1d::{Mode, Profile1D};

use crate::field::{Jet, ScalarField};
use crate::FieldError;

const MU_MATCH: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct PhiField {
    n: usize,
    alphas: Vec<f64>,
    rates: Vec<f64>,
    modes: Vec<Mode>,
}

/// Builds `φ` on `ℝ^{N+1}` from the combination and one mode per frequency.
pub fn assemble_phi(combo: &CoshCombo, modes: &[Mode], n: usize) -> Result<PhiField, FieldError> {
    PhiField::from_parts(combo.alphas.clone(), modes.to_vec(), n).and_then(|phi| {
        if modes.len() != combo.mus.len() {
            return Err(FieldError::ModeMismatch(format!(
                "{} modes for {} frequencies",
                modes.len(),
                combo.mus.len()
            )));
        }
        for (l, (m, &mu)) in modes.iter().zip(&combo.mus).enumerate() {
            if (m.mu() - mu).abs() > MU_MATCH * mu.abs().max(1.0) {
                return Err(FieldError::ModeMismatch(format!(
                    "mode {l} has mu = {} but the combination needs {mu}",
                    m.mu()
                )));
            }
        }
        Ok(phi)
    })
}

impl PhiField {
    /// `φ` from explicit coefficients; `alphas[ℓ]` multiplies `modes[ℓ]`.
    pub fn from_parts(alphas: Vec<f64>, modes: Vec<Mode>, n: usize) -> Result<Self, FieldError> {
        if n == 0 {
            return Err(FieldError::InvalidInput("N must be at least 1".into()));
        }
        if alphas.len() != modes.len() || modes.is_empty() {
            return Err(FieldError::ModeMismatch(format!(
                "{} coefficients for {} modes",
                alphas.len(),
                modes.len()
            )));
        }
        let rates = modes.iter().map(|m| m.mu().sqrt()).collect();
        Ok(PhiField { n, alphas, rates, modes })
    }

    /// Same field with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.alphas.iter_mut().for_each(|a| *a *= factor);
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }
    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }
    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    fn mode_vals(&self, y: f64) -> Vec<(f64, f64, f64)> {
        self.modes.iter().map(|m| m.eval(y)).collect()
    }
}

impl ScalarField for PhiField {
    fn dim(&self) -> usize {
        self.n + 1
    }

    fn value(&self, p: &[f64]) -> f64 {
        let y = p[self.n];
        let mut s = 0.0;
        for (l, m) in self.modes.iter().enumerate() {
            let c: f64 = p[..self.n].iter().map(|&x| (self.rates[l] * x).cosh()).sum();
            s += self.alphas[l] * c * m.value(y);
        }
        s
    }

    fn jet(&self, p: &[f64]) -> Jet {
        let n = self.n;
        let d = n + 1;
        let y = p[n];
        let w = self.mode_vals(y);
        let mut j = Jet::zeros(d);
        for (l, &(wv, w1, w2)) in w.iter().enumerate() {
            let (a, r) = (self.alphas[l], self.rates[l]);
            for (i, &x) in p[..n].iter().enumerate() {
                let (ch, sh) = ((r * x).cosh(), (r * x).sinh());
                j.value += a * ch * wv;
                j.grad[i] += a * r * sh * wv;
                j.grad[n] += a * ch * w1;
                j.hess[i * d + i] += a * r * r * ch * wv;
                j.hess[i * d + n] += a * r * sh * w1;
                j.hess[n * d + n] += a * ch * w2;
            }
        }
        for i in 0..n {
            j.hess[n * d + i] = j.hess[i * d + n];
        }
        j
    }
}

/// `U = u₀(y) + εφ`.
#[derive(Clone)]
pub struct Superposed<F> {
    profile: Profile1D,
    phi: F,
    eps: f64,
}

/// Requires `ε ≥ 0` and `U(0) > 0`.
pub fn superpose<F: ScalarField>(p: &Profile1D, phi: F, eps: f64) -> Result<Superposed<F>, FieldError> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(FieldError::InvalidInput(format!("eps = {eps} must be finite and non-negative")));
    }
    let origin = vec![0.0; phi.dim()];
    let value = p.value(0.0) + eps * phi.value(&origin);
    if !(value > 0.0) {
        return Err(FieldError::OriginNotPositive { value });
    }
    Ok(Superposed { profile: p.clone(), phi, eps })
}

impl<F> Superposed<F> {
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn profile(&self) -> &Profile1D {
        &self.profile
    }
    pub fn phi(&self) -> &F {
        &self.phi
    }
}

impl<F: ScalarField> ScalarField for Superposed<F> {
    fn dim(&self) -> usize {
        self.phi.dim()
    }

    fn value(&self, p: &[f64]) -> f64 {
        let y = p[p.len() - 1];
        self.profile.value(y) + self.eps * self.phi.value(p)
    }

    fn jet(&self, p: &[f64]) -> Jet {
        let d = p.len();
        let (u, u1, u2) = self.profile.eval(p[d - 1]);
        let mut j = self.phi.jet(p);
        j.value *= self.eps;
        j.grad.iter_mut().for_each(|g| *g *= self.eps);
        j.hess.iter_mut().for_each(|h| *h *= self.eps);
        j.value += u;
        j.grad[d - 1] += u1;
        j.hess[d * d - 1] += u2;
        j
    }

    fn kind(&self) -> crate::FieldKind {
        self.phi.kind()
    }
}
