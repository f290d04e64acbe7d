//! Cosh combinations `F(t) = Σ α_ℓ cosh(δ ℓ t)` with prescribed maxima.
//!
//! A polynomial `P` of degree `n = 2k` is built whose derivative changes sign
//! exactly at the targets `τ_1 < … < τ_k` (maxima) and at their midpoints
//! (minima). Substituting `x = cosh(δt)` and expanding the powers of cosh into
//! multiple-angle terms gives `F`, whose maxima sit at `arccosh(τ_i)/δ`.
//! Coefficients are kept as exact rationals until the very end.

use std::fmt::Write as _;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

/// Largest supported degree for exact coefficient arithmetic.
pub const MAX_DEGREE: usize = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComboError {
    #[error("targets must be distinct, increasing and above 1: {0:?}")]
    BadTargets(Vec<f64>),
    #[error("constructed polynomial is not concave at target {tau} (P'' = {second})")]
    BadInterleaving { tau: f64, second: f64 },
    #[error("frequency ladder violated: mu0 = {mu0} must lie in (0, 16)")]
    LadderViolation { mu0: f64 },
    #[error("degenerate critical point at t = {t} (F'' = {second})")]
    DegenerateCritical { t: f64, second: f64 },
    #[error("found {found} nondegenerate maxima, expected at least {expected}")]
    TooFewMaxima { found: usize, expected: usize },
    #[error("degree {0} exceeds the supported maximum {MAX_DEGREE}")]
    DegreeTooLarge(usize),
}

/// Multiple-angle expansion of `cosh^m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoshExpansion {
    pub m: usize,
    /// `c(m, ℓ)` for `ℓ = 0..=m`; entry 0 is the constant term.
    pub coeffs: Vec<BigRational>,
}

impl CoshExpansion {
    pub fn constant(&self) -> &BigRational {
        &self.coeffs[0]
    }
    pub fn coeff(&self, l: usize) -> &BigRational {
        &self.coeffs[l]
    }
    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(l, c)| c.to_f64().unwrap_or(f64::NAN) * (l as f64 * t).cosh())
            .sum()
    }
}

fn binomial(n: usize, k: usize) -> BigInt {
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

fn pow2(e: usize) -> BigInt {
    BigInt::one() << e
}

/// `cosh^m t = Σ_ℓ c(m,ℓ) cosh(ℓt)` with exact coefficients; parity-mismatched
/// `ℓ` get zero and the constant (even `m`) is stored at index 0.
pub fn cosh_expand(m: usize) -> CoshExpansion {
    assert!(m >= 1, "cosh_expand needs m >= 1");
    let mut coeffs = vec![BigRational::zero(); m + 1];
    for l in (0..=m).rev().step_by(2) {
        let c = binomial(m, (m - l) / 2);
        coeffs[l] = if l == 0 {
            BigRational::new(c, pow2(m))
        } else {
            BigRational::new(c, pow2(m - 1))
        };
    }
    CoshExpansion { m, coeffs }
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite target")
}

fn poly_mul_linear(p: &[BigRational], root: &BigRational) -> Vec<BigRational> {
    let mut out = vec![BigRational::zero(); p.len() + 1];
    for (i, c) in p.iter().enumerate() {
        out[i + 1] += c;
        out[i] -= c * root;
    }
    out
}

fn poly_eval(p: &[BigRational], x: &BigRational) -> BigRational {
    p.iter().rev().fold(BigRational::zero(), |acc, c| acc * x + c)
}

fn poly_derivative(p: &[BigRational]) -> Vec<BigRational> {
    p.iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| c * BigRational::from_integer(BigInt::from(i)))
        .collect()
}

/// Polynomial `P` of degree `2k` with exact rational coefficients `a_0..a_n`
/// (`a_0 = 0`, `a_n = -1`).
#[derive(Debug, Clone, PartialEq)]
pub struct TargetPolynomial {
    pub taus: Vec<f64>,
    pub coeffs: Vec<BigRational>,
}

impl TargetPolynomial {
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }
    /// `a_1..a_n` as floating point.
    pub fn poly_a(&self) -> Vec<f64> {
        self.coeffs[1..].iter().map(|c| c.to_f64().unwrap_or(f64::NAN)).collect()
    }
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c.to_f64().unwrap_or(f64::NAN))
    }
    pub fn derivative_exact(&self) -> Vec<BigRational> {
        poly_derivative(&self.coeffs)
    }
    /// Positive rescaling; the argmax set is unchanged.
    pub fn scaled(&self, factor: f64) -> TargetPolynomial {
        let f = exact(factor);
        TargetPolynomial {
            taus: self.taus.clone(),
            coeffs: self.coeffs.iter().map(|c| c * &f).collect(),
        }
    }
}

/// Builds `P` with `P' = -c Π(t-τ_i) Π(t-s_j)`, `s_j = (τ_j+τ_{j+1})/2`,
/// normalized so the leading coefficient is `-1`.
///
/// `P'` then has degree `2k-1`, so `P` has degree `n = 2k`, `P' > 0` on
/// `(-∞, τ_1)` and the signs alternate through the roots, giving maxima at
/// the `τ_i` and minima at the `s_j`.
pub fn build_polynomial(taus: &[f64]) -> Result<TargetPolynomial, ComboError> {
    let ok = !taus.is_empty()
        && taus.iter().all(|t| t.is_finite() && *t > 1.0)
        && taus.windows(2).all(|w| w[1] > w[0]);
    if !ok {
        return Err(ComboError::BadTargets(taus.to_vec()));
    }
    let k = taus.len();
    if 2 * k > MAX_DEGREE {
        return Err(ComboError::DegreeTooLarge(2 * k));
    }
    let ex: Vec<BigRational> = taus.iter().map(|&t| exact(t)).collect();
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let mut roots = ex.clone();
    for w in ex.windows(2) {
        roots.push((&w[0] + &w[1]) * &half);
    }
    let mut dp = vec![-BigRational::one()];
    for r in &roots {
        dp = poly_mul_linear(&dp, r);
    }
    // Integrate with zero constant, then rescale leading coefficient to -1.
    let n = 2 * k;
    let mut coeffs = vec![BigRational::zero(); n + 1];
    for (i, c) in dp.iter().enumerate() {
        coeffs[i + 1] = c / BigRational::from_integer(BigInt::from(i + 1));
    }
    let lead = -coeffs[n].clone();
    for c in coeffs.iter_mut() {
        *c = &*c / &lead;
    }
    let second = poly_derivative(&poly_derivative(&coeffs));
    for (t, te) in taus.iter().zip(&ex) {
        let v = poly_eval(&second, te);
        if !v.is_negative() {
            return Err(ComboError::BadInterleaving { tau: *t, second: v.to_f64().unwrap_or(f64::NAN) });
        }
    }
    Ok(TargetPolynomial { taus: taus.to_vec(), coeffs })
}

/// Default targets `τ_i = cosh(i)`, so the maxima land at `t_i = i/δ`.
pub fn default_taus(k: usize) -> Vec<f64> {
    (1..=k).map(|i| (i as f64).cosh()).collect()
}

/// Assembled combination with its frequency ladder.
#[derive(Debug, Clone)]
pub struct CoshCombo {
    pub k: usize,
    pub n: usize,
    pub delta: f64,
    pub mu0: f64,
    pub taus: Vec<f64>,
    /// `a_1..a_n` of the target polynomial.
    pub poly_a: Vec<f64>,
    /// `c(m, ℓ)` for `m = 1..=n`.
    pub c_table: Vec<CoshExpansion>,
    /// `α_ℓ` for `ℓ = 1..=n` (index `ℓ - 1`); the last one is exactly `-1`.
    pub alphas: Vec<f64>,
    pub alphas_exact: Vec<BigRational>,
    /// `μ_ℓ = (δℓ)²` for `ℓ = 1..=n`.
    pub mus: Vec<f64>,
    /// Predicted maxima `arccosh(τ_i)/δ`.
    pub maxima_t: Vec<f64>,
}

/// `α_ℓ = Σ_j a_j c(j, ℓ)` without the constant, rescaled so `α_n = -1`,
/// with `δ = μ₀/(8n)` and `μ_ℓ = (δℓ)²`.
pub fn assemble_combo(poly: &TargetPolynomial, mu0: f64) -> Result<CoshCombo, ComboError> {
    if !(mu0 > 0.0 && mu0 < 16.0) {
        return Err(ComboError::LadderViolation { mu0 });
    }
    let n = poly.degree();
    let k = poly.taus.len();
    let c_table: Vec<CoshExpansion> = (1..=n).map(cosh_expand).collect();
    let mut alphas_exact = vec![BigRational::zero(); n];
    for (j, a) in poly.coeffs.iter().enumerate().skip(1) {
        for l in 1..=j {
            alphas_exact[l - 1] += a * c_table[j - 1].coeff(l);
        }
    }
    let top = -alphas_exact[n - 1].clone();
    for a in alphas_exact.iter_mut() {
        *a = &*a / &top;
    }
    let delta = mu0 / (8.0 * n as f64);
    let mus: Vec<f64> = (1..=n).map(|l| (delta * l as f64).powi(2)).collect();
    if mus[n - 1] >= mu0 / 4.0 {
        return Err(ComboError::LadderViolation { mu0 });
    }
    let alphas = alphas_exact.iter().map(|a| a.to_f64().unwrap_or(f64::NAN)).collect();
    Ok(CoshCombo {
        k,
        n,
        delta,
        mu0,
        taus: poly.taus.clone(),
        poly_a: poly.poly_a(),
        c_table,
        alphas,
        alphas_exact,
        mus,
        maxima_t: poly.taus.iter().map(|t| t.acosh() / delta).collect(),
    })
}

impl CoshCombo {
    pub fn build(taus: &[f64], mu0: f64) -> Result<CoshCombo, ComboError> {
        assemble_combo(&build_polynomial(taus)?, mu0)
    }

    /// Frequencies `√μ_ℓ = δℓ`.
    pub fn rates(&self) -> Vec<f64> {
        (1..=self.n).map(|l| self.delta * l as f64).collect()
    }

    /// Derivatives of `F` of order `0..=3` at `t`.
    pub fn derivs(&self, t: f64) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (l, a) in self.alphas.iter().enumerate() {
            let r = self.delta * (l + 1) as f64;
            let (c, s) = ((r * t).cosh(), (r * t).sinh());
            out[0] += a * c;
            out[1] += a * r * s;
            out[2] += a * r * r * c;
            out[3] += a * r * r * r * s;
        }
        out
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivs(t)[0]
    }

    /// Largest frequency `μ_n`; the ladder keeps it below `μ₀/4`.
    pub fn top_mu(&self) -> f64 {
        self.mus[self.n - 1]
    }

    /// `max |F|` on `[0, t_k]`, attained at a critical point (`0`, a target
    /// maximum or an interleaved minimum).
    pub fn peak_amplitude(&self) -> f64 {
        let mut cands = vec![0.0];
        cands.extend(self.maxima_t.iter().copied());
        for w in self.taus.windows(2) {
            cands.push((0.5 * (w[0] + w[1])).acosh() / self.delta);
        }
        cands.iter().map(|&t| self.eval(t).abs()).fold(0.0, f64::max)
    }

    /// CSV dump `l,mu,alpha`.
    pub fn csv(&self) -> String {
        let mut s = String::from("l,mu,alpha\n");
        for (i, (m, a)) in self.mus.iter().zip(&self.alphas).enumerate() {
            let _ = writeln!(s, "{},{:.15e},{:.15e}", i + 1, m, a);
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "cosh combination: k = {}, n = {}, delta = {:.6e}, mu0 = {:.6e}\n",
            self.k, self.n, self.delta, self.mu0
        );
        for (i, t) in self.maxima_t.iter().enumerate() {
            let _ = writeln!(s, "  target maximum {}: tau = {:.6}, t = {:.9}", i + 1, self.taus[i], t);
        }
        let _ = writeln!(s, "  top frequency {:.6e} < mu0/4 = {:.6e}", self.top_mu(), self.mu0 / 4.0);
        s
    }
}

/// A maximum found by [`verify_maxima`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maximum {
    pub t: f64,
    pub value: f64,
    pub second: f64,
}

/// Isolates every root of `F'` on `(0, t_k + margin)` and returns the maxima.
/// A root whose `|F''|` is below the relative margin is an error.
pub fn verify_maxima(combo: &CoshCombo) -> Result<Vec<Maximum>, ComboError> {
    let t_end = combo.maxima_t.last().copied().unwrap_or(0.0) * 1.25 + 1.0 / combo.delta;
    let samples = 20_000usize;
    let h = t_end / samples as f64;
    let scale = combo.peak_amplitude().max(1.0) * combo.delta * combo.delta;
    let margin = 1e-12 * scale;
    let d1 = |t: f64| combo.derivs(t)[1];
    let mut out = Vec::new();
    let mut prev = d1(h * 0.5);
    for i in 1..samples {
        let (a, b) = (h * (i as f64 - 0.5), h * (i as f64 + 0.5));
        let cur = d1(b);
        if prev == 0.0 || prev.signum() != cur.signum() {
            let (mut lo, mut hi) = (a, b);
            let slo = d1(lo).signum();
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if d1(mid).signum() == slo {
                    lo = mid
                } else {
                    hi = mid
                }
            }
            let t = 0.5 * (lo + hi);
            let d = combo.derivs(t);
            if d[2].abs() <= margin {
                return Err(ComboError::DegenerateCritical { t, second: d[2] });
            }
            if d[2] < 0.0 {
                out.push(Maximum { t, value: d[0], second: d[2] });
            }
        }
        prev = cur;
    }
    if out.len() < combo.k {
        return Err(ComboError::TooFewMaxima { found: out.len(), expected: combo.k });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn low_order_expansions() {
        let e2 = cosh_expand(2);
        assert_eq!(e2.coeff(2), &q(1, 2));
        assert_eq!(e2.constant(), &q(1, 2));
        assert_eq!(e2.coeff(1), &q(0, 1));
        let e3 = cosh_expand(3);
        assert_eq!(e3.coeff(3), &q(1, 4));
        assert_eq!(e3.coeff(1), &q(3, 4));
        assert!(e3.constant().is_zero());
    }

    #[test]
    fn single_target_is_quadratic() {
        let p = build_polynomial(&[2.0]).unwrap();
        assert_eq!(p.degree(), 2);
        assert_eq!(p.coeffs[2], q(-1, 1));
        assert_eq!(p.coeffs[1], q(4, 1));
    }

    #[test]
    fn rejects_bad_targets() {
        assert!(build_polynomial(&[0.5]).is_err());
        assert!(build_polynomial(&[3.0, 2.0]).is_err());
        assert!(build_polynomial(&[]).is_err());
    }
}
