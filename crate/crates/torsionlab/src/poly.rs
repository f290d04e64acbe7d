//! Exact expansion of `F_k(z) = -Π(z² - t_ℓ²)` and of `v = Re F_k`.

use std::collections::BTreeMap;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

use crate::TorsionError;

/// `F_k` as a polynomial in `w = z²` with exact coefficients, plus the
/// monomial table of `v(t, s) = Re F_k(t + is)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorsionPoly {
    pub roots: Vec<f64>,
    /// `F_k = Σ_m c_m w^m`, `m = 0..=k`.
    pub c: Vec<BigRational>,
    c_f64: Vec<f64>,
    /// `v = Σ coeff · t^a s^b`, keyed by `(a, b)`.
    pub v_terms: BTreeMap<(usize, usize), BigRational>,
}

/// Degree-`h` harmonic component `P_h = Re z^h = Σ_ℓ b_ℓ t^{h-2ℓ} s^{2ℓ}`
/// (so `b_0 = 1`) with weight `a_h` in `v = -Σ a_h P_h`.
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonic {
    pub degree: usize,
    pub a: BigRational,
    pub b: Vec<BigRational>,
}

fn exact(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite root")
}

fn binom(n: usize, k: usize) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

impl TorsionPoly {
    pub fn new(roots: &[f64]) -> Result<Self, TorsionError> {
        if roots.is_empty() || roots[0] <= 0.0 || roots.windows(2).any(|w| w[1] <= w[0]) || roots.iter().any(|r| !r.is_finite())
        {
            return Err(TorsionError::RootOrder(roots.to_vec()));
        }
        // -Π(w - r_ℓ²), built up one factor at a time.
        let mut c = vec![-BigRational::one()];
        for &t in roots {
            let r2 = exact(t) * exact(t);
            let mut next = vec![BigRational::zero(); c.len() + 1];
            for (m, cm) in c.iter().enumerate() {
                next[m + 1] += cm;
                next[m] -= cm * &r2;
            }
            c = next;
        }
        let mut v_terms = BTreeMap::new();
        for (m, cm) in c.iter().enumerate() {
            let n = 2 * m;
            for b in (0..=n).step_by(2) {
                let sign = if (b / 2) % 2 == 0 { BigRational::one() } else { -BigRational::one() };
                let coef = cm * BigRational::from_integer(binom(n, b)) * sign;
                if !coef.is_zero() {
                    *v_terms.entry((n - b, b)).or_insert_with(BigRational::zero) += coef;
                }
            }
        }
        let c_f64 = c.iter().map(|x| x.to_f64().unwrap_or(f64::NAN)).collect();
        Ok(TorsionPoly { roots: roots.to_vec(), c, c_f64, v_terms })
    }

    pub fn k(&self) -> usize {
        self.roots.len()
    }

    /// Exact Laplacian of `v`, nonzero monomials only (empty iff harmonic).
    pub fn laplacian_v(&self) -> BTreeMap<(usize, usize), BigRational> {
        let mut out: BTreeMap<(usize, usize), BigRational> = BTreeMap::new();
        for (&(a, b), coef) in &self.v_terms {
            if a >= 2 {
                *out.entry((a - 2, b)).or_insert_with(BigRational::zero) +=
                    coef * BigRational::from_integer(BigInt::from(a * (a - 1)));
            }
            if b >= 2 {
                *out.entry((a, b - 2)).or_insert_with(BigRational::zero) +=
                    coef * BigRational::from_integer(BigInt::from(b * (b - 1)));
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    pub fn harmonics(&self) -> Vec<Harmonic> {
        self.c
            .iter()
            .enumerate()
            .map(|(m, cm)| {
                let h = 2 * m;
                let b = (0..=m)
                    .map(|l| {
                        let s = if l % 2 == 0 { BigInt::one() } else { -BigInt::one() };
                        BigRational::from_integer(binom(h, 2 * l) * s)
                    })
                    .collect();
                Harmonic { degree: h, a: -cm.clone(), b }
            })
            .collect()
    }

    /// `(F, F', F'')` at `z = t + is`, as `(re, im)` pairs.
    pub fn f_jet(&self, t: f64, s: f64) -> [num::complex::Complex64; 3] {
        let z = num::complex::Complex64::new(t, s);
        let w = z * z;
        let zero = num::complex::Complex64::new(0.0, 0.0);
        let (mut q, mut q1, mut q2) = (zero, zero, zero);
        for &cm in self.c_f64.iter().rev() {
            q2 = q2 * w + 2.0 * q1;
            q1 = q1 * w + q;
            q = q * w + cm;
        }
        [q, 2.0 * z * q1, 2.0 * q1 + 4.0 * w * q2]
    }

    /// `[v, v_t, v_s, v_tt, v_ts, v_ss]`.
    pub fn v_jet(&self, t: f64, s: f64) -> [f64; 6] {
        let [f, f1, f2] = self.f_jet(t, s);
        [f.re, f1.re, -f1.im, f2.re, -f2.im, -f2.re]
    }

    /// `q(t) = v(t, 0)` and its first two derivatives, directly.
    pub fn q(&self, t: f64) -> [f64; 3] {
        let [f, f1, f2] = self.f_jet(t, 0.0);
        [f.re, f1.re, f2.re]
    }

    /// `q″(τ) = -4τ² q(τ) Σ 1/(τ² - t_ℓ²)²`, valid where `q′(τ) = 0`, `τ ≠ 0`.
    pub fn q2_identity(&self, tau: f64) -> f64 {
        let t2 = tau * tau;
        -4.0 * t2 * self.q(tau)[0] * self.roots.iter().map(|r| 1.0 / (t2 - r * r).powi(2)).sum::<f64>()
    }

    /// Critical points of `q` on `t ≥ 0`: the origin and one root of `Q′` in
    /// each gap `(t_ℓ², t_{ℓ+1}²)`, `t = √w`.
    pub fn q_critical_points(&self) -> Vec<f64> {
        let q1w = |w: f64| {
            // Q′(w) = Σ m c_m w^{m-1}
            self.c_f64.iter().enumerate().skip(1).rev().fold(0.0, |acc, (m, &cm)| acc * w + m as f64 * cm)
        };
        let mut out = vec![0.0];
        for pair in self.roots.windows(2) {
            let (mut lo, mut hi) = (pair[0] * pair[0], pair[1] * pair[1]);
            let flo = q1w(lo);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (q1w(mid) > 0.0) == (flo > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            out.push((0.5 * (lo + hi)).sqrt());
        }
        out
    }

    /// Maxima of `q` over ℝ (the even symmetry doubles the nonzero ones).
    pub fn q_maxima(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for t in self.q_critical_points() {
            if self.q(t)[2] < 0.0 {
                if t == 0.0 {
                    out.push(0.0);
                } else {
                    out.push(-t);
                    out.push(t);
                }
            }
        }
        out.sort_by(f64::total_cmp);
        out
    }
}
