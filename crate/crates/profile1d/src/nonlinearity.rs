//! Nonlinearities `f` with first and second derivatives.
//!
//! The constructions need `f` increasing, convex and positive at zero. The
//! flags are computed by sampling rather than trusted from the caller.

use std::fmt;
use std::sync::Arc;

use crate::ProfileError;

type Scalar = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Range on which monotonicity and convexity flags are sampled.
pub const FLAG_RANGE: (f64, f64) = (-1.0, 4.0);
const FLAG_SAMPLES: usize = 501;

#[derive(Clone)]
pub struct Nonlinearity {
    name: String,
    eval: Scalar,
    d1: Scalar,
    d2: Scalar,
    is_increasing: bool,
    is_convex: bool,
}

impl fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("name", &self.name)
            .field("is_increasing", &self.is_increasing)
            .field("is_convex", &self.is_convex)
            .finish()
    }
}

impl Nonlinearity {
    /// Build from closures; flags are sampled on [`FLAG_RANGE`].
    pub fn new<F, D1, D2>(name: impl Into<String>, eval: F, d1: D1, d2: D2) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D1: Fn(f64) -> f64 + Send + Sync + 'static,
        D2: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let (lo, hi) = FLAG_RANGE;
        let ts: Vec<f64> = (0..FLAG_SAMPLES)
            .map(|i| lo + (hi - lo) * i as f64 / (FLAG_SAMPLES - 1) as f64)
            .collect();
        let is_increasing = ts.iter().all(|&t| d1(t) >= 0.0);
        let is_convex = ts.iter().all(|&t| d2(t) >= 0.0);
        Nonlinearity {
            name: name.into(),
            eval: Arc::new(eval),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
            is_increasing,
            is_convex,
        }
    }

    /// `f ≡ c` (torsion type).
    pub fn constant(c: f64) -> Self {
        Self::new(format!("constant({c})"), move |_| c, |_| 0.0, |_| 0.0)
    }

    /// Gelfand nonlinearity `f(u) = e^u`.
    pub fn exponential() -> Self {
        Self::new("exponential", f64::exp, f64::exp, f64::exp)
    }

    /// `f(u) = (1+u)^p` for `u > -1`, continued linearly below `u = -1/2` so the
    /// shooting never meets a singularity on the negative side.
    pub fn power(p: f64) -> Self {
        const KNOT: f64 = -0.5;
        let base = move |u: f64| (1.0 + u).powf(p);
        let slope = move |u: f64| p * (1.0 + u).powf(p - 1.0);
        let curv = move |u: f64| p * (p - 1.0) * (1.0 + u).powf(p - 2.0);
        Self::new(
            format!("power({p})"),
            move |u| if u >= KNOT { base(u) } else { base(KNOT) + slope(KNOT) * (u - KNOT) },
            move |u| if u >= KNOT { slope(u) } else { slope(KNOT) },
            move |u| if u >= KNOT { curv(u) } else { 0.0 },
        )
    }

    /// Natural cubic spline through `(t_i, f_i)`, extended linearly outside the
    /// table.
    pub fn table(ts: &[f64], fs: &[f64]) -> Result<Self, ProfileError> {
        if ts.len() != fs.len() || ts.len() < 3 {
            return Err(ProfileError::InvalidInput(
                "table needs at least 3 matching (t, f) samples".into(),
            ));
        }
        if ts.windows(2).any(|w| w[1] <= w[0]) {
            return Err(ProfileError::InvalidInput("table abscissae must increase".into()));
        }
        let spline = Arc::new(NaturalSpline::new(ts.to_vec(), fs.to_vec()));
        let (s0, s1, s2) = (spline.clone(), spline.clone(), spline);
        Ok(Self::new(
            "table",
            move |t| s0.eval(t).0,
            move |t| s1.eval(t).1,
            move |t| s2.eval(t).2,
        ))
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t)
    }
    pub fn d1(&self, t: f64) -> f64 {
        (self.d1)(t)
    }
    pub fn d2(&self, t: f64) -> f64 {
        (self.d2)(t)
    }
    pub fn is_increasing(&self) -> bool {
        self.is_increasing
    }
    pub fn is_convex(&self) -> bool {
        self.is_convex
    }

    /// Checks increasing, convex and `f(0) > 0`.
    pub fn check_hypotheses(&self) -> Result<(), ProfileError> {
        let mut missing = Vec::new();
        if !self.is_increasing {
            missing.push("increasing");
        }
        if !self.is_convex {
            missing.push("convex");
        }
        if self.eval(0.0) <= 0.0 {
            missing.push("f(0) > 0");
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(ProfileError::Hypothesis {
                name: self.name.clone(),
                missing: missing.join(", "),
            })
        }
    }
}

/// Natural cubic spline with linear continuation beyond the end knots.
#[derive(Debug, Clone)]
struct NaturalSpline {
    t: Vec<f64>,
    f: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    fn new(t: Vec<f64>, f: Vec<f64>) -> Self {
        let n = t.len();
        let mut m = vec![0.0; n];
        // Tridiagonal system for interior second derivatives.
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        for i in 1..n - 1 {
            let h0 = t[i] - t[i - 1];
            let h1 = t[i + 1] - t[i];
            let a = h0 / 6.0;
            let b = (h0 + h1) / 3.0;
            let cc = h1 / 6.0;
            let r = (f[i + 1] - f[i]) / h1 - (f[i] - f[i - 1]) / h0;
            let denom = b - a * c[i - 1];
            c[i] = cc / denom;
            d[i] = (r - a * d[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d[i] - c[i] * m[i + 1];
        }
        NaturalSpline { t, f, m }
    }

    fn eval(&self, x: f64) -> (f64, f64, f64) {
        let n = self.t.len();
        let (t, f, m) = (&self.t, &self.f, &self.m);
        if x < t[0] {
            let s = self.eval(t[0]).1;
            return (f[0] + s * (x - t[0]), s, 0.0);
        }
        if x > t[n - 1] {
            let s = self.eval(t[n - 1]).1;
            return (f[n - 1] + s * (x - t[n - 1]), s, 0.0);
        }
        let i = match t.partition_point(|&v| v <= x) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let h = t[i + 1] - t[i];
        let a = (t[i + 1] - x) / h;
        let b = (x - t[i]) / h;
        let v = a * f[i]
            + b * f[i + 1]
            + ((a * a * a - a) * m[i] + (b * b * b - b) * m[i + 1]) * h * h / 6.0;
        let d1 = (f[i + 1] - f[i]) / h
            + (-(3.0 * a * a - 1.0) * m[i] + (3.0 * b * b - 1.0) * m[i + 1]) * h / 6.0;
        let d2 = a * m[i] + b * m[i + 1];
        (v, d1, d2)
    }
}
