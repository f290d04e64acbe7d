//! Expansion `u_ε = u₀ + εφ + Ψ_ε`, barrier comparisons and the strip bound.
//!
//! Two remainders are measured on a compact box `K`: the analytic one,
//! `u_h - u₀ - εφ`, and the discrete one `Ψʰ`, the exactly quadratic part of
//! the perturbation-form solution. The analytic remainder carries the
//! `O(h²)` discretization error of both `u₀` and `φ`, which dwarfs the
//! `O(ε²)` term for small coefficients; the discrete one does not.

use coshcombo::CoshCombo;
use fieldkit::{Jet, ScalarField};
use profile1d::{omega_mode, solve_profile_on, Mode, ProfileOptions, Profile1D};

use crate::solve::{taylor_remainder, DiscreteSolution};
use crate::strip::strip_profile;
use crate::SolveError;

/// Closed box `[lo, hi]` in grid coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct KBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub eps: f64,
    pub nodes_in_k: usize,
    /// `sup_K |u_h - u₀ - εφ|`.
    pub analytic: f64,
    /// `sup_K |Ψʰ|` when the solution carries a split.
    pub discrete: Option<f64>,
    /// `min Ψʰ/ε` over the whole domain.
    pub psi_min: Option<f64>,
}

/// Remainders of the first-order expansion with coefficient `eps` on `K`.
pub fn expansion_residual<F: ScalarField + ?Sized>(
    sol: &DiscreteSolution,
    p: &Profile1D,
    phi: &F,
    eps: f64,
    k: &KBox,
) -> Result<ExpansionReport, SolveError> {
    let op = &sol.op;
    let spec = &op.spec;
    let dim = spec.dim();
    if k.lo.len() != dim || k.hi.len() != dim || phi.dim() != dim {
        return Err(SolveError::InvalidInput("dimension mismatch".into()));
    }
    // Every grid node in K must be an unknown.
    let mut lo_i = vec![0; dim];
    let mut hi_i = vec![0; dim];
    for a in 0..dim {
        let h = spec.h(a);
        if k.lo[a] < spec.lo[a] || k.hi[a] > spec.hi[a] || k.lo[a] > k.hi[a] {
            return Err(SolveError::KOutsideDomain { point: k.lo.clone() });
        }
        lo_i[a] = ((k.lo[a] - spec.lo[a]) / h - 1e-9).ceil() as usize;
        hi_i[a] = ((k.hi[a] - spec.lo[a]) / h + 1e-9).floor() as usize;
    }
    let mut idx = lo_i.clone();
    let mut analytic = 0.0f64;
    let mut discrete = 0.0f64;
    let mut count = 0;
    loop {
        let node = spec.flat(&idx);
        let i = op.index[node];
        if i == usize::MAX {
            return Err(SolveError::KOutsideDomain { point: spec.point(&idx) });
        }
        let x = spec.point(&idx);
        analytic = analytic.max((sol.u[i] - p.value(x[dim - 1]) - eps * phi.value(&x)).abs());
        if let Some(s) = &sol.split {
            discrete = discrete.max(s.psi[i].abs());
        }
        count += 1;
        let mut a = dim;
        loop {
            if a == 0 {
                let psi_min = sol
                    .split
                    .as_ref()
                    .filter(|_| eps > 0.0)
                    .map(|s| s.psi.iter().fold(f64::INFINITY, |m, v| m.min(v / eps)));
                return Ok(ExpansionReport {
                    eps,
                    nodes_in_k: count,
                    analytic,
                    discrete: sol.split.as_ref().map(|_| discrete),
                    psi_min,
                });
            }
            a -= 1;
            if idx[a] < hi_i[a] {
                idx[a] += 1;
                break;
            }
            idx[a] = lo_i[a];
        }
    }
}

/// Least-squares slope of `log v` against `log e`.
pub fn loglog_slope(e: &[f64], v: &[f64]) -> f64 {
    let n = e.len() as f64;
    let xs: Vec<f64> = e.iter().map(|x| x.ln()).collect();
    let ys: Vec<f64> = v.iter().map(|x| x.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// `Σ_j Σ_i c_i (ω_i(y) - s_i) cosh(√μ_i x_j)`.
#[derive(Debug, Clone)]
pub struct CoshModeSum {
    pub n: usize,
    pub coef: Vec<f64>,
    pub shift: Vec<f64>,
    pub modes: Vec<Mode>,
}

impl ScalarField for CoshModeSum {
    fn dim(&self) -> usize {
        self.n + 1
    }

    fn value(&self, p: &[f64]) -> f64 {
        let y = p[self.n];
        let mut s = 0.0;
        for (i, m) in self.modes.iter().enumerate() {
            let w = self.coef[i] * (m.value(y) - self.shift[i]);
            let r = m.mu().sqrt();
            s += w * p[..self.n].iter().map(|x| (r * x).cosh()).sum::<f64>();
        }
        s
    }

    fn jet(&self, p: &[f64]) -> Jet {
        let d = self.n + 1;
        let y = p[self.n];
        let mut j = Jet::zeros(d);
        for (i, m) in self.modes.iter().enumerate() {
            let (w, w1, w2) = m.eval(y);
            let c = self.coef[i];
            let r = m.mu().sqrt();
            let ws = w - self.shift[i];
            for a in 0..self.n {
                let (ch, sh) = ((r * p[a]).cosh(), (r * p[a]).sinh());
                j.value += c * ws * ch;
                j.grad[a] += c * ws * r * sh;
                j.grad[self.n] += c * w1 * ch;
                j.hess[a * d + a] += c * ws * r * r * ch;
                j.hess[a * d + self.n] += c * w1 * r * sh;
                j.hess[self.n * d + a] += c * w1 * r * sh;
                j.hess[self.n * d + self.n] += c * w2 * ch;
            }
        }
        j
    }
}

/// Barrier fields: `ψ̄` with constants `C_i`, and `ψ_∞` without its fitted
/// constant (`psi_inf_unit` is `ψ_∞ / C_∞`).
#[derive(Debug, Clone)]
pub struct BarrierSet {
    pub eta: f64,
    pub c: Vec<f64>,
    pub mu_inf: f64,
    pub c_inf: f64,
    pub psi_bar: CoshModeSum,
    pub psi_inf_unit: CoshModeSum,
}

/// `C_i = ½ min ω_i` and `c_∞ = ½ min ω_∞` over `[-1-η, 1+η]`, `μ_∞ = 4μ₁`.
pub fn build_barriers(
    p: &Profile1D,
    combo: &CoshCombo,
    modes: &[Mode],
    eta: f64,
    n: usize,
) -> Result<BarrierSet, SolveError> {
    build_barriers_from(p, &combo.alphas, modes, eta, n)
}

/// Same with explicit coefficients `α_i` for `modes`.
pub fn build_barriers_from(
    p: &Profile1D,
    alphas: &[f64],
    modes: &[Mode],
    eta: f64,
    n: usize,
) -> Result<BarrierSet, SolveError> {
    if modes.len() != alphas.len() || modes.is_empty() {
        return Err(SolveError::InvalidInput("one mode per coefficient is needed".into()));
    }
    let reach = p.half_width() + eta;
    if !(eta > 0.0 && eta <= p.sigma()) {
        return Err(SolveError::InvalidInput(format!("eta = {eta} outside (0, sigma]")));
    }
    let mu1 = modes.iter().map(|m| m.mu()).fold(0.0, f64::max);
    let mu_inf = 4.0 * mu1;
    if mu_inf >= p.mu0() {
        return Err(SolveError::LadderViolation { mu_inf, mu0: p.mu0() });
    }
    let min_of = |m: &Mode| -> Result<f64, SolveError> {
        let v = m.min_on(reach);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(SolveError::BarrierNotPositive { mu: m.mu(), min: v })
        }
    };
    let mut c = Vec::with_capacity(modes.len());
    for m in modes {
        c.push(0.5 * min_of(m)?);
    }
    let w_inf = omega_mode(p, mu_inf)?;
    let c_inf = 0.5 * min_of(&w_inf)?;
    let psi_bar = CoshModeSum {
        n,
        coef: alphas.iter().map(|a| a.abs()).collect(),
        shift: c.clone(),
        modes: modes.to_vec(),
    };
    let psi_inf_unit = CoshModeSum { n, coef: vec![1.0 / (c_inf * mu_inf)], shift: vec![c_inf], modes: vec![w_inf] };
    Ok(BarrierSet { eta, c, mu_inf, c_inf, psi_bar, psi_inf_unit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierReport {
    /// `max ψʰ / ψ̄` with `ψʰ = Ψʰ/ε`.
    pub psi_over_bar: f64,
    /// Fitted `C_∞ = max λR / (ε² Σ_j cosh(√μ_∞ x_j))`.
    pub c_big_inf: f64,
    /// `max (Ψʰ/ε²) / ψ_∞`.
    pub psi_over_inf: f64,
    pub psi_min: f64,
}

/// Pointwise comparison of the discrete remainder against both barriers.
pub fn barrier_check(sol: &DiscreteSolution, b: &BarrierSet, p: &Profile1D, eps: f64) -> Result<BarrierReport, SolveError> {
    let s = sol.split.as_ref().ok_or_else(|| SolveError::InvalidInput("solution has no split".into()))?;
    if !(eps > 0.0) {
        return Err(SolveError::InvalidInput("eps must be positive".into()));
    }
    let op = &sol.op;
    let n = op.dim() - 1;
    let f = p.nonlinearity();
    let r_inf = b.mu_inf.sqrt();
    let mut over_bar = 0.0f64;
    let mut c_big = 0.0f64;
    let mut psi_min = f64::INFINITY;
    for i in 0..op.len() {
        let x = op.point(i);
        let src = p.lambda() * op.weight[i] * taylor_remainder(f, s.base[i], s.d_lin[i] + s.psi[i]);
        let ch: f64 = x[..n].iter().map(|t| (r_inf * t).cosh()).sum();
        c_big = c_big.max(src / (eps * eps * ch));
        let psi = s.psi[i] / eps;
        psi_min = psi_min.min(psi);
        let bar = b.psi_bar.value(&x);
        if !(bar > 0.0) {
            return Err(SolveError::BarrierNotPositive { mu: f64::NAN, min: bar });
        }
        over_bar = over_bar.max(psi / bar);
    }
    let mut over_inf = 0.0f64;
    if c_big > 0.0 {
        for i in 0..op.len() {
            let x = op.point(i);
            let bound = c_big * b.psi_inf_unit.value(&x);
            over_inf = over_inf.max(s.psi[i] / (eps * eps) / bound);
        }
    }
    Ok(BarrierReport { psi_over_bar: over_bar, c_big_inf: c_big, psi_over_inf: over_inf, psi_min })
}

/// Smallest `η ≥ 0` with the domain inside `|y| < 1 + η`.
pub fn eta_of(sol: &DiscreteSolution, bbox_lo: &[f64], bbox_hi: &[f64], half_width: f64) -> f64 {
    let a = sol.op.dim() - 1;
    (bbox_hi[a].max(-bbox_lo[a]) - half_width).max(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub eta: f64,
    /// `h(ε) = -u₀(1+η)`.
    pub h_eps: f64,
    /// `max_j (u_ηʰ - u₀ʰ)`, its discrete counterpart.
    pub h_eps_discrete: f64,
    /// `max (u_h - u_ηʰ)`; non-positive when the comparison holds.
    pub excess_eta: f64,
    /// `max (u_h - u₀ʰ) - h_eps_discrete`.
    pub excess_h: f64,
}

/// Checks `u_ε ≤ u_η` and `u_ε - u₀ ≤ h(ε)` against the discrete profiles on
/// the same y-nodes, to tolerance `tol`.
pub fn monotone_bound_check(sol: &DiscreteSolution, p: &Profile1D, eta: f64, tol: f64) -> Result<BoundReport, SolveError> {
    let op = &sol.op;
    let u0h = strip_profile(op, p, p.half_width())?;
    let widened = if eta > 0.0 {
        let opts = ProfileOptions { half_width: p.half_width() + eta, sigma: p.sigma(), ..ProfileOptions::default() };
        let pe = solve_profile_on(p.nonlinearity(), p.lambda(), opts)?;
        strip_profile(op, &pe, pe.half_width())?
    } else {
        u0h.clone()
    };
    let (j0, j1) = widened.inner;
    let h_disc = (j0..=j1).map(|j| widened.values[j] - u0h.values[j]).fold(f64::NEG_INFINITY, f64::max);
    let mut excess_eta = f64::NEG_INFINITY;
    let mut excess_h = f64::NEG_INFINITY;
    for i in 0..op.len() {
        let j = op.y_index(i);
        let ueta = if j >= j0 && j <= j1 { widened.values[j] } else { 0.0 };
        excess_eta = excess_eta.max(sol.u[i] - ueta);
        excess_h = excess_h.max(sol.u[i] - u0h.values[j] - h_disc);
    }
    let rep = BoundReport {
        eta,
        h_eps: -p.value(p.half_width() + eta),
        h_eps_discrete: h_disc,
        excess_eta,
        excess_h,
    };
    if excess_eta > tol || excess_h > tol {
        return Err(SolveError::BoundViolated { excess: excess_eta.max(excess_h) });
    }
    Ok(rep)
}
