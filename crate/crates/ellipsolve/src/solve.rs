//! Stable branch, linearized eigenvalue and the perturbation-form solve.

use profile1d::{Nonlinearity, Profile1D};
use rayon::prelude::*;

use crate::operator::{dot, sup_norm, Operator, PcgStats};
use crate::strip::{base_and_residual, strip_profile, StripProfile};
use crate::SolveError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Monotone iteration stops when the sup change drops below this.
    pub change_tol: f64,
    /// Relative residual of each linear solve.
    pub linear_rtol: f64,
    pub max_linear: usize,
    pub max_monotone: usize,
    /// `sup u` above this is treated as blow-up.
    pub cap: f64,
    /// Stop when successive Rayleigh quotients differ by less than this.
    pub eig_tol: f64,
    pub max_eig: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            change_tol: 1e-10,
            linear_rtol: 1e-12,
            max_linear: 20_000,
            max_monotone: 5_000,
            cap: 100.0,
            eig_tol: 1e-8,
            max_eig: 400,
        }
    }
}

/// Lowest eigenpair of `A - diag(potential)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub mu: f64,
    /// Collatz–Wielandt lower bound from the final positive iterate.
    pub lower: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// `u = base + d_lin + psi`: the linear response to the geometry and the
/// quadratic remainder, stored separately to keep their precision.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub strip: StripProfile,
    pub base: Vec<f64>,
    pub d_lin: Vec<f64>,
    pub psi: Vec<f64>,
    pub newton_steps: usize,
    /// `sup |u_split - u_monotone|`.
    pub agreement: f64,
}

#[derive(Debug, Clone)]
pub struct DiscreteSolution {
    pub op: Operator,
    /// Values on the unknowns (boundary values are zero).
    pub u: Vec<f64>,
    pub lambda: f64,
    pub iterations: usize,
    pub linear_iterations: usize,
    /// `max_i |(A u)_i - λf(u_i)| / A_ii`.
    pub defect: f64,
    pub mu_lin: f64,
    pub mu_lower: f64,
    pub split: Option<Split>,
}

impl DiscreteSolution {
    /// Values on every grid node, zero outside the domain.
    pub fn grid_values(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.op.spec.len()];
        for (i, &k) in self.op.nodes.iter().enumerate() {
            out[k] = self.u[i];
        }
        out
    }

    pub fn sup(&self) -> f64 {
        sup_norm(&self.u)
    }
}

fn defect(op: &Operator, f: &Nonlinearity, lambda: f64, u: &[f64]) -> f64 {
    let mut au = vec![0.0; u.len()];
    op.apply(u, None, &mut au);
    (0..u.len()).map(|i| (au[i] - lambda * op.weight[i] * f.eval(u[i])).abs() / op.diag[i]).fold(0.0, f64::max)
}

/// Minimal solution by monotone iteration from `u ≡ 0`, then `mu_lin`.
pub fn solve_stable(op: &Operator, f: &Nonlinearity, lambda: f64) -> Result<DiscreteSolution, SolveError> {
    solve_stable_with(op, f, lambda, &SolveOptions::default())
}

pub fn solve_stable_with(
    op: &Operator,
    f: &Nonlinearity,
    lambda: f64,
    opts: &SolveOptions,
) -> Result<DiscreteSolution, SolveError> {
    let (u, iterations, linear) = monotone(op, f, lambda, opts)?;
    let d = defect(op, f, lambda, &u);
    let eig = linearized_eigen(op, f, lambda, &u, opts)?;
    if !(eig.mu > 0.0) {
        return Err(SolveError::StabilityLost { mu: eig.mu });
    }
    Ok(DiscreteSolution {
        op: op.clone(),
        u,
        lambda,
        iterations,
        linear_iterations: linear,
        defect: d,
        mu_lin: eig.mu,
        mu_lower: eig.lower,
        split: None,
    })
}

/// Monotone iteration from zero: `(u, iterations, linear iterations)`.
fn monotone(op: &Operator, f: &Nonlinearity, lambda: f64, opts: &SolveOptions) -> Result<(Vec<f64>, usize, usize), SolveError> {
    if !(lambda > 0.0) {
        return Err(SolveError::InvalidInput(format!("lambda = {lambda}")));
    }
    let sys = op.system(None)?;
    let n = op.len();
    let mut u = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut checkpoint = u.clone();
    let mut linear = 0;
    let mut iterations = 0;
    loop {
        iterations += 1;
        rhs.par_iter_mut().zip(&u).zip(&op.weight).for_each(|((r, &v), &w)| *r = lambda * w * f.eval(v));
        next.copy_from_slice(&u);
        let stats: PcgStats = sys.solve(&rhs, &mut next, opts.linear_rtol, opts.max_linear)?;
        linear += stats.iterations;
        let change = next.iter().zip(&u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        std::mem::swap(&mut u, &mut next);
        let sup = sup_norm(&u);
        if !sup.is_finite() || sup > opts.cap {
            return Err(SolveError::IterationDiverged { sup, iterations });
        }
        if iterations % 10 == 0 {
            // Iterates must not decrease (up to the linear solver accuracy).
            let slack = 1e3 * opts.linear_rtol * sup.max(1e-300);
            if let Some(i) = (0..n).find(|&i| u[i] < checkpoint[i] - slack) {
                return Err(SolveError::MonotonicityLost { iteration: iterations, drop: checkpoint[i] - u[i] });
            }
            checkpoint.copy_from_slice(&u);
        }
        if change < opts.change_tol {
            break;
        }
        if iterations >= opts.max_monotone {
            return Err(SolveError::IterationDiverged { sup, iterations });
        }
    }
    if let Some(i) = (0..n).find(|&i| !(u[i] > 0.0)) {
        return Err(SolveError::NotPositive { node: op.spec.unflat(op.nodes[i]), value: u[i] });
    }
    Ok((u, iterations, linear))
}

/// Lowest eigenvalue of `-Δ_h - λf'(u)`.
pub fn linearized_eigen(
    op: &Operator,
    f: &Nonlinearity,
    lambda: f64,
    u: &[f64],
    opts: &SolveOptions,
) -> Result<Eigen, SolveError> {
    let pot: Vec<f64> = u.iter().zip(&op.weight).map(|(&v, &w)| lambda * w * f.d1(v)).collect();
    lowest_eigen(op, &pot, u, opts)
}

/// Shifted inverse iteration for the lowest eigenpair of `A - diag(pot)`.
///
/// The shift is the Collatz–Wielandt bound `min (Kv)_i / v_i` of the current
/// positive iterate, backed off slightly; it never exceeds the eigenvalue,
/// so each shifted matrix stays positive definite.
pub fn lowest_eigen(op: &Operator, pot: &[f64], start: &[f64], opts: &SolveOptions) -> Result<Eigen, SolveError> {
    let n = op.len();
    let neg: Vec<f64> = pot.iter().map(|p| -p).collect();
    let mut v: Vec<f64> = start.iter().map(|&s| if s > 0.0 { s } else { 1e-300 }).collect();
    normalize(&mut v);
    let mut kv = vec![0.0; n];
    let bounds = |v: &[f64], kv: &mut Vec<f64>| -> (f64, f64) {
        op.apply(v, Some(&neg), kv);
        let rq = dot(v, kv) / dot(v, v);
        let lo = if v.iter().all(|&x| x > 0.0) {
            (0..n).map(|i| kv[i] / v[i]).fold(f64::INFINITY, f64::min)
        } else {
            f64::NEG_INFINITY
        };
        (rq, lo)
    };
    let (mut mu, mut lower) = bounds(&v, &mut kv);
    if !lower.is_finite() {
        lower = mu - 1.0;
    }
    for it in 1..=opts.max_eig {
        let gap = (mu - lower).abs().max(1e-6 * mu.abs().max(1.0));
        let shift = lower - 1e-3 * gap;
        let extra: Vec<f64> = neg.iter().map(|p| p - shift).collect();
        let sys = op.system(Some(&extra))?;
        // v is close to the eigenvector, so v/(μ - s) nearly solves the system.
        let mut w: Vec<f64> = v.iter().map(|x| x / (mu - shift)).collect();
        sys.solve(&v, &mut w, 1e-9, opts.max_linear)?;
        normalize(&mut w);
        let (rq, lo) = bounds(&w, &mut kv);
        let done = (rq - mu).abs() < opts.eig_tol;
        v = w;
        mu = rq;
        if lo.is_finite() && lo > lower {
            lower = lo.min(rq);
        }
        if done {
            return Ok(Eigen { mu, lower, vector: v, iterations: it });
        }
    }
    Err(SolveError::EigenNotConverged { mu, iterations: opts.max_eig })
}

fn normalize(v: &mut [f64]) {
    let s = dot(v, v).sqrt();
    v.par_iter_mut().for_each(|x| *x /= s);
}

/// Six-point Gauss–Legendre nodes and weights on `[0, 1]`.
const GL: [(f64, f64); 6] = [
    (0.033_765_242_898_423_99, 0.085_662_246_189_585_17),
    (0.169_395_306_766_867_74, 0.180_380_786_524_069_3),
    (0.380_690_406_958_401_56, 0.233_956_967_286_345_5),
    (0.619_309_593_041_598_4, 0.233_956_967_286_345_5),
    (0.830_604_693_233_132_3, 0.180_380_786_524_069_3),
    (0.966_234_757_101_576, 0.085_662_246_189_585_17),
];

/// `f(b+e) - f(b) - f'(b)e = e² ∫₀¹ (1-s) f''(b+se) ds`, without cancellation.
pub fn taylor_remainder(f: &Nonlinearity, b: f64, e: f64) -> f64 {
    e * e * GL.iter().map(|&(s, w)| w * (1.0 - s) * f.d2(b + s * e)).sum::<f64>()
}

/// Stable solve followed by the perturbation-form refinement about the
/// discrete strip profile of `p`.
pub fn solve_stable_split(op: &Operator, p: &Profile1D, opts: &SolveOptions) -> Result<DiscreteSolution, SolveError> {
    let f = p.nonlinearity();
    let lambda = p.lambda();
    let (mono_u, mono_it, mono_lin) = monotone(op, f, lambda, opts)?;
    let strip = strip_profile(op, p, p.half_width())?;
    let (base, r) = base_and_residual(op, &strip);
    let n = op.len();
    let fp: Vec<f64> = base.iter().zip(&op.weight).map(|(&b, &w)| lambda * w * f.d1(b)).collect();
    let neg_fp: Vec<f64> = fp.iter().map(|v| -v).collect();
    let lin = op.system(Some(&neg_fp))?;
    let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
    let mut d_lin = vec![0.0; n];
    let mut linear = lin.solve(&rhs, &mut d_lin, 1e-14, opts.max_linear)?.iterations;

    // Newton on L Ψ = λ R(b, d_lin + Ψ), L = A - λf'(b).
    let mut psi = vec![0.0; n];
    let mut steps = 0;
    let mut lpsi = vec![0.0; n];
    loop {
        let src: Vec<f64> = (0..n).map(|i| lambda * op.weight[i] * taylor_remainder(f, base[i], d_lin[i] + psi[i])).collect();
        op.apply(&psi, Some(&neg_fp), &mut lpsi);
        let g: Vec<f64> = (0..n).map(|i| src[i] - lpsi[i]).collect();
        // Row residuals scaled by the diagonal are displacements.
        let gs = (0..n).map(|i| g[i].abs() / op.diag[i]).fold(0.0, f64::max);
        if gs <= 1e-14 * sup_norm(&psi).max(1e-300) || sup_norm(&src) == 0.0 || steps >= 30 {
            if steps >= 30 && gs > 1e-14 * sup_norm(&psi) {
                return Err(SolveError::IterationDiverged { sup: sup_norm(&psi), iterations: steps });
            }
            break;
        }
        let jac: Vec<f64> = (0..n).map(|i| -lambda * op.weight[i] * f.d1(base[i] + d_lin[i] + psi[i])).collect();
        let sys = op.system(Some(&jac))?;
        let mut delta = vec![0.0; n];
        linear += sys.solve(&g, &mut delta, 1e-14, opts.max_linear)?.iterations;
        psi.iter_mut().zip(&delta).for_each(|(a, b)| *a += b);
        steps += 1;
    }
    let u: Vec<f64> = (0..n).map(|i| base[i] + d_lin[i] + psi[i]).collect();
    let agreement = u.iter().zip(&mono_u).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    if agreement > 1e3 * opts.change_tol {
        return Err(SolveError::BranchMismatch { gap: agreement });
    }
    if let Some(i) = (0..n).find(|&i| !(u[i] > 0.0)) {
        return Err(SolveError::NotPositive { node: op.spec.unflat(op.nodes[i]), value: u[i] });
    }
    // Defect in perturbation form: A d + r - λ(f'(b) d + R(b, d)).
    let d: Vec<f64> = (0..n).map(|i| d_lin[i] + psi[i]).collect();
    let mut ad = vec![0.0; n];
    op.apply(&d, None, &mut ad);
    let def = (0..n)
        .map(|i| (ad[i] + r[i] - lambda * op.weight[i] * (f.d1(base[i]) * d[i] + taylor_remainder(f, base[i], d[i]))).abs() / op.diag[i])
        .fold(0.0, f64::max);
    let eig = linearized_eigen(op, f, lambda, &u, opts)?;
    if !(eig.mu > 0.0) {
        return Err(SolveError::StabilityLost { mu: eig.mu });
    }
    Ok(DiscreteSolution {
        op: op.clone(),
        u,
        lambda,
        iterations: mono_it,
        linear_iterations: mono_lin + linear,
        defect: def,
        mu_lin: eig.mu,
        mu_lower: eig.lower,
        split: Some(Split { strip, base, d_lin, psi, newton_steps: steps, agreement }),
    })
}
