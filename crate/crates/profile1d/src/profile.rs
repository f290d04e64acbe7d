//! Stable profile by shooting, its extension, and the extremal parameter.

use std::fmt::Write as _;

use crate::eigen::first_eigenvalue;
use crate::hermite::HermiteTable;
use crate::mode::Mode;
use crate::nonlinearity::Nonlinearity;
use crate::ode::{integrate, OdeFailure, Tolerance};
use crate::ProfileError;

const HEIGHT_CAP: f64 = 1e6;
const SIGMA_HALVINGS: usize = 6;

#[derive(Debug, Clone, Copy)]
pub struct ProfileOptions {
    /// Half-width `L` of the base interval `(-L, L)`.
    pub half_width: f64,
    /// Extension beyond `±L`.
    pub sigma: f64,
    /// Number of grid nodes on `[-L-σ, L+σ]`; forced odd.
    pub nodes: usize,
    pub ode_tol: Tolerance,
    /// Tolerance on the fourth-order defect reported as `residual`.
    pub defect_tol: f64,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            half_width: 1.0,
            sigma: 0.1,
            nodes: 4097,
            ode_tol: Tolerance::default(),
            defect_tol: 1e-6,
        }
    }
}

/// Sampled stable profile on `[-L-σ, L+σ]`.
#[derive(Debug, Clone)]
pub struct Profile1D {
    f: Nonlinearity,
    lambda: f64,
    half_width: f64,
    sigma: f64,
    height: f64,
    table: HermiteTable,
    mu0: f64,
    residual: f64,
    ode_tol: Tolerance,
}

impl Profile1D {
    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.f
    }
    pub fn lambda(&self) -> f64 {
        self.lambda
    }
    pub fn half_width(&self) -> f64 {
        self.half_width
    }
    /// Extension width actually used (may be smaller than requested).
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    /// `u₀(0)`.
    pub fn height(&self) -> f64 {
        self.height
    }
    /// First eigenvalue of the linearized operator on `(-L-σ, L+σ)`.
    pub fn mu0(&self) -> f64 {
        self.mu0
    }
    /// Maximum fourth-order (Numerov) defect of the sampled table.
    pub fn residual(&self) -> f64 {
        self.residual
    }
    pub fn ode_tolerance(&self) -> Tolerance {
        self.ode_tol
    }
    pub fn table(&self) -> &HermiteTable {
        &self.table
    }
    pub fn grid(&self) -> Vec<f64> {
        (0..self.table.len()).map(|i| self.table.node(i)).collect()
    }
    pub fn u0(&self) -> &[f64] {
        &self.table.v
    }
    pub fn u0_d1(&self) -> &[f64] {
        &self.table.d1
    }
    pub fn u0_d2(&self) -> &[f64] {
        &self.table.d2
    }
    /// `(u₀, u₀', u₀'')` at `y`.
    pub fn eval(&self, y: f64) -> (f64, f64, f64) {
        self.table.eval(y)
    }
    pub fn value(&self, y: f64) -> f64 {
        self.table.eval(y).0
    }
    /// `‖u₀‖_∞ = u₀(0)`.
    pub fn sup_norm(&self) -> f64 {
        self.height
    }
    /// Potential `λ f'(u₀(y))` of the linearized operator.
    pub fn potential(&self, y: f64) -> f64 {
        self.lambda * self.f.d1(self.value(y))
    }
}

/// Integrates `-u'' = λ f(u)`, `u(0) = a`, `u'(0) = 0` up to `y`.
pub fn shoot(
    f: &Nonlinearity,
    lambda: f64,
    a: f64,
    y: f64,
    tol: Tolerance,
) -> Result<(f64, f64), OdeFailure> {
    let g = |_t: f64, s: &[f64; 2]| [s[1], -lambda * f.eval(s[0])];
    let mut h = 0.0;
    let s = integrate(&g, 0.0, [a, 0.0], y, tol, &mut h)?;
    Ok((s[0], s[1]))
}

fn bisect_root(g: &dyn Fn(f64) -> Option<f64>, mut lo: f64, mut hi: f64) -> f64 {
    // g(lo) < 0 <= g(hi)
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-15 * hi.abs().max(1.0) {
            break;
        }
        match g(mid) {
            Some(v) if v >= 0.0 => hi = mid,
            _ => lo = mid,
        }
    }
    0.5 * (lo + hi)
}

fn golden_max(g: &dyn Fn(f64) -> Option<f64>, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = g(x1).unwrap_or(f64::NEG_INFINITY);
    let mut f2 = g(x2).unwrap_or(f64::NEG_INFINITY);
    for _ in 0..80 {
        if f1 > 0.0 {
            return (x1, f1);
        }
        if f2 > 0.0 {
            return (x2, f2);
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = g(x2).unwrap_or(f64::NEG_INFINITY);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = g(x1).unwrap_or(f64::NEG_INFINITY);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Smallest `a > 0` with `u(L; a) = 0`, i.e. the height of the minimal
/// (stable) profile on `(-L, L)`.
pub fn find_minimal_height(
    f: &Nonlinearity,
    lambda: f64,
    half_width: f64,
    tol: Tolerance,
) -> Result<f64, ProfileError> {
    if !(lambda > 0.0) {
        return Err(ProfileError::InvalidInput(format!("lambda must be positive, got {lambda}")));
    }
    let g = |a: f64| shoot(f, lambda, a, half_width, tol).ok().map(|s| s.0);
    let Some(g0) = g(0.0) else {
        return Err(ProfileError::ShootingDiverged { height: 0.0, y: half_width });
    };
    if g0 >= 0.0 {
        return Err(ProfileError::InvalidInput("f(0) must be positive".into()));
    }
    let mut prev: Option<(f64, f64)> = None;
    let (mut a, mut ga) = (0.0f64, g0);
    loop {
        let step = 0.01 * a.max(1.0);
        let next = a + step;
        if next > HEIGHT_CAP {
            break;
        }
        let Some(gn) = g(next) else { break };
        if gn >= 0.0 {
            return Ok(bisect_root(&g, a, next));
        }
        if let Some((ap, gp)) = prev {
            if gp < ga && ga > gn {
                // Near the fold the positive window can fall between samples.
                let (am, gm) = golden_max(&g, ap, next);
                if gm >= 0.0 {
                    return Ok(bisect_root(&g, ap, am));
                }
                // Past the first fold with no root: the minimal branch is gone.
                break;
            }
        }
        prev = Some((a, ga));
        a = next;
        ga = gn;
    }
    Err(ProfileError::NoSolution { lambda })
}

/// Stable profile on `(-1, 1)` extended to `±(1+σ)`.
pub fn solve_profile(f: &Nonlinearity, lambda: f64, sigma: f64) -> Result<Profile1D, ProfileError> {
    solve_profile_on(f, lambda, ProfileOptions { sigma, ..ProfileOptions::default() })
}

pub fn solve_profile_on(
    f: &Nonlinearity,
    lambda: f64,
    opts: ProfileOptions,
) -> Result<Profile1D, ProfileError> {
    f.check_hypotheses()?;
    if !(opts.sigma > 0.0) || !(opts.half_width > 0.0) {
        return Err(ProfileError::InvalidInput("sigma and half-width must be positive".into()));
    }
    if opts.nodes < 5 {
        return Err(ProfileError::InvalidInput("need at least 5 grid nodes".into()));
    }
    let height = find_minimal_height(f, lambda, opts.half_width, opts.ode_tol)?;
    let mut sigma = opts.sigma;
    let mut last_mu0 = f64::NAN;
    for _ in 0..=SIGMA_HALVINGS {
        let mut p = tabulate(f, lambda, height, sigma, &opts)?;
        let reach = opts.half_width + sigma;
        let mu0 = first_eigenvalue(&p, (-reach, reach))?;
        if mu0 > 0.0 {
            p.mu0 = mu0;
            return Ok(p);
        }
        last_mu0 = mu0;
        sigma *= 0.5;
    }
    Err(ProfileError::UnstableExtension { mu0: last_mu0, sigma: sigma * 2.0 })
}

fn tabulate(
    f: &Nonlinearity,
    lambda: f64,
    height: f64,
    sigma: f64,
    opts: &ProfileOptions,
) -> Result<Profile1D, ProfileError> {
    let l = opts.half_width;
    let half = (opts.nodes - 1) / 2;
    let n = 2 * half + 1;
    let reach = l + sigma;
    let h = reach / half as f64;
    let g = |_t: f64, s: &[f64; 2]| [s[1], -lambda * f.eval(s[0])];

    let mut pos = vec![(height, 0.0); half + 1];
    let mut state = [height, 0.0];
    let mut hint = 0.0;
    for i in 1..=half {
        let (t0, t1) = ((i - 1) as f64 * h, i as f64 * h);
        state = integrate(&g, t0, state, t1, opts.ode_tol, &mut hint).map_err(|e| {
            ProfileError::ShootingDiverged {
                height,
                y: match e {
                    OdeFailure::BlowUp(t) | OdeFailure::Stalled(t) => t,
                },
            }
        })?;
        pos[i] = (state[0], state[1]);
    }

    let mut v = vec![0.0; n];
    let mut d1 = vec![0.0; n];
    let mut d2 = vec![0.0; n];
    for (i, &(u, du)) in pos.iter().enumerate() {
        let curv = -lambda * f.eval(u);
        v[half + i] = u;
        v[half - i] = u;
        d1[half + i] = du;
        d1[half - i] = -du;
        d2[half + i] = curv;
        d2[half - i] = curv;
    }

    for i in 0..=half {
        let y = i as f64 * h;
        let u = pos[i].0;
        if y < l && u <= 0.0 {
            return Err(ProfileError::NoSolution { lambda });
        }
        if y > l && u >= 0.0 {
            return Err(ProfileError::ExtensionSignError { y, value: u });
        }
    }

    // Numerov relation: second differences against weighted second derivatives.
    let mut residual = 0.0f64;
    for i in 1..n - 1 {
        let lhs = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
        let rhs = (d2[i + 1] + 10.0 * d2[i] + d2[i - 1]) / 12.0;
        residual = residual.max((lhs - rhs).abs());
    }
    if residual > opts.defect_tol {
        return Err(ProfileError::ConvergenceFailure(format!(
            "profile defect {residual:e} above {:e}",
            opts.defect_tol
        )));
    }

    Ok(Profile1D {
        f: f.clone(),
        lambda,
        half_width: l,
        sigma,
        height,
        table: HermiteTable::new(-reach, h, v, d1, d2),
        mu0: f64::NAN,
        residual,
        ode_tol: opts.ode_tol,
    })
}

/// Brackets the extremal parameter of `-u'' = λ f(u)` on `interval`:
/// the profile problem is solvable at `lo` and not at `hi`.
pub fn lambda_star_estimate(
    f: &Nonlinearity,
    interval: (f64, f64),
    width: f64,
    cap: f64,
) -> Result<(f64, f64), ProfileError> {
    let (a, b) = interval;
    if !(b > a) {
        return Err(ProfileError::DegenerateSide { a, b });
    }
    f.check_hypotheses()?;
    let l = 0.5 * (b - a);
    let tol = Tolerance::default();
    let solvable = |lam: f64| find_minimal_height(f, lam, l, tol).is_ok();
    let mut lo = 0.0;
    let mut hi = 1.0 / (l * l);
    while solvable(hi) {
        lo = hi;
        hi *= 2.0;
        if hi > cap {
            return Err(ProfileError::NoFailureFound { cap });
        }
    }
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if solvable(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// CSV table `y,u0,u0',omega_1,...` on the profile grid.
pub fn profile_csv(p: &Profile1D, modes: &[Mode]) -> String {
    let mut out = String::from("y,u0,u0_d1");
    for (i, _) in modes.iter().enumerate() {
        let _ = write!(out, ",omega_{}", i + 1);
    }
    out.push('\n');
    for i in 0..p.table.len() {
        let _ = write!(out, "{:.12e},{:.12e},{:.12e}", p.table.node(i), p.table.v[i], p.table.d1[i]);
        for m in modes {
            let _ = write!(out, ",{:.12e}", m.omega()[i]);
        }
        out.push('\n');
    }
    out
}
