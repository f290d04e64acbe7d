//! Dirichlet ground states of `-d²/dy² + V(y)` by tridiagonal inverse
//! iteration, plus the rectangle eigenvalue formula.

use crate::profile::Profile1D;
use crate::ProfileError;

/// Intervals of the coarse grid used for the reported eigenvalue; the fine
/// grid halves the spacing and the two are Richardson-combined.
pub const EIGEN_INTERVALS: usize = 4096;

#[derive(Debug, Clone)]
pub struct GroundState {
    pub eigenvalue: f64,
    /// Interior nodal values, normalized to unit max.
    pub vector: Vec<f64>,
    pub iterations: usize,
}

/// Smallest eigenvalue of the second-order FD discretization of
/// `-d²/dy² + V` on `(a, b)` with `intervals` cells. The eigenvector is
/// checked to be strictly positive.
pub fn dirichlet_ground_state(
    potential: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    intervals: usize,
) -> Result<GroundState, ProfileError> {
    if !(b > a) {
        return Err(ProfileError::DegenerateSide { a, b });
    }
    let m = intervals.checked_sub(1).filter(|&m| m >= 1).ok_or_else(|| {
        ProfileError::InvalidInput("need at least two intervals".into())
    })?;
    let h = (b - a) / intervals as f64;
    let ih2 = 1.0 / (h * h);
    let pot: Vec<f64> = (1..=m).map(|i| potential(a + h * i as f64)).collect();
    let vmin = pot.iter().cloned().fold(f64::INFINITY, f64::min);
    // Shift below the spectrum so the shifted matrix is SPD and diagonally dominant.
    let shift = vmin.min(0.0) - 1.0;
    let diag: Vec<f64> = pot.iter().map(|v| 2.0 * ih2 + v - shift).collect();
    let off = -ih2;

    // Thomas factorization, reused for every solve.
    let mut cp = vec![0.0; m];
    let mut piv = vec![0.0; m];
    piv[0] = diag[0];
    cp[0] = off / piv[0];
    for i in 1..m {
        piv[i] = diag[i] - off * cp[i - 1];
        cp[i] = off / piv[i];
    }
    let solve = |rhs: &[f64], out: &mut [f64]| {
        let mut dp = vec![0.0; m];
        dp[0] = rhs[0] / piv[0];
        for i in 1..m {
            dp[i] = (rhs[i] - off * dp[i - 1]) / piv[i];
        }
        out[m - 1] = dp[m - 1];
        for i in (0..m - 1).rev() {
            out[i] = dp[i] - cp[i] * out[i + 1];
        }
    };

    let mut v: Vec<f64> = (1..=m)
        .map(|i| (std::f64::consts::PI * i as f64 / intervals as f64).sin())
        .collect();
    let mut w = vec![0.0; m];
    let mut est = f64::NAN;
    for it in 1..=1000 {
        solve(&v, &mut w);
        let vw: f64 = v.iter().zip(&w).map(|(x, y)| x * y).sum();
        let ww: f64 = w.iter().map(|x| x * x).sum();
        let new = shift + vw / ww;
        let norm = ww.sqrt();
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / norm;
        }
        if (new - est).abs() <= 1e-14 * new.abs().max(1.0) {
            let top = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let vector: Vec<f64> = v.iter().map(|x| x / top).collect();
            if vector.iter().any(|&x| x <= 0.0) {
                return Err(ProfileError::ConvergenceFailure(
                    "ground state eigenvector is not positive".into(),
                ));
            }
            return Ok(GroundState { eigenvalue: new, vector, iterations: it });
        }
        est = new;
    }
    Err(ProfileError::ConvergenceFailure(format!("inverse iteration stalled at {est}")))
}

/// First eigenvalue of `-d²/dy² - λ f'(u₀)` on `interval`, Richardson
/// extrapolated from two grids.
pub fn first_eigenvalue(p: &Profile1D, interval: (f64, f64)) -> Result<f64, ProfileError> {
    let (a, b) = interval;
    let reach = p.half_width() + p.sigma();
    if a < -reach - 1e-12 || b > reach + 1e-12 {
        return Err(ProfileError::InvalidInput(format!(
            "interval ({a}, {b}) leaves the profile range ±{reach}"
        )));
    }
    let v = |y: f64| -p.potential(y);
    let coarse = dirichlet_ground_state(&v, a, b, EIGEN_INTERVALS)?;
    let fine = dirichlet_ground_state(&v, a, b, 2 * EIGEN_INTERVALS)?;
    Ok((4.0 * fine.eigenvalue - coarse.eigenvalue) / 3.0)
}

/// `μ₀ + Σ (π/(b_j - a_j))²`: first eigenvalue of the linearized operator on
/// the product of the extended interval with the given sides.
pub fn rect_eigenvalue(mu0: f64, sides: &[(f64, f64)]) -> Result<f64, ProfileError> {
    let mut total = mu0;
    for &(a, b) in sides {
        if !(b > a) {
            return Err(ProfileError::DegenerateSide { a, b });
        }
        total += (std::f64::consts::PI / (b - a)).powi(2);
    }
    Ok(total)
}
