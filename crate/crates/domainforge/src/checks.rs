//! Geometric certification of an extracted domain: bounding box,
//! inclusion of the maxima segment, star shape, reflection symmetry, local
//! convergence to the strip and the far-boundary relation.
//!
//! Coordinates are `(x_1, …, x_N, y)`; the strip is `|y| < 1`.

use fieldkit::ScalarField;
use profile1d::{Mode, Profile1D};

use crate::extract::DomainSlab;
use crate::DomainError;

/// `M_ε = ln(3‖u₀‖ / (ε ω₁(1+η))) / √μ₁`.
pub fn m_eps(mu1: f64, u0_norm: f64, omega1_at: f64, eps: f64) -> f64 {
    (3.0 * u0_norm / (eps * omega1_at)).ln() / mu1.sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxReport {
    pub m_eps: f64,
    pub eta: f64,
    /// Allowed half-extent per axis.
    pub limits: Vec<f64>,
    pub bbox_lo: Vec<f64>,
    pub bbox_hi: Vec<f64>,
    /// Smallest relative slack `1 - |coord|/limit` over all axes.
    pub margin: f64,
}

/// Checks `Ω_ε ⊆ [-M_ε, M_ε]^N × [-1-η, 1+η]`. `top_mode` is the mode of
/// the largest frequency `μ₁` and `eps_top` the coefficient in front of it
/// (with `α = -1` scaling).
pub fn check_bounding_box(
    d: &DomainSlab,
    p: &Profile1D,
    top_mode: &Mode,
    eps_top: f64,
    eta: f64,
) -> Result<BoxReport, DomainError> {
    if !(eta > 0.0 && eta < p.sigma()) {
        return Err(DomainError::InvalidInput(format!("eta = {eta} must lie in (0, sigma = {})", p.sigma())));
    }
    let dim = d.dim();
    let m = m_eps(top_mode.mu(), p.sup_norm(), top_mode.value(p.half_width() + eta), eps_top);
    let mut limits = vec![m; dim];
    limits[dim - 1] = p.half_width() + eta;
    let mut margin = f64::INFINITY;
    let mut worst: Option<(f64, Vec<f64>)> = None;
    for v in &d.vertices {
        for a in 0..dim {
            let slack = 1.0 - v.point[a].abs() / limits[a];
            if slack < margin {
                margin = slack;
            }
            if slack < 0.0 && worst.as_ref().map_or(true, |(s, _)| slack < *s) {
                worst = Some((slack, v.point.clone()));
            }
        }
    }
    if let Some((_, point)) = worst {
        return Err(DomainError::BoxViolated { point, limits });
    }
    Ok(BoxReport { m_eps: m, eta, limits, bbox_lo: d.bbox_lo.clone(), bbox_hi: d.bbox_hi.clone(), margin })
}

/// Checks that `[t₁, t_k]^N × {0}` lies in the mask. Grid nodes inside the
/// box are tested, plus the nodes nearest to its corners. Returns the number
/// of nodes tested.
pub fn check_inclusion(d: &DomainSlab, maxima_t: &[f64]) -> Result<usize, DomainError> {
    if maxima_t.is_empty() {
        return Err(DomainError::InvalidInput("no maxima given".into()));
    }
    let spec = &d.spec;
    let dim = d.dim();
    let n = dim - 1;
    let t_lo = maxima_t.iter().cloned().fold(f64::INFINITY, f64::min);
    let t_hi = maxima_t.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let jy = spec.nearest(n, 0.0);
    if spec.coord(n, jy).abs() > 1e-12 * spec.h(n) {
        return Err(DomainError::InvalidInput("grid has no node on y = 0".into()));
    }
    // Per axis: nodes with coordinate in [t_lo, t_hi] plus the nearest nodes
    // to both ends.
    let mut axis_nodes = Vec::new();
    for a in 0..n {
        let mut ids: Vec<usize> =
            (0..spec.counts[a]).filter(|&i| (t_lo..=t_hi).contains(&spec.coord(a, i))).collect();
        ids.push(spec.nearest(a, t_lo));
        ids.push(spec.nearest(a, t_hi));
        ids.sort_unstable();
        ids.dedup();
        axis_nodes.push(ids);
    }
    let total: usize = axis_nodes.iter().map(|v| v.len()).product();
    let mut idx = vec![0; dim];
    idx[n] = jy;
    for k in 0..total {
        let mut r = k;
        for a in (0..n).rev() {
            let ids = &axis_nodes[a];
            idx[a] = ids[r % ids.len()];
            r /= ids.len();
        }
        if !d.mask[spec.flat(&idx)] {
            return Err(DomainError::InclusionViolated { point: spec.point(&idx) });
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarReport {
    /// `-max r·∇U` over boundary samples; star-shaped iff positive.
    pub alpha: f64,
    pub worst_point: Vec<f64>,
    pub samples: usize,
}

/// Radial derivative `r·∇U` at every boundary vertex.
pub fn check_star_shape<F: ScalarField + ?Sized>(u: &F, d: &DomainSlab) -> Result<StarReport, DomainError> {
    if d.vertices.is_empty() {
        return Err(DomainError::InvalidInput("empty boundary".into()));
    }
    let mut worst = (f64::NEG_INFINITY, Vec::new());
    for v in &d.vertices {
        let g = u.gradient(&v.point);
        let r: f64 = v.point.iter().zip(&g).map(|(x, g)| x * g).sum();
        if r > worst.0 {
            worst = (r, v.point.clone());
        }
    }
    if worst.0 >= 0.0 {
        return Err(DomainError::NotStarShaped { value: worst.0, point: worst.1 });
    }
    Ok(StarReport { alpha: -worst.0, worst_point: worst.1, samples: d.vertices.len() })
}

/// Mask invariance under every coordinate reflection.
pub fn check_symmetry(d: &DomainSlab) -> Result<(), DomainError> {
    let spec = &d.spec;
    for a in 0..d.dim() {
        let h = spec.h(a);
        if (spec.lo[a] + spec.hi[a]).abs() > 1e-9 * h {
            return Err(DomainError::InvalidInput(format!("grid not symmetric about axis {a}")));
        }
    }
    for a in 0..d.dim() {
        let n = spec.counts[a];
        let stride = spec.strides()[a];
        for k in 0..spec.len() {
            let i = (k / stride) % n;
            let mirror = k - i * stride + (n - 1 - i) * stride;
            if d.mask[k] != d.mask[mirror] {
                return Err(DomainError::AsymmetryDetected { axis: a, node: spec.unflat(k) });
            }
        }
    }
    Ok(())
}

/// Volume of `K ∩ (S Δ Ω_ε)` per domain, `S = {|y| < 1}`, `K = [k_lo, k_hi]`.
/// Fails unless the sequence is nonincreasing up to one grid column of `K`.
pub fn check_strip_convergence(domains: &[DomainSlab], k_lo: &[f64], k_hi: &[f64]) -> Result<Vec<f64>, DomainError> {
    let mut volumes = Vec::with_capacity(domains.len());
    let mut tol = 0.0f64;
    for d in domains {
        let spec = &d.spec;
        if !spec.contains_box(k_lo, k_hi) {
            return Err(DomainError::InvalidInput("K is not inside every grid".into()));
        }
        let dim = d.dim();
        let mut count = 0usize;
        for k in 0..spec.len() {
            let p = spec.point(&spec.unflat(k));
            if (0..dim).any(|a| p[a] < k_lo[a] || p[a] > k_hi[a]) {
                continue;
            }
            let in_strip = p[dim - 1].abs() < 1.0;
            if in_strip != d.mask[k] {
                count += 1;
            }
        }
        let vol = d.cell_volume();
        volumes.push(count as f64 * vol);
        let column = ((k_hi[dim - 1] - k_lo[dim - 1]) / spec.h(dim - 1)).ceil() + 1.0;
        tol = tol.max(column * vol);
    }
    let ok = volumes.windows(2).all(|w| w[1] <= w[0] + tol);
    if !ok {
        return Err(DomainError::NonConvergence { volumes });
    }
    Ok(volumes)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FarBoundaryReport {
    pub samples: usize,
    /// Largest `|Σcosh(√μ₁x_j)·εω₁(y)/u₀(y) − 1|`.
    pub worst: f64,
    pub worst_point: Vec<f64>,
}

/// Far-boundary relation `Σ_j cosh(√μ₁x_j) ≈ u₀(y)/(εω₁(y))` at boundary
/// vertices with `max_j|x_j| > fraction·M_ε`.
pub fn check_far_boundary(
    d: &DomainSlab,
    p: &Profile1D,
    top_mode: &Mode,
    eps_top: f64,
    m_eps: f64,
    fraction: f64,
    tol: f64,
) -> Result<FarBoundaryReport, DomainError> {
    let dim = d.dim();
    let r = top_mode.mu().sqrt();
    let mut worst = (0.0f64, Vec::new());
    let mut samples = 0;
    for v in &d.vertices {
        let xs = &v.point[..dim - 1];
        if xs.iter().map(|x| x.abs()).fold(0.0, f64::max) <= fraction * m_eps {
            continue;
        }
        samples += 1;
        let y = v.point[dim - 1];
        let lhs: f64 = xs.iter().map(|x| (r * x).cosh()).sum();
        let rhs = p.value(y) / (eps_top * top_mode.value(y));
        let dev = if rhs > 0.0 { (lhs / rhs - 1.0).abs() } else { f64::INFINITY };
        if dev > worst.0 || worst.1.is_empty() {
            worst = (dev, v.point.clone());
        }
    }
    if samples == 0 {
        return Err(DomainError::InvalidInput("no boundary samples beyond the far threshold".into()));
    }
    if worst.0 > tol {
        return Err(DomainError::FarBoundaryViolated { worst: worst.0, point: worst.1 });
    }
    Ok(FarBoundaryReport { samples, worst: worst.0, worst_point: worst.1 })
}
