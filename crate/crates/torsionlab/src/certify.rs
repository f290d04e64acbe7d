//! Geometric and critical-point certification of the torsion construction.

use critscan::{find_critical_points, nondegeneracy_margin, CriticalPoint, ScanOptions};
use domainforge::{check_star_shape, check_symmetry, extract_component, DomainSlab};
use fieldkit::{GridSpec, ScalarField};
use rayon::prelude::*;

use crate::field::{build_torsion_field, mean_curvature_of_jet, TorsionField};
use crate::TorsionError;

/// Half-width in `x` of the patch where the cylinder limit is compared.
pub const CYLINDER_PATCH_X: f64 = 1.0;

/// Allowed relative gap between the mean patch curvature and the cylinder.
pub const CYLINDER_TOL: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct CurvatureReport {
    pub min: f64,
    pub argmin: Vec<f64>,
    /// `K_m` at every boundary vertex, in vertex order.
    pub samples: Vec<f64>,
    /// `(N-1)/(N√N)`.
    pub cylinder: f64,
    pub patch_samples: usize,
    pub patch_mean: f64,
    /// Largest `|K_m - cylinder| / cylinder` on the patch (absolute if N = 1).
    pub patch_max_dev: f64,
}

/// `K_m` at every boundary vertex; passes iff all are positive.
pub fn certify_positive_curvature(tf: &TorsionField, d: &DomainSlab) -> Result<CurvatureReport, TorsionError> {
    if d.vertices.is_empty() {
        return Err(TorsionError::InvalidInput("empty boundary".into()));
    }
    let samples: Vec<f64> =
        d.vertices.par_iter().map(|v| mean_curvature_of_jet(&tf.jet(&v.point))).collect::<Result<_, _>>()?;
    let (imin, &min) = samples.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    let n = tf.n as f64;
    let cylinder = (n - 1.0) / (n * n.sqrt());
    let patch: Vec<f64> = d
        .vertices
        .iter()
        .zip(&samples)
        .filter(|(v, _)| v.point[0].abs() <= CYLINDER_PATCH_X)
        .map(|(_, &k)| k)
        .collect();
    let scale = if cylinder > 0.0 { cylinder } else { 1.0 };
    let patch_max_dev = patch.iter().fold(0.0f64, |m, k| m.max((k - cylinder).abs() / scale));
    let patch_mean = patch.iter().sum::<f64>() / patch.len().max(1) as f64;
    let argmin = d.vertices[imin].point.clone();
    if !(min > 0.0) {
        return Err(TorsionError::NegativeCurvatureFound { point: argmin, k_m: min });
    }
    Ok(CurvatureReport { min, argmin, samples, cylinder, patch_samples: patch.len(), patch_mean, patch_max_dev })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticsReport {
    pub eps: f64,
    pub m_eps: f64,
    /// Root of `N/2 + εN q(x) = 0`.
    pub crossing_exact: f64,
    /// Boundary crossing of the extracted domain on the positive x-axis.
    pub crossing_domain: f64,
    /// `(2ε)^{-1/(2k)}`.
    pub leading: f64,
    pub bbox_x: f64,
    /// Largest `||y|² - N|` over boundary vertices with `|x| ≤ t_k`.
    pub near_dev: f64,
    /// Its bound `2εN max|v|` over the same vertices.
    pub near_bound: f64,
}

impl AsymptoticsReport {
    pub fn leading_ratio(&self) -> f64 {
        self.crossing_exact / self.leading
    }
}

pub fn boundary_asymptotics(tf: &TorsionField, d: &DomainSlab) -> Result<AsymptoticsReport, TorsionError> {
    let exact = tf.axis_crossing().ok_or_else(|| TorsionError::AsymptoticViolated("no axis crossing".into()))?;
    let domain = domain_axis_crossing(d)?;
    let m_eps = tf.m_eps();
    let k = tf.k() as f64;
    let leading = (2.0 * tf.eps).powf(-1.0 / (2.0 * k));
    let bbox_x = d.bbox_hi[0].max(-d.bbox_lo[0]);
    let tk = *tf.poly.roots.last().expect("k >= 1");
    let n = tf.n as f64;
    let (mut near_dev, mut vmax) = (0.0f64, 0.0f64);
    for v in d.vertices.iter().filter(|v| v.point[0].abs() <= tk) {
        let y2: f64 = v.point[1..].iter().map(|y| y * y).sum();
        near_dev = near_dev.max((y2 - n).abs());
        for &y in &v.point[1..] {
            vmax = vmax.max(tf.poly.v_jet(v.point[0], y)[0].abs());
        }
    }
    let rep = AsymptoticsReport {
        eps: tf.eps,
        m_eps,
        crossing_exact: exact,
        crossing_domain: domain,
        leading,
        bbox_x,
        near_dev,
        near_bound: 2.0 * tf.eps * n * vmax,
    };
    if bbox_x > m_eps {
        return Err(TorsionError::AsymptoticViolated(format!("x-extent {bbox_x} exceeds M_eps = {m_eps}")));
    }
    if (domain - exact).abs() > 1e-6 * exact {
        return Err(TorsionError::AsymptoticViolated(format!("axis crossing {domain} vs exact {exact}")));
    }
    // |y|² - N = 2εΣv on the boundary; the slack covers the surface tolerance.
    if rep.near_dev > rep.near_bound + 1e-6 {
        return Err(TorsionError::AsymptoticViolated(format!(
            "||y|^2 - N| = {} above 2 eps N max|v| = {}",
            rep.near_dev, rep.near_bound
        )));
    }
    Ok(rep)
}

/// Boundary vertex on the positive x-axis, walking out from the origin.
fn domain_axis_crossing(d: &DomainSlab) -> Result<f64, TorsionError> {
    if !d.origin_inside {
        return Err(TorsionError::InvalidInput("origin outside the domain".into()));
    }
    let mut k = d.origin_node;
    while let Some(next) = d.neighbor(k, 0, 1) {
        if !d.mask[next] {
            return d
                .vertex_on_edge(k, next)
                .map(|v| v.point[0])
                .ok_or_else(|| TorsionError::InvalidInput("no boundary vertex on the x-axis".into()));
        }
        k = next;
    }
    Err(TorsionError::InvalidInput("domain reaches the grid edge on the x-axis".into()))
}

/// Volume of `K ∩ (C Δ Ω_ε)`, `C = {|y|² < N}`, `K = {|x| ≤ x_half}` (times
/// the common y-box), per domain.
pub fn cylinder_difference(d: &DomainSlab, n: usize, x_half: f64) -> f64 {
    let spec = &d.spec;
    let count = (0..spec.len())
        .into_par_iter()
        .filter(|&k| {
            let p = spec.point(&spec.unflat(k));
            if p[0].abs() > x_half {
                return false;
            }
            let inside_c = p[1..].iter().map(|y| y * y).sum::<f64>() < n as f64;
            inside_c != d.mask[k]
        })
        .count();
    count as f64 * d.cell_volume()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TorsionOptions {
    /// Nodes per axis; default 257 on each of the `N + 1` axes.
    pub counts: Option<Vec<usize>>,
    /// x half-extent as a multiple of `max(M_ε, crossing)`.
    pub x_factor: f64,
    /// y half-extent as a multiple of `√N`.
    pub y_factor: f64,
}

impl Default for TorsionOptions {
    fn default() -> Self {
        TorsionOptions { counts: None, x_factor: 1.1, y_factor: 1.15 }
    }
}

pub fn torsion_grid(tf: &TorsionField, opts: &TorsionOptions) -> Result<GridSpec, TorsionError> {
    let d = tf.n + 1;
    let reach = tf.m_eps().max(tf.axis_crossing().unwrap_or(0.0));
    let mut half = vec![opts.y_factor * (tf.n as f64).sqrt(); d];
    half[0] = opts.x_factor * reach;
    let counts = opts.counts.clone().unwrap_or_else(|| vec![257; d]);
    if counts.len() != d {
        return Err(TorsionError::InvalidInput(format!("{} grid counts for dimension {d}", counts.len())));
    }
    Ok(GridSpec::symmetric(&half, &counts)?)
}

pub fn extract_torsion_domain(tf: &TorsionField, opts: &TorsionOptions) -> Result<DomainSlab, TorsionError> {
    Ok(extract_component(tf, &torsion_grid(tf, opts)?)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check<T, E: std::fmt::Display>(name: &str, r: &Result<T, E>, ok: impl Fn(&T) -> String) -> Check {
    match r {
        Ok(v) => Check { name: name.into(), passed: true, detail: ok(v) },
        Err(e) => Check { name: name.into(), passed: false, detail: e.to_string() },
    }
}

#[derive(Debug, Clone)]
pub struct EpsReport {
    pub eps: f64,
    pub domain: DomainSlab,
    pub star_alpha: Option<f64>,
    /// Largest gap between `x u_x + y·∇_y u` and its boundary form.
    pub radial_gap: f64,
    pub curvature: Option<CurvatureReport>,
    pub asymptotics: Option<AsymptoticsReport>,
    pub points: Vec<CriticalPoint>,
    pub maxima: Vec<CriticalPoint>,
    pub expected_maxima: Vec<f64>,
    pub margin: Option<f64>,
    /// Largest relative gap between `∂xx u_ε`, `εN q″` and the product identity.
    pub q2_gap: f64,
    /// `u_ε / N` at the maxima.
    pub normalized_max_values: Vec<f64>,
    pub cylinder_volume: f64,
    pub checks: Vec<Check>,
}

impl EpsReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

#[derive(Debug, Clone)]
pub struct TorsionReport {
    pub k: usize,
    pub roots: Vec<f64>,
    pub n: usize,
    pub per_eps: Vec<EpsReport>,
    pub checks: Vec<Check>,
}

impl TorsionReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed) && self.per_eps.iter().all(|r| r.passed())
    }
}

/// Full certification at one ε on an already extracted domain.
pub fn certify_eps(tf: &TorsionField, d: DomainSlab) -> EpsReport {
    let mut checks = Vec::new();
    let sym = check_symmetry(&d);
    checks.push(check("symmetry", &sym, |_| "mask invariant under all reflections".into()));
    let star = check_star_shape(tf, &d);
    checks.push(check("star_shape", &star, |s| format!("alpha = {:.6e}", s.alpha)));
    let radial_gap = d.vertices.iter().map(|v| tf.radial_pair(&v.point)).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    checks.push(Check {
        name: "radial_identity".into(),
        passed: radial_gap <= 1e-8,
        detail: format!("max gap {radial_gap:.3e}"),
    });
    let curv = certify_positive_curvature(tf, &d);
    checks.push(check("positive_curvature", &curv, |c| format!("min K_m = {:.6e}", c.min)));
    let cyl = curv.as_ref().ok().map(|c| (c.patch_mean - c.cylinder).abs() / c.cylinder);
    checks.push(Check {
        name: "cylinder_curvature".into(),
        passed: cyl.is_some_and(|g| g <= CYLINDER_TOL),
        detail: match (&curv, cyl) {
            (Ok(c), Some(g)) => format!(
                "mean K_m on |x| <= {CYLINDER_PATCH_X} is {:.6e} vs {:.6e} (gap {g:.3e}, worst vertex {:.3e})",
                c.patch_mean, c.cylinder, c.patch_max_dev
            ),
            _ => "no curvature samples".into(),
        },
    });
    let asym = boundary_asymptotics(tf, &d);
    checks.push(check("boundary_asymptotics", &asym, |a| {
        format!("crossing {:.9} (exact {:.9}), M_eps {:.6}", a.crossing_domain, a.crossing_exact, a.m_eps)
    }));

    let expected = tf.poly.q_maxima();
    let scan = find_critical_points(tf, &d, &ScanOptions::default());
    let (points, maxima, margin) = match &scan {
        Ok(s) => {
            let maxima: Vec<CriticalPoint> = s.maxima().cloned().collect();
            (s.points.clone(), maxima, nondegeneracy_margin(&s.points, s.floor).ok())
        }
        Err(_) => (Vec::new(), Vec::new(), None),
    };
    let located = maxima.len() == expected.len()
        && maxima.iter().zip(&expected).all(|(m, &t)| {
            (m.location[0] - t).abs() <= 1e-9 * t.abs().max(1.0) && m.location[1..].iter().all(|y| y.abs() <= 1e-9)
        });
    checks.push(Check {
        name: "maxima".into(),
        passed: scan.is_ok() && located && margin.is_some(),
        detail: format!(
            "{} maxima at x = {:?}, expected {:?}",
            maxima.len(),
            maxima.iter().map(|m| m.location[0]).collect::<Vec<_>>(),
            expected
        ),
    });
    let mut q2_gap = 0.0f64;
    for &t in expected.iter().filter(|t| **t != 0.0) {
        let mut p = vec![0.0; tf.n + 1];
        p[0] = t;
        let uxx = tf.jet(&p).h(0, 0);
        let direct = tf.uxx_on_axis(t);
        let ident = tf.eps * tf.n as f64 * tf.poly.q2_identity(t);
        q2_gap = q2_gap.max((uxx - direct).abs() / direct.abs()).max((ident - direct).abs() / direct.abs());
    }
    checks.push(Check { name: "q2_identity".into(), passed: q2_gap <= 1e-12, detail: format!("{q2_gap:.3e}") });
    let normalized_max_values = maxima.iter().map(|m| m.value / tf.n as f64).collect();
    let cylinder_volume = cylinder_difference(&d, tf.n, CYLINDER_PATCH_X);
    EpsReport {
        eps: tf.eps,
        star_alpha: star.ok().map(|s| s.alpha),
        radial_gap,
        curvature: curv.ok(),
        asymptotics: asym.ok(),
        points,
        maxima,
        expected_maxima: expected,
        margin,
        q2_gap,
        normalized_max_values,
        cylinder_volume,
        checks,
        domain: d,
    }
}

/// Extraction and every certification for each ε, plus the cylinder limit
/// across the list (which must be decreasing).
pub fn certify_torsion_theorem(
    k: usize,
    roots: &[f64],
    n: usize,
    eps_list: &[f64],
    opts: &TorsionOptions,
) -> Result<TorsionReport, TorsionError> {
    if eps_list.is_empty() || eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(TorsionError::InvalidInput("eps list must be nonempty and strictly decreasing".into()));
    }
    let mut per_eps = Vec::new();
    for &eps in eps_list {
        let tf = build_torsion_field(k, roots, n, eps)?;
        let d = extract_torsion_domain(&tf, opts)?;
        per_eps.push(certify_eps(&tf, d));
    }
    let volumes: Vec<f64> = per_eps.iter().map(|r| r.cylinder_volume).collect();
    let mut checks = Vec::new();
    if volumes.len() > 1 {
        checks.push(Check {
            name: "cylinder_limit".into(),
            passed: volumes.windows(2).all(|w| w[1] <= w[0]),
            detail: format!("symmetric-difference volumes {volumes:?}"),
        });
    }
    if per_eps.len() > 1 {
        let mins: Vec<f64> = per_eps.iter().filter_map(|r| r.curvature.as_ref().map(|c| c.min)).collect();
        let tips: Vec<(f64, f64)> = eps_list
            .iter()
            .filter_map(|&e| build_torsion_field(k, roots, n, e).ok().and_then(|tf| tip_numerator(&tf)))
            .collect();
        let gaps: Vec<f64> = tips.iter().map(|(t, lead)| (t / lead - 1.0).abs()).collect();
        checks.push(Check {
            name: "curvature_trend".into(),
            passed: mins.len() == per_eps.len()
                && mins.iter().all(|m| *m > 0.0)
                && tips.len() == per_eps.len()
                && tips.windows(2).all(|w| 0.0 < w[1].0 && w[1].0 < w[0].0)
                && gaps.windows(2).all(|w| w[1] < w[0]),
            detail: format!(
                "min K_m {mins:?}; tip N|grad u|^3 K_m {:?}; relative gap to 2^(1/k) N^3 k^2 eps^(1/k) {gaps:?}",
                tips.iter().map(|t| t.0).collect::<Vec<_>>()
            ),
        });
    }
    Ok(TorsionReport { k, roots: roots.to_vec(), n, per_eps, checks })
}

/// `N|∇u|³K_m` at the axis tip and its leading term `2^{1/k}N³k²ε^{1/k}`.
pub fn tip_numerator(tf: &TorsionField) -> Option<(f64, f64)> {
    let x = tf.axis_crossing()?;
    let mut p = vec![0.0; tf.n + 1];
    p[0] = x;
    let jet = tf.jet(&p);
    let km = mean_curvature_of_jet(&jet).ok()?;
    let (n, k) = (tf.n as f64, tf.k() as f64);
    let lead = 2f64.powf(1.0 / k) * n.powi(3) * k * k * tf.eps.powf(1.0 / k);
    Some((n * jet.grad_norm().powi(3) * km, lead))
}

/// Per-vertex curvature table.
pub fn curvature_csv(d: &DomainSlab, c: &CurvatureReport) -> String {
    let dim = d.dim();
    let mut s = String::from("x");
    for j in 1..dim {
        s.push_str(&format!(",y{j}"));
    }
    s.push_str(",k_m\n");
    for (v, k) in d.vertices.iter().zip(&c.samples) {
        for (a, p) in v.point.iter().enumerate() {
            if a > 0 {
                s.push(',');
            }
            s.push_str(&format!("{p:.9}"));
        }
        s.push_str(&format!(",{k:.9e}\n"));
    }
    s
}
