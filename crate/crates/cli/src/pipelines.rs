//! The five commands.

use coshcombo::{verify_maxima, CoshCombo};
use critscan::{
    critical_csv, find_critical_points, interpolate_solution, is_reflection_symmetric, markers, nondegeneracy_margin,
    Scan, ScanOptions,
};
use domainforge::{
    boundary_csv, check_bounding_box, check_inclusion, check_star_shape, check_strip_convergence, check_symmetry,
    extract_component, m_eps, obj_mesh, remark_r_demo, svg_contour, DomainError, DomainSlab,
};
use ellipsolve::{
    barrier_check, build_barriers, discretize, expansion_residual, loglog_slope, solve_stable_split, DiscreteSolution,
    KBox, SolveOptions,
};
use fieldkit::{assemble_phi, smallness_threshold, superpose, GridSpec, PhiField, Superposed};
use profile1d::{lambda_star_estimate, omega_mode, profile_csv, solve_profile, Mode, Profile1D, ProfileError};
use serde_json::{json, Value};
use torsionlab::{certify_torsion_theorem, curvature_csv, tip_numerator, TorsionOptions};

use crate::{CheckLine, CliError, Outcome, Report, RunConfig, Verdict};

fn solver(e: impl std::fmt::Display) -> CliError {
    CliError::Solver(e.to_string())
}

/// `null` for non-finite numbers, so reports stay valid JSON.
fn jnum(x: f64) -> Value {
    if x.is_finite() {
        json!(x)
    } else {
        Value::Null
    }
}

fn text(name: &str, s: String) -> (String, Vec<u8>) {
    (name.to_string(), s.into_bytes())
}

pub fn cmd_profile(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let f = cfg.nonlinearity.build()?;
    f.check_hypotheses().map_err(|e| CliError::Input(e.to_string()))?;
    let bracket = match lambda_star_estimate(&f, (-1.0, 1.0), cfg.lambda_star_width, cfg.lambda_star_cap) {
        Ok(b) => Some(b),
        Err(ProfileError::NoFailureFound { .. }) => None,
        Err(e) => return Err(solver(e)),
    };
    let p = solve_profile(&f, cfg.lambda, cfg.sigma).map_err(|e| match bracket {
        Some((lo, hi)) => CliError::Solver(format!("{e} (lambda* lies in [{lo}, {hi}])")),
        None => solver(e),
    })?;
    let combo = CoshCombo::build(&cfg.taus(), p.mu0()).map_err(solver)?;
    let modes: Vec<Mode> = combo.mus.iter().map(|&mu| omega_mode(&p, mu)).collect::<Result<_, _>>().map_err(solver)?;

    let mut checks = vec![
        CheckLine::new("profile_residual", p.residual() <= 1e-6, format!("{:.3e}", p.residual())),
        CheckLine::new("stable_extension", p.mu0() > 0.0, format!("mu0 = {:.12}", p.mu0())),
        CheckLine::new(
            "mu_ladder",
            4.0 * combo.top_mu() < p.mu0(),
            format!("4 mu_n = {:.6e} < mu0 = {:.6e}", 4.0 * combo.top_mu(), p.mu0()),
        ),
    ];
    for m in &modes {
        let (w0, w1) = (m.value(0.0), m.value(p.half_width() + p.sigma()));
        checks.push(CheckLine::new(
            format!("mode_positive mu={}", m.mu()),
            w0 > 0.0 && w1 > 0.0 && w1 < w0,
            format!("omega(0) = {w0:.9}, omega(L+sigma) = {w1:.9}"),
        ));
    }
    let bracket_csv = match bracket {
        Some((lo, hi)) => format!("lo,hi\n{lo},{hi}\n"),
        None => format!("lo,hi\n{},inf\n", cfg.lambda_star_cap),
    };
    let data = json!({
        "nonlinearity": f.name(),
        "lambda": cfg.lambda,
        "height": p.height(),
        "u0_at_0": p.value(0.0),
        "mu0": p.mu0(),
        "sup_norm": p.sup_norm(),
        "lambda_star": bracket.map(|(lo, hi)| json!([lo, hi])),
        "mode_mus": combo.mus,
    });
    Ok(Outcome {
        report: Report::new(cfg, checks, data),
        files: vec![text("profile.csv", profile_csv(&p, &modes)), text("lambda_star.csv", bracket_csv)],
    })
}

/// The many-maxima construction at one ε, before extraction.
pub struct Construction {
    pub p: Profile1D,
    pub combo: CoshCombo,
    pub modes: Vec<Mode>,
    pub eps_top: f64,
    pub m_eps: f64,
    pub u: Superposed<PhiField>,
}

impl Construction {
    /// `[-1.15 M_ε, 1.15 M_ε]^n × [-1-σ, 1+σ]` with the configured counts.
    pub fn grid(&self, counts: &[usize]) -> Result<GridSpec, CliError> {
        let n = counts.len() - 1;
        let mut half = vec![1.15 * self.m_eps; n];
        half.push(self.p.half_width() + self.p.sigma());
        GridSpec::symmetric(&half, counts).map_err(solver)
    }
}

pub fn construct(cfg: &RunConfig, eps: f64) -> Result<Construction, CliError> {
    let f = cfg.nonlinearity.build()?;
    let p = solve_profile(&f, cfg.lambda, cfg.sigma).map_err(solver)?;
    let combo = CoshCombo::build(&cfg.taus(), p.mu0()).map_err(solver)?;
    let modes: Vec<Mode> = combo.mus.iter().map(|&mu| omega_mode(&p, mu)).collect::<Result<_, _>>().map_err(solver)?;
    let phi = assemble_phi(&combo, &modes, cfg.n).map_err(solver)?;
    let eps_top = eps * smallness_threshold(&p, &phi, cfg.eta).map_err(solver)?.eps0;
    let top = modes.last().expect("k >= 1");
    let m = m_eps(top.mu(), p.sup_norm(), top.value(p.half_width() + cfg.eta), eps_top);
    let u = superpose(&p, phi, eps_top).map_err(solver)?;
    Ok(Construction { p, combo, modes, eps_top, m_eps: m, u })
}

fn domain_checks(c: &Construction, d: &DomainSlab, eta: f64, checks: &mut Vec<CheckLine>) -> Value {
    let sym = check_symmetry(d);
    checks.push(CheckLine::new("symmetry", sym.is_ok(), sym.err().map_or("mask invariant under reflections".into(), |e| e.to_string())));
    let star = check_star_shape(&c.u, d);
    checks.push(match &star {
        Ok(s) => CheckLine::new("star_shape", s.alpha > 0.0, format!("alpha = {:.6e}", s.alpha)),
        Err(e) => CheckLine::new("star_shape", false, e.to_string()),
    });
    let incl = check_inclusion(d, &c.combo.maxima_t);
    checks.push(match &incl {
        Ok(n) => CheckLine::new("inclusion", true, format!("[t_1, t_k] on the axis inside, {n} nodes tested")),
        Err(e) => CheckLine::new("inclusion", false, e.to_string()),
    });
    let bx = check_bounding_box(d, &c.p, c.modes.last().expect("k >= 1"), c.eps_top, eta);
    checks.push(match &bx {
        Ok(b) => CheckLine::new("bounding_box", true, format!("M_eps = {:.6}, slack {:.3e}", b.m_eps, b.margin)),
        Err(e) => CheckLine::new("bounding_box", false, e.to_string()),
    });
    json!({
        "inside_nodes": d.inside_count(),
        "bbox_lo": d.bbox_lo,
        "bbox_hi": d.bbox_hi,
        "star_alpha": star.as_ref().ok().map(|s| s.alpha),
        "m_eps": c.m_eps,
    })
}

fn stable_solve(c: &Construction, d: &DomainSlab, cfg: &RunConfig, checks: &mut Vec<CheckLine>) -> Option<DiscreteSolution> {
    let sol = discretize(d).map_err(solver).and_then(|op| solve_stable_split(&op, &c.p, &SolveOptions::default()).map_err(solver));
    match sol {
        Ok(s) => {
            let agreement = s.split.as_ref().map_or(0.0, |sp| sp.agreement);
            checks.push(CheckLine::new(
                "stable_solve",
                s.mu_lin > 0.0 && agreement <= cfg.tol_agreement,
                format!("mu_lin = {:.6e}, defect {:.3e}, split vs monotone {:.3e}", s.mu_lin, s.defect, agreement),
            ));
            Some(s)
        }
        Err(e) => {
            checks.push(CheckLine::new("stable_solve", false, e.to_string()));
            None
        }
    }
}

fn maxima_checks(c: &Construction, d: &DomainSlab, scan: &Result<Scan, critscan::ScanError>, k: usize, checks: &mut Vec<CheckLine>) -> Value {
    let scan = match scan {
        Ok(s) => s,
        Err(e) => {
            checks.push(CheckLine::new("maxima", false, e.to_string()));
            return Value::Null;
        }
    };
    let maxima: Vec<&critscan::CriticalPoint> = scan.maxima().collect();
    let per_half = maxima.iter().filter(|m| m.location[0] > 0.0).count();
    let margin = nondegeneracy_margin(&scan.points, scan.floor);
    checks.push(CheckLine::new(
        "maxima",
        maxima.len() >= k && margin.is_ok(),
        format!(
            "{} nondegenerate maxima ({per_half} with x > 0), margin {}",
            maxima.len(),
            margin.as_ref().map_or_else(|e| e.to_string(), |m| format!("{m:.3e} over floor {:.3e}", scan.floor))
        ),
    ));
    let h: Vec<f64> = (0..d.dim()).map(|a| 2.0 * d.spec.h(a)).collect();
    checks.push(CheckLine::new(
        "critical_symmetry",
        is_reflection_symmetric(&scan.points, &h),
        format!("{} critical points", scan.points.len()),
    ));
    json!({
        "maxima": maxima.len(),
        "maxima_x_positive": per_half,
        "maxima_x": maxima.iter().map(|m| m.location[0]).collect::<Vec<_>>(),
        "predicted_t": c.combo.maxima_t,
        "hessian_eigs": maxima.iter().map(|m| m.hess_eigs.clone()).collect::<Vec<_>>(),
        "stalled_seeds": scan.stalled.len(),
    })
}

pub fn cmd_theorem1(cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.remark_construction {
        return cmd_remark_r(cfg);
    }
    let eps = cfg.eps[0];
    let c = construct(cfg, eps)?;
    let mut checks = Vec::new();
    let found = verify_maxima(&c.combo);
    checks.push(match &found {
        Ok(m) => CheckLine::new(
            "combo_maxima",
            m.len() >= cfg.k,
            format!("{} nondegenerate maxima at t = {:?}", m.len(), m.iter().map(|x| x.t).collect::<Vec<_>>()),
        ),
        Err(e) => CheckLine::new("combo_maxima", false, e.to_string()),
    });
    checks.push(CheckLine::new(
        "mu_ladder",
        4.0 * c.combo.top_mu() < c.p.mu0(),
        format!("4 mu_n = {:.6e} < mu0 = {:.6e}", 4.0 * c.combo.top_mu(), c.p.mu0()),
    ));
    let spec = c.grid(&cfg.grid)?;
    let mut data = json!({
        "eps": eps,
        "eps_top": c.eps_top,
        "mu0": c.p.mu0(),
        "mus": c.combo.mus,
        "alphas": c.combo.alphas,
    });
    let mut files = Vec::new();
    match extract_component(&c.u, &spec) {
        Err(e @ DomainError::ComponentTouchesGridEdge { .. }) => {
            checks.push(CheckLine::new("bounded", false, e.to_string()));
        }
        Err(e) => return Err(solver(e)),
        Ok(d) => {
            checks.push(CheckLine::new("bounded", true, format!("component clear of the grid faces ({} nodes)", d.inside_count())));
            data["domain"] = domain_checks(&c, &d, cfg.eta, &mut checks);
            if let Some(sol) = stable_solve(&c, &d, cfg, &mut checks) {
                data["mu_lin"] = jnum(sol.mu_lin);
                let s = interpolate_solution(&sol);
                let scan = find_critical_points(&s, &d, &ScanOptions::default());
                data["critical"] = maxima_checks(&c, &d, &scan, cfg.k, &mut checks);
                let points = scan.map(|s| s.points).unwrap_or_default();
                files.push(text("critical.csv", critical_csv(&points)));
                if d.dim() == 2 {
                    let title = format!("eps = {eps}, {} maxima", points.iter().filter(|p| p.kind == critscan::Kind::Max).count());
                    files.push(text("domain.svg", svg_contour(&d, &markers(&points), &title)));
                }
            }
            files.push(text("boundary.csv", boundary_csv(&d)));
        }
    }
    Ok(Outcome { report: Report::new(cfg, checks, data), files })
}

pub fn cmd_remark_r(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let rep = remark_r_demo(cfg.remark_mu1, cfg.remark_eps, &cfg.remark_widths, cfg.remark_doublings).map_err(solver)?;
    let mut checks = Vec::new();
    let mut csv = String::from("width,box_half_width,escapes,line_positive\n");
    for w in &rep.widths {
        for (b, e) in w.boxes.iter().zip(&w.escapes) {
            csv.push_str(&format!("{},{},{},{}\n", w.width, b, e, w.line_positive));
        }
        checks.push(CheckLine::new(
            format!("line_positive width={}", w.width),
            w.line_positive,
            format!("U > 0 on the line y = {:.6}", rep.ybar + rep.delta),
        ));
    }
    let escapes = rep.widths.iter().map(|w| w.escapes.iter().filter(|e| **e).count()).collect::<Vec<_>>();
    checks.push(CheckLine::new(
        "bounded",
        !rep.unbounded,
        if rep.unbounded {
            format!("component reaches the x-faces of every box and all {} doublings", cfg.remark_doublings)
        } else {
            format!("escapes per width {escapes:?}")
        },
    ));
    let data = json!({
        "mu1": rep.mu1,
        "eps": rep.eps,
        "ybar": rep.ybar,
        "delta": rep.delta,
        "unbounded": rep.unbounded,
        "escapes_per_width": escapes,
    });
    let mut report = Report::new(cfg, checks, data);
    // A negative control: the construction is supposed to fail here.
    report.result = if rep.unbounded { Verdict::ExpectedFail } else { Verdict::Fail };
    Ok(Outcome { report, files: vec![text("remark_r.csv", csv)] })
}

pub fn cmd_theorem2(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let opts = TorsionOptions { counts: Some(cfg.grid.clone()), ..Default::default() };
    let r = certify_torsion_theorem(cfg.k, &cfg.roots, cfg.n, &cfg.eps, &opts).map_err(solver)?;
    let mut checks = Vec::new();
    let mut files = Vec::new();
    let mut per_eps = Vec::new();
    for (i, e) in r.per_eps.iter().enumerate() {
        for c in &e.checks {
            checks.push(CheckLine::new(format!("eps={}: {}", e.eps, c.name), c.passed, c.detail.clone()));
        }
        let tf = torsionlab::build_torsion_field(cfg.k, &cfg.roots, cfg.n, e.eps).map_err(solver)?;
        let uxx: Vec<f64> = e.maxima.iter().map(|m| fieldkit::ScalarField::jet(&tf, &m.location).h(0, 0)).collect();
        let tip = tip_numerator(&tf);
        per_eps.push(json!({
            "eps": e.eps,
            "m_eps": tf.m_eps(),
            "star_alpha": e.star_alpha,
            "radial_gap": e.radial_gap,
            "min_k_m": e.curvature.as_ref().map(|c| c.min),
            "argmin_k_m": e.curvature.as_ref().map(|c| c.argmin.clone()),
            "cylinder_k_m": e.curvature.as_ref().map(|c| c.cylinder),
            "patch_mean_k_m": e.curvature.as_ref().map(|c| c.patch_mean),
            "patch_max_dev": e.curvature.as_ref().map(|c| c.patch_max_dev),
            "crossing_exact": e.asymptotics.as_ref().map(|a| a.crossing_exact),
            "crossing_domain": e.asymptotics.as_ref().map(|a| a.crossing_domain),
            "crossing_leading": e.asymptotics.as_ref().map(|a| a.leading),
            "maxima_x": e.maxima.iter().map(|m| m.location[0]).collect::<Vec<_>>(),
            "expected_maxima_x": e.expected_maxima,
            "uxx_at_maxima": uxx,
            "q2_gap": e.q2_gap,
            "margin": e.margin,
            "normalized_max_values": e.normalized_max_values,
            "cylinder_volume": e.cylinder_volume,
            "tip_numerator": tip.map(|t| t.0),
            "tip_leading": tip.map(|t| t.1),
            "vertices": e.domain.vertices.len(),
        }));
        if let Some(c) = &e.curvature {
            files.push(text(&format!("curvature_{i}.csv"), curvature_csv(&e.domain, c)));
        }
        files.push(text(&format!("critical_{i}.csv"), critical_csv(&e.points)));
        if e.domain.dim() == 3 {
            files.push(text(&format!("surface_{i}.obj"), obj_mesh(&e.domain)));
        }
    }
    for c in &r.checks {
        checks.push(CheckLine::new(c.name.clone(), c.passed, c.detail.clone()));
    }
    let data = json!({ "k": r.k, "roots": r.roots, "n": r.n, "per_eps": per_eps });
    Ok(Outcome { report: Report::new(cfg, checks, data), files })
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    let mut residuals = Vec::new();
    let mut builds = Vec::new();
    let mut csv = String::from("eps,eps_top,residual_k,analytic_k,psi_min,psi_over_bar,maxima,star_alpha,symdiff_volume,min_k_m\n");
    for &eps in &cfg.eps {
        let c = construct(cfg, eps)?;
        let d = extract_component(&c.u, &c.grid(&cfg.grid)?).map_err(solver)?;
        let op = discretize(&d).map_err(solver)?;
        let sol = solve_stable_split(&op, &c.p, &SolveOptions::default()).map_err(solver)?;
        let kx = 1.25 * c.combo.maxima_t.last().expect("k >= 1");
        let mut lo = vec![-kx; cfg.n];
        let mut hi = vec![kx; cfg.n];
        lo.push(-0.9);
        hi.push(0.9);
        let rep = expansion_residual(&sol, &c.p, c.u.phi(), c.eps_top, &KBox { lo, hi }).map_err(solver)?;
        let b = build_barriers(&c.p, &c.combo, &c.modes, cfg.eta, cfg.n).map_err(solver)?;
        let br = barrier_check(&sol, &b, &c.p, c.eps_top).map_err(solver)?;
        let scan = find_critical_points(&interpolate_solution(&sol), &d, &ScanOptions::default());
        let maxima = scan.as_ref().map_or(0, |s| s.maxima().count());
        let alpha = check_star_shape(&c.u, &d).map(|s| s.alpha).unwrap_or(f64::NAN);
        let residual = rep.discrete.unwrap_or(rep.analytic);
        let psi_min = rep.psi_min.unwrap_or(f64::NAN);
        checks.push(CheckLine::new(
            format!("eps={eps}: psi_lower"),
            psi_min >= -cfg.tol_psi,
            format!("min psi = {psi_min:.3e}"),
        ));
        checks.push(CheckLine::new(
            format!("eps={eps}: psi_barriers"),
            br.psi_over_bar < 1.0 && br.psi_over_inf < 1.0,
            format!("max psi/psi_bar = {:.3e}, max psi/psi_inf = {:.3e}", br.psi_over_bar, br.psi_over_inf),
        ));
        checks.push(CheckLine::new(
            format!("eps={eps}: maxima"),
            maxima >= cfg.k,
            format!("{maxima} maxima"),
        ));
        checks.push(CheckLine::new(format!("eps={eps}: star_shape"), alpha > 0.0, format!("alpha = {alpha:.6e}")));
        rows.push((eps, c.eps_top, residual, rep.analytic, psi_min, br.psi_over_bar, maxima, alpha));
        residuals.push(residual);
        builds.push(c);
    }

    // Strip convergence on one shared grid, the one of the smallest ε.
    let shared = builds.last().expect("at least 3 eps").grid(&cfg.grid)?;
    let domains: Vec<DomainSlab> = builds.iter().map(|c| extract_component(&c.u, &shared)).collect::<Result<_, _>>().map_err(solver)?;
    let k_hi: Vec<f64> = shared.hi.clone();
    let k_lo: Vec<f64> = k_hi.iter().map(|v| -v).collect();
    let volumes = check_strip_convergence(&domains, &k_lo, &k_hi);
    let vols: Vec<f64> = match &volumes {
        Ok(v) | Err(DomainError::NonConvergence { volumes: v }) => v.clone(),
        Err(e) => return Err(solver(e)),
    };
    checks.push(CheckLine::new(
        "symdiff_decreasing",
        vols.windows(2).all(|w| w[1] < w[0]),
        format!("strip symmetric-difference volumes {vols:?}"),
    ));

    // For constant f the quadratic remainder is zero to the bit and there is
    // no rate to fit.
    let identically_zero = residuals.iter().all(|r| *r == 0.0);
    let slope = loglog_slope(&cfg.eps, &residuals);
    checks.push(CheckLine::new(
        "expansion_slope",
        identically_zero || slope >= cfg.min_slope,
        if identically_zero {
            "remainder vanishes identically (all residuals are exactly 0)".to_string()
        } else {
            format!("log-log slope {slope:.4} (required {})", cfg.min_slope)
        },
    ));
    for ((eps, eps_top, res, ana, psi, bar, max, alpha), vol) in rows.iter().zip(&vols) {
        csv.push_str(&format!("{eps},{eps_top:e},{res:e},{ana:e},{psi:e},{bar:e},{max},{alpha:e},{vol:e},\n"));
    }
    csv.push_str(&format!("# slope,{slope}\n"));
    let data = json!({
        "eps": cfg.eps,
        "residuals": residuals.iter().map(|r| jnum(*r)).collect::<Vec<_>>(),
        "slope": jnum(slope),
        "remainder_identically_zero": identically_zero,
        "symdiff_volumes": vols,
    });
    Ok(Outcome { report: Report::new(cfg, checks, data), files: vec![text("sweep.csv", csv)] })
}
