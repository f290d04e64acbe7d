use std::f64::consts::PI;

use coshcombo::{default_taus, CoshCombo};
use domainforge::{extract_component, m_eps, DomainSlab};
use ellipsolve::*;
use fieldkit::{assemble_phi, smallness_threshold, superpose, FnField, GridSpec, Jet, PhiField};
use profile1d::{lambda_star_estimate, omega_mode, solve_profile, Mode, Nonlinearity, Profile1D};
use proptest::prelude::*;

fn field(dim: usize, v: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> FnField {
    FnField::new(dim, v, move |_| Jet::zeros(dim))
}

/// `(-½, ½)²` or `(-1, 1)²` with the sides on grid lines at spacing `h`.
fn square(half: f64, h: f64) -> DomainSlab {
    let n = (half / h).round() as usize + 4;
    let ext = n as f64 * h;
    let u = field(2, move |p| (half * half - p[0] * p[0]) * (half * half - p[1] * p[1]));
    extract_component(&u, &GridSpec::symmetric(&[ext, ext], &[2 * n + 1, 2 * n + 1]).unwrap()).unwrap()
}

fn disk(h: f64) -> DomainSlab {
    let n = (1.25 / h).round() as usize;
    let spec = GridSpec::symmetric(&[n as f64 * h, n as f64 * h], &[2 * n + 1, 2 * n + 1]).unwrap();
    extract_component(&FnField::paraboloid(2, 1.0), &spec).unwrap()
}

fn center(sol: &DiscreteSolution) -> f64 {
    let spec = &sol.op.spec;
    let c: Vec<usize> = spec.counts.iter().map(|n| n / 2).collect();
    sol.u[sol.op.index[spec.flat(&c)]]
}

/// Torsion value at the center of the unit square by its double sine series.
fn square_center_series() -> f64 {
    let mut s = 0.0;
    for m in (1..4000).step_by(2) {
        for n in (1..4000).step_by(2) {
            let sign = if ((m + n) / 2) % 2 == 1 { 1.0 } else { -1.0 };
            let (m, n) = (m as f64, n as f64);
            s += sign * 16.0 / (PI.powi(4) * m * n * (m * m + n * n));
        }
    }
    s
}

#[test]
fn unit_square_torsion_center() {
    let reference = square_center_series();
    assert!((reference - 0.07367).abs() < 1e-5, "{reference}");
    let op = discretize(&square(0.5, 1.0 / 128.0)).unwrap();
    let sol = solve_stable(&op, &Nonlinearity::constant(1.0), 1.0).unwrap();
    assert!((center(&sol) - reference).abs() < 1e-3, "{}", center(&sol));
    assert!(sol.iterations <= 2);
    assert!(sol.defect < 1e-10);
}

#[test]
fn disk_torsion_and_second_order_convergence() {
    let mut errs = Vec::new();
    let hs = [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0];
    for &h in &hs {
        let op = discretize(&disk(h)).unwrap();
        let sol = solve_stable(&op, &Nonlinearity::constant(1.0), 1.0).unwrap();
        let err = (0..op.len())
            .map(|i| {
                let p = op.point(i);
                (sol.u[i] - (1.0 - p[0] * p[0] - p[1] * p[1]) / 4.0).abs()
            })
            .fold(0.0, f64::max);
        if h == 1.0 / 128.0 {
            assert!((center(&sol) - 0.25).abs() < 1e-4, "{}", center(&sol));
        }
        errs.push(err);
    }
    let slope = loglog_slope(&hs, &errs);
    assert!(slope >= 1.9, "errors {errs:?}, slope {slope}");
}

#[test]
fn square_dirichlet_eigenvalue() {
    let op = discretize(&square(1.0, 1.0 / 128.0)).unwrap();
    let start = vec![1.0; op.len()];
    let e = lowest_eigen(&op, &vec![0.0; op.len()], &start, &SolveOptions::default()).unwrap();
    let exact = PI * PI / 2.0;
    assert!((e.mu - exact).abs() / exact < 5e-3, "{}", e.mu);
    assert!(e.lower <= e.mu + 1e-9);
    assert!(e.vector.iter().all(|&v| v > 0.0));
}

#[test]
fn too_coarse_domain_is_rejected() {
    let u = field(2, |p| 0.1 - p[0] * p[0] - p[1] * p[1]);
    let d = extract_component(&u, &GridSpec::symmetric(&[2.0, 2.0], &[9, 9]).unwrap()).unwrap();
    assert_eq!(d.inside_count(), 1);
    assert!(matches!(discretize(&d), Err(SolveError::TooCoarse { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn discrete_maximum_principle(load in proptest::collection::vec(0.0f64..1.0, 1..50), seed in 0usize..1000) {
        let op = discretize(&disk(1.0 / 16.0)).unwrap();
        let b: Vec<f64> = (0..op.len()).map(|i| load[(i * 7 + seed) % load.len()]).collect();
        let mut x = vec![0.0; op.len()];
        op.system(None).unwrap().solve(&b, &mut x, 1e-14, 10_000).unwrap();
        prop_assert!(x.iter().all(|&v| v >= -1e-14));
    }

    #[test]
    fn operator_is_symmetric(seed in 0u64..1000) {
        let op = discretize(&disk(1.0 / 8.0)).unwrap();
        let n = op.len();
        let v: Vec<f64> = (0..n).map(|i| (((i as u64 + 1) * (seed + 3)) % 17) as f64 - 8.0).collect();
        let w: Vec<f64> = (0..n).map(|i| (((i as u64 + 5) * (seed + 11)) % 13) as f64 - 6.0).collect();
        let (mut av, mut aw) = (vec![0.0; n], vec![0.0; n]);
        op.apply(&v, None, &mut av);
        op.apply(&w, None, &mut aw);
        let (a, b) = (dot(&w, &av), dot(&v, &aw));
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }
}

#[test]
fn constant_source_is_one_linear_solve() {
    let op = discretize(&disk(1.0 / 32.0)).unwrap();
    let lambda = 3.0;
    let sol = solve_stable(&op, &Nonlinearity::constant(1.0), lambda).unwrap();
    let mut direct = vec![0.0; op.len()];
    let rhs: Vec<f64> = op.weight.iter().map(|w| lambda * w).collect();
    op.system(None).unwrap().solve(&rhs, &mut direct, 1e-13, 10_000).unwrap();
    assert!(sol.iterations <= 2);
    let gap = sol.u.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-11, "{gap}");
    // Zero potential: the eigenvalue is the Dirichlet one of the disk, j₀,₁².
    assert!((sol.mu_lin - 2.404_825_557_695_773f64.powi(2)).abs() < 0.01, "{}", sol.mu_lin);
}

/// `[-8, 8] × [-1, 1]`, a truncation of the strip.
fn truncated_strip() -> DomainSlab {
    let u = field(2, |p| (64.0 - p[0] * p[0]) * (1.0 - p[1] * p[1]));
    extract_component(&u, &GridSpec::symmetric(&[8.25, 1.125], &[133, 73]).unwrap()).unwrap()
}

#[test]
fn gelfand_beyond_the_extremal_parameter_diverges() {
    let f = Nonlinearity::exponential();
    let (lo, hi) = lambda_star_estimate(&f, (-1.0, 1.0), 1e-3, 100.0).unwrap();
    assert!((lo - 0.878).abs() < 5e-3, "{lo}");
    let op = discretize(&truncated_strip()).unwrap();
    let ok = solve_stable(&op, &f, 0.9 * lo).unwrap();
    assert!(ok.mu_lin > 0.0 && ok.mu_lower > 0.0);
    // Below the strip value the strip profile bounds the solution.
    let p = solve_profile(&f, 0.9 * lo, 0.1).unwrap();
    assert!(ok.sup() < p.sup_norm());
    match solve_stable(&op, &f, 1.2 * hi) {
        Err(SolveError::IterationDiverged { .. }) => {}
        other => panic!("{:?}", other.map(|s| s.sup())),
    }
}

#[test]
fn monotone_iterates_converge_to_positive_minimal_solution() {
    let f = Nonlinearity::exponential();
    let op = discretize(&disk(1.0 / 32.0)).unwrap();
    let sol = solve_stable(&op, &f, 1.0).unwrap();
    assert!(sol.u.iter().all(|&v| v > 0.0));
    assert!(sol.defect < 1e-9, "{}", sol.defect);
    // A second, upper solution would have mu_lin < 0; the minimal one is stable.
    assert!(sol.mu_lin > 0.0);
    let sol2 = solve_stable(&op, &f, 1.5).unwrap();
    assert!(sol2.u.iter().zip(&sol.u).all(|(a, b)| a > b));
    assert!(sol2.mu_lin < sol.mu_lin);
}

#[test]
fn flat_strip_expansion_residual_is_discretization_only() {
    let p = solve_profile(&Nonlinearity::constant(1.0), 1.0, 0.1).unwrap();
    let u = field(2, |q| (400.0 - q[0] * q[0]) * (1.0 - q[1] * q[1]));
    let d = extract_component(&u, &GridSpec::symmetric(&[20.5, 1.1], &[165, 513]).unwrap()).unwrap();
    let op = discretize(&d).unwrap();
    let sol = solve_stable_split(&op, &p, &SolveOptions::default()).unwrap();
    let zero = FnField::new(2, |_| 0.0, |_| Jet::zeros(2));
    let k = KBox { lo: vec![-2.0, -0.9], hi: vec![2.0, 0.9] };
    let rep = expansion_residual(&sol, &p, &zero, 0.0, &k).unwrap();
    assert!(rep.analytic < 1e-6, "{}", rep.analytic);
    assert_eq!(rep.discrete, Some(0.0));
    let outside = KBox { lo: vec![-2.0, -1.05], hi: vec![2.0, 0.9] };
    assert!(matches!(expansion_residual(&sol, &p, &zero, 0.0, &outside), Err(SolveError::KOutsideDomain { .. })));
}

#[test]
fn strip_profile_is_second_order() {
    let p = solve_profile(&Nonlinearity::exponential(), 0.5, 0.1).unwrap();
    let mut errs = Vec::new();
    let hs: [f64; 3] = [2.2 / 64.0, 2.2 / 128.0, 2.2 / 256.0];
    for &h in &hs {
        let n = (1.1 / h).round() as usize;
        let u = field(2, |q| (25.0 - q[0] * q[0]) * (1.0 - q[1] * q[1]));
        let d = extract_component(&u, &GridSpec::symmetric(&[6.0, 1.1], &[25, 2 * n + 1]).unwrap()).unwrap();
        let op = discretize(&d).unwrap();
        let s = strip_profile(&op, &p, 1.0).unwrap();
        let (j0, j1) = s.inner;
        errs.push((j0..=j1).map(|j| (s.values[j] - p.value(s.y[j])).abs()).fold(0.0, f64::max));
        // Beyond the cut the full stencil holds.
        let hy = op.spec.h(1);
        for j in j1 + 1..s.y.len() - 1 {
            let lhs = (2.0 * s.values[j] - s.values[j - 1] - s.values[j + 1]) / (hy * hy);
            assert!((lhs - 0.5 * s.values[j].exp()).abs() < 1e-6 * lhs.abs().max(1.0));
        }
    }
    assert!(loglog_slope(&hs, &errs) > 1.8, "{errs:?}");
}

struct Construction {
    p: Profile1D,
    combo: CoshCombo,
    modes: Vec<Mode>,
    phi: PhiField,
    eps_top: f64,
    d: DomainSlab,
}

fn construction(f: Nonlinearity, lambda: f64, eps: f64, counts: [usize; 2]) -> Construction {
    let p = solve_profile(&f, lambda, 0.1).unwrap();
    let combo = CoshCombo::build(&default_taus(2), p.mu0()).unwrap();
    let modes: Vec<Mode> = combo.mus.iter().map(|&mu| omega_mode(&p, mu).unwrap()).collect();
    let phi = assemble_phi(&combo, &modes, 1).unwrap();
    let eps_top = eps * smallness_threshold(&p, &phi, 0.05).unwrap().eps0;
    let top = modes.last().unwrap();
    let m = m_eps(top.mu(), p.sup_norm(), top.value(1.05), eps_top);
    let u = superpose(&p, phi.clone(), eps_top).unwrap();
    let d = extract_component(&u, &GridSpec::symmetric(&[1.15 * m, 1.1], &counts).unwrap()).unwrap();
    Construction { p, combo, modes, phi, eps_top, d }
}

#[test]
fn gelfand_expansion_rate_barriers_and_strip_bound() {
    let epss = [0.02, 0.01, 0.005];
    let mut sups = Vec::new();
    let mut h_eps = Vec::new();
    let mut rows = Vec::new();
    for &eps in &epss {
        let c = construction(Nonlinearity::exponential(), 0.5, eps, [513, 257]);
        let op = discretize(&c.d).unwrap();
        let sol = solve_stable_split(&op, &c.p, &SolveOptions::default()).unwrap();
        assert!(sol.mu_lin > 0.0);
        let s = sol.split.as_ref().unwrap();
        assert!(s.agreement < 1e-8, "{}", s.agreement);
        let kx = 1.25 * c.combo.maxima_t[1];
        let rep = expansion_residual(&sol, &c.p, &c.phi, c.eps_top, &KBox { lo: vec![-kx, -0.9], hi: vec![kx, 0.9] })
            .unwrap();
        assert!(rep.psi_min.unwrap() >= -1e-8);
        sups.push(rep.discrete.unwrap());
        let b = build_barriers(&c.p, &c.combo, &c.modes, 0.05, 1).unwrap();
        let br = barrier_check(&sol, &b, &c.p, c.eps_top).unwrap();
        assert!(br.psi_over_bar < 1.0 && br.psi_over_inf < 1.0, "{br:?}");
        let eta = eta_of(&sol, &c.d.bbox_lo, &c.d.bbox_hi, 1.0);
        let bound = monotone_bound_check(&sol, &c.p, eta, 1e-9).unwrap();
        assert!(bound.h_eps >= 0.0);
        h_eps.push(bound.h_eps);
        rows.push(ResidualRow {
            eps,
            eps_top: c.eps_top,
            analytic: rep.analytic,
            discrete: rep.discrete.unwrap(),
            psi_min: rep.psi_min.unwrap(),
            mu_lin: sol.mu_lin,
        });
    }
    let slope = loglog_slope(&epss, &sups);
    assert!(slope >= 1.8, "sups {sups:?} slope {slope}");
    assert!(h_eps[0] >= h_eps[1] && h_eps[1] >= h_eps[2], "{h_eps:?}");
    let csv = residual_csv(&rows);
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("eps,eps_top,"));
}

#[test]
fn barrier_constants_and_ladder() {
    let p1 = solve_profile(&Nonlinearity::constant(1.0), 1.0, 0.1).unwrap();
    let single = omega_mode(&p1, 0.25).unwrap();
    let b = build_barriers_from(&p1, &[-1.0], std::slice::from_ref(&single), 0.05, 1).unwrap();
    let min = single.min_on(1.05);
    assert!((b.c[0] - 0.5 * min).abs() < 1e-15);
    assert!(b.c_inf > 0.0 && b.mu_inf == 1.0);
    // f ≡ 1: ω_μ(y) = cos(√μ y), so ψ̄ = (cos(y/2) - ½cos(1.05/2)) cosh(x/2).
    for &(x, y) in &[(0.0f64, 0.0f64), (3.0, 1.05), (-7.0, -0.4)] {
        let exact = ((0.5 * y).cos() - 0.5 * (0.5f64 * 1.05).cos()) * (0.5 * x).cosh();
        assert!((fieldkit::ScalarField::value(&b.psi_bar, &[x, y]) - exact).abs() < 1e-9 * exact.abs().max(1.0));
        assert!(fieldkit::ScalarField::value(&b.psi_bar, &[x, y]) > 0.0);
    }
    let wide = omega_mode(&p1, 0.6).unwrap();
    assert!(matches!(
        build_barriers_from(&p1, &[-1.0], &[wide], 0.05, 1),
        Err(SolveError::LadderViolation { .. })
    ));
    for (f, lambda) in [(Nonlinearity::constant(1.0), 1.0), (Nonlinearity::exponential(), 0.5)] {
        let p = solve_profile(&f, lambda, 0.1).unwrap();
        for k in 1..=3 {
            let combo = CoshCombo::build(&default_taus(k), p.mu0()).unwrap();
            assert!(4.0 * combo.top_mu() < p.mu0());
            let modes: Vec<Mode> = combo.mus.iter().map(|&mu| omega_mode(&p, mu).unwrap()).collect();
            let b = build_barriers(&p, &combo, &modes, 0.05, 2).unwrap();
            assert!(b.c.iter().zip(&modes).all(|(c, m)| *c > 0.0 && *c < m.min_on(1.05)));
        }
    }
}

#[test]
fn solution_dump_round_trip() {
    let op = discretize(&disk(1.0 / 16.0)).unwrap();
    let sol = solve_stable(&op, &Nonlinearity::constant(1.0), 1.0).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_solution_dump(&sol, &dir.path().join("u")).unwrap();
    let bytes = std::fs::read(dir.path().join("u.bin")).unwrap();
    assert_eq!(bytes.len(), 8 * op.spec.len());
    let vals: Vec<f64> = bytes.chunks(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    assert_eq!(vals, sol.grid_values());
    let json = std::fs::read_to_string(dir.path().join("u.json")).unwrap();
    assert!(json.contains("\"counts\": [41, 41]"));
}
