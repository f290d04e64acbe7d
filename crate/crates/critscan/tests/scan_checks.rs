use coshcombo::{default_taus, CoshCombo};
use critscan::*;
use domainforge::{extract_component, m_eps, DomainSlab};
use ellipsolve::{discretize, solve_stable, solve_stable_split, SolveOptions};
use fieldkit::{
    assemble_phi, sample_on_grid, smallness_threshold, superpose, FnField, GridSpec, GridSpline, Jet, ScalarField,
};
use profile1d::{omega_mode, solve_profile, Mode, Nonlinearity};
use proptest::prelude::*;

fn disk_field() -> FnField {
    FnField::new(
        2,
        |p| 1.0 - p[0] * p[0] - p[1] * p[1],
        |p| Jet { value: 1.0 - p[0] * p[0] - p[1] * p[1], grad: vec![-2.0 * p[0], -2.0 * p[1]], hess: vec![-2.0, 0.0, 0.0, -2.0] },
    )
}

#[test]
fn disk_has_one_maximum_with_margin_two() {
    let f = disk_field();
    let d = extract_component(&f, &GridSpec::symmetric(&[1.2, 1.2], &[49, 49]).unwrap()).unwrap();
    let scan = find_critical_points(&f, &d, &ScanOptions::default()).unwrap();
    assert_eq!(scan.points.len(), 1);
    let p = &scan.points[0];
    assert_eq!(p.kind, Kind::Max);
    assert!(p.location.iter().all(|v| v.abs() < 1e-12));
    assert!(p.hess_eigs.iter().all(|e| (e + 2.0).abs() < 1e-12));
    assert!((nondegeneracy_margin(&scan.points, scan.floor).unwrap() - 2.0).abs() < 1e-12);
}

/// `(re, im)` product.
fn mul(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    (a.0 * b.0 - a.1 * b.1, a.0 * b.1 + a.1 * b.0)
}

/// `v = Re F` with `F(z) = -(z² - 1)(z² - 4)`: value, `v_t`, `v_s`, `v_tt`, `v_ts`, `v_ss`.
fn v_jet(t: f64, s: f64) -> [f64; 6] {
    let z = (t, s);
    let z2 = mul(z, z);
    let z3 = mul(z2, z);
    let z4 = mul(z2, z2);
    let f = (-z4.0 + 5.0 * z2.0 - 4.0, -z4.1 + 5.0 * z2.1);
    let f1 = (-4.0 * z3.0 + 10.0 * z.0, -4.0 * z3.1 + 10.0 * z.1);
    let f2 = (-12.0 * z2.0 + 10.0, -12.0 * z2.1);
    [f.0, f1.0, -f1.1, f2.0, -f2.1, -f2.0]
}

/// `u_ε = ½(2 - |y|²) + ε Σ_j v(x, y_j)` in `(x, y₁, y₂)`.
fn torsion_field(eps: f64) -> FnField {
    let jet = move |p: &[f64]| {
        let (x, y) = (p[0], &p[1..]);
        let mut j = Jet::zeros(3);
        j.value = 0.5 * (2.0 - y.iter().map(|v| v * v).sum::<f64>());
        for (a, &yj) in y.iter().enumerate() {
            let v = v_jet(x, yj);
            j.value += eps * v[0];
            j.grad[0] += eps * v[1];
            j.grad[a + 1] = -yj + eps * v[2];
            j.hess[0] += eps * v[3];
            j.hess[a + 1] = eps * v[4];
            j.hess[(a + 1) * 3] = eps * v[4];
            j.hess[(a + 1) * 4] = -1.0 + eps * v[5];
        }
        j
    };
    let jv = jet;
    FnField::new(3, move |p| jv(p).value, jet)
}

#[test]
fn torsion_maxima_sit_exactly_at_root_of_q_prime() {
    let eps = 1e-3;
    let f = torsion_field(eps);
    let d = extract_component(&f, &GridSpec::symmetric(&[6.0, 1.6, 1.6], &[97, 33, 33]).unwrap()).unwrap();
    let scan = find_critical_points(&f, &d, &ScanOptions::default()).unwrap();
    let maxima: Vec<&CriticalPoint> = scan.maxima().collect();
    assert_eq!(maxima.len(), 2, "{:?}", scan.points);
    let t = 2.5f64.sqrt();
    for (m, sign) in maxima.iter().zip([-1.0, 1.0]) {
        assert!((m.location[0] - sign * t).abs() < 1e-12, "{:?}", m.location);
        assert!(m.location[1].abs() < 1e-12 && m.location[2].abs() < 1e-12);
        assert!(f.jet(&[sign * t, 0.0, 0.0]).grad.iter().all(|g| g.abs() < 1e-15));
    }
    // ∂xx u_ε = εN q″(√2.5) and q″ by the product identity.
    let tau2: f64 = 2.5;
    let q = -(tau2 - 1.0) * (tau2 - 4.0);
    let q2_direct = -(12.0 * tau2 - 10.0);
    let q2_identity = -4.0 * tau2 * q * [1.0f64, 4.0].iter().map(|t2| 1.0 / (tau2 - t2).powi(2)).sum::<f64>();
    assert!((q2_direct - q2_identity).abs() <= 1e-12 * q2_direct.abs());
    assert_eq!(q2_direct, -20.0);
    let margin = nondegeneracy_margin(&scan.points, scan.floor).unwrap();
    assert!((margin - eps * 2.0 * 20.0).abs() < 1e-12, "{margin}");
    // The origin is a saddle: minimum of q, maximum across the y-block.
    let origin = scan.points.iter().find(|p| p.location.iter().all(|v| v.abs() < 1e-9)).unwrap();
    assert_eq!(origin.kind, Kind::Saddle);
    assert_eq!(scan.points.len(), 3);
    assert!(is_reflection_symmetric(&scan.points, &[0.25, 0.1, 0.1]));
}

#[test]
fn spline_reproduces_nodes_and_gradients() {
    let f = FnField::new(2, |p| (0.7 * p[0]).sin() * (1.3 * p[1]).cos() + 0.2 * p[0] * p[1], |_| Jet::zeros(2));
    let spec = GridSpec::symmetric(&[3.0, 2.0], &[121, 81]).unwrap();
    let samples = sample_on_grid(&f, &spec).unwrap();
    let s = GridSpline::new(&samples);
    let h = 1e-3;
    for i in (10..110).step_by(13) {
        for j in (10..70).step_by(11) {
            let p = spec.point(&[i, j]);
            assert!((s.value(&p) - f.value(&p)).abs() < 1e-13);
            let g = s.gradient(&p);
            for a in 0..2 {
                let at = |d: f64| {
                    let mut q = p.clone();
                    q[a] += d;
                    f.value(&q)
                };
                let fd = (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
                assert!((g[a] - fd).abs() < 1e-4, "{} vs {fd}", g[a]);
            }
        }
    }
}

#[test]
fn interpolated_strip_profile_is_flat_in_x() {
    let p = solve_profile(&Nonlinearity::exponential(), 0.5, 0.1).unwrap();
    let f = FnField::new(2, move |q| p.value(q[1]), |_| Jet::zeros(2));
    let spec = GridSpec::symmetric(&[4.0, 1.1], &[33, 45]).unwrap();
    let s = GridSpline::new(&sample_on_grid(&f, &spec).unwrap());
    for &(x, y) in &[(0.3, 0.2), (-2.71, 0.93), (3.9, -0.5)] {
        assert!(s.jet(&[x, y]).grad[0].abs() < 1e-14);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn ellipse_maximum_is_found_and_symmetric(a in 0.5f64..2.0, b in 0.5f64..2.0) {
        let f = FnField::new(2, move |p| 1.0 - a * p[0] * p[0] - b * p[1] * p[1], move |p| Jet {
            value: 1.0 - a * p[0] * p[0] - b * p[1] * p[1],
            grad: vec![-2.0 * a * p[0], -2.0 * b * p[1]],
            hess: vec![-2.0 * a, 0.0, 0.0, -2.0 * b],
        });
        let d = extract_component(&f, &GridSpec::symmetric(&[1.6, 1.6], &[41, 41]).unwrap()).unwrap();
        let scan = find_critical_points(&f, &d, &ScanOptions::default()).unwrap();
        prop_assert_eq!(scan.points.len(), 1);
        prop_assert!(is_reflection_symmetric(&scan.points, &[1e-9, 1e-9]));
        let m = nondegeneracy_margin(&scan.points, scan.floor).unwrap();
        prop_assert!((m - 2.0 * a.min(b)).abs() < 1e-12);
    }
}

#[test]
fn degenerate_maximum_is_rejected() {
    let f = FnField::new(
        2,
        |p| 1.0 - p[0].powi(4) - p[1] * p[1],
        |p| Jet {
            value: 1.0 - p[0].powi(4) - p[1] * p[1],
            grad: vec![-4.0 * p[0].powi(3), -2.0 * p[1]],
            hess: vec![-12.0 * p[0] * p[0], 0.0, 0.0, -2.0],
        },
    );
    let d = extract_component(&f, &GridSpec::symmetric(&[1.2, 1.2], &[48, 48]).unwrap()).unwrap();
    let scan = find_critical_points(&f, &d, &ScanOptions::default()).unwrap();
    assert!(matches!(nondegeneracy_margin(&scan.points, scan.floor), Err(ScanError::DegenerateFound { .. })));
    assert!(critical_csv(&scan.points).starts_with("kind,value,grad_norm,x0,x1,eig0,eig1\n"));
}

struct Built {
    u: fieldkit::Superposed<fieldkit::PhiField>,
    d: DomainSlab,
    t: Vec<f64>,
}

fn theorem1(f: Nonlinearity, lambda: f64, eps: f64, counts: [usize; 2]) -> (Built, profile1d::Profile1D) {
    let p = solve_profile(&f, lambda, 0.1).unwrap();
    let combo = CoshCombo::build(&default_taus(2), p.mu0()).unwrap();
    let modes: Vec<Mode> = combo.mus.iter().map(|&mu| omega_mode(&p, mu).unwrap()).collect();
    let phi = assemble_phi(&combo, &modes, 1).unwrap();
    let eps_top = eps * smallness_threshold(&p, &phi, 0.05).unwrap().eps0;
    let top = modes.last().unwrap();
    let m = m_eps(top.mu(), p.sup_norm(), top.value(1.05), eps_top);
    let u = superpose(&p, phi, eps_top).unwrap();
    let d = extract_component(&u, &GridSpec::symmetric(&[1.15 * m, 1.1], &counts).unwrap()).unwrap();
    (Built { u, d, t: combo.maxima_t.clone() }, p)
}

#[test]
fn torsion_theorem1_discrete_maxima_match_exact_solution() {
    // For f ≡ 1 the correction is harmonic, so u₀ + εφ is the exact solution.
    let (b, _) = theorem1(Nonlinearity::constant(1.0), 1.0, 0.005, [513, 257]);
    let exact = find_critical_points(&b.u, &b.d, &ScanOptions::default()).unwrap();
    let ex_max: Vec<&CriticalPoint> = exact.maxima().collect();
    assert!(ex_max.len() >= 2);
    let op = discretize(&b.d).unwrap();
    let sol = solve_stable(&op, &Nonlinearity::constant(1.0), 1.0).unwrap();
    let s = interpolate_solution(&sol);
    let scan = find_critical_points(&s, &b.d, &ScanOptions { floor: Some(exact.floor), grad_tol: None }).unwrap();
    let maxima: Vec<&CriticalPoint> = scan.maxima().collect();
    assert_eq!(maxima.len(), 4);
    assert_eq!(ex_max.len(), 4);
    for (m, e) in maxima.iter().zip(&ex_max) {
        assert!((m.location[0] - e.location[0]).abs() < 5e-3, "{:?} vs {:?}", m.location, e.location);
        assert!(m.location[1].abs() < 1e-9);
        let (a, b) = (m.hess_eigs[1], e.hess_eigs[1]);
        assert!((a - b).abs() < 2e-2 * b.abs(), "{a} vs {b}");
    }
    // Exact maxima sit at the peaks of the cosh combination.
    for (e, t) in ex_max.iter().zip([-b.t[1], -b.t[0], b.t[0], b.t[1]]) {
        assert!((e.location[0] - t).abs() < 1e-9 * t.abs(), "{:?} vs {t}", e.location);
    }
    assert!(nondegeneracy_margin(&scan.points, exact.floor).unwrap() > exact.floor);
}

#[test]
fn gelfand_theorem1_maxima_near_combo_peaks() {
    let (b, p) = theorem1(Nonlinearity::exponential(), 0.5, 0.005, [513, 257]);
    let op = discretize(&b.d).unwrap();
    let sol = solve_stable_split(&op, &p, &SolveOptions::default()).unwrap();
    let s = interpolate_solution(&sol);
    let scan = find_critical_points(&s, &b.d, &ScanOptions::default()).unwrap();
    let maxima: Vec<&CriticalPoint> = scan.maxima().collect();
    assert_eq!(maxima.len(), 4);
    for (m, t) in maxima.iter().zip([-b.t[1], -b.t[0], b.t[0], b.t[1]]) {
        assert!((m.location[0] - t).abs() < 1e-2, "{:?} vs {t}", m.location);
        assert!(m.location[1].abs() < 1e-9);
    }
    assert!(nondegeneracy_margin(&scan.points, scan.floor).unwrap() > scan.floor);
    let h = [b.d.spec.h(0), b.d.spec.h(1)];
    assert!(is_reflection_symmetric(&scan.points, &[2.0 * h[0], 2.0 * h[1]]));
    assert!(scan.stalled.is_empty());
}
