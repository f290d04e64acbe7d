use coshcombo::{default_taus, verify_maxima, CoshCombo};
use fieldkit::{
    assemble_phi, sample_on_grid, superpose, write_grid_dump, FieldError, FnField, GridSpec, GridSpline, Jet,
    PhiField, ScalarField,
};
use profile1d::{omega_mode, solve_profile, Nonlinearity, Profile1D};
use proptest::prelude::*;

fn gelfand(lambda: f64) -> Profile1D {
    solve_profile(&Nonlinearity::exponential(), lambda, 0.1).unwrap()
}

fn gelfand_phi(p: &Profile1D, k: usize, n: usize) -> (CoshCombo, PhiField) {
    let combo = CoshCombo::build(&default_taus(k), p.mu0()).unwrap();
    let modes: Vec<_> = combo.mus.iter().map(|&mu| omega_mode(p, mu).unwrap()).collect();
    let phi = assemble_phi(&combo, &modes, n).unwrap();
    (combo, phi)
}

fn fd_jet<F: ScalarField>(f: &F, p: &[f64], h: f64) -> Jet {
    let d = p.len();
    let mut j = Jet::zeros(d);
    j.value = f.value(p);
    let at = |da: &[(usize, f64)]| {
        let mut q = p.to_vec();
        for &(a, s) in da {
            q[a] += s;
        }
        f.value(&q)
    };
    for a in 0..d {
        j.grad[a] = (at(&[(a, h)]) - at(&[(a, -h)])) / (2.0 * h);
        for b in 0..d {
            j.hess[a * d + b] = if a == b {
                (at(&[(a, h)]) - 2.0 * j.value + at(&[(a, -h)])) / (h * h)
            } else {
                (at(&[(a, h), (b, h)]) - at(&[(a, h), (b, -h)]) - at(&[(a, -h), (b, h)])
                    + at(&[(a, -h), (b, -h)]))
                    / (4.0 * h * h)
            };
        }
    }
    j
}

fn assert_jets_close(exact: &Jet, fd: &Jet, gtol: f64, htol: f64) {
    let gscale = exact.grad.iter().fold(1.0f64, |m, g| m.max(g.abs()));
    for (a, b) in exact.grad.iter().zip(&fd.grad) {
        assert!((a - b).abs() <= gtol * gscale, "gradient {a} vs fd {b}");
    }
    let hscale = exact.hess.iter().fold(1.0f64, |m, g| m.max(g.abs()));
    for (a, b) in exact.hess.iter().zip(&fd.hess) {
        assert!((a - b).abs() <= htol * hscale, "hessian {a} vs fd {b}");
    }
}

#[test]
fn single_cosine_mode_is_a_product_solution() {
    let p = solve_profile(&Nonlinearity::constant(1.0), 1.0, 0.1).unwrap();
    let mode = omega_mode(&p, 1.0).unwrap();
    let phi = PhiField::from_parts(vec![-1.0], vec![mode], 1).unwrap();
    for &(x, y) in &[(0.0, 0.0), (0.7, -0.3), (-1.9, 1.05), (3.0, 0.5)] {
        let j = phi.jet(&[x, y]);
        let exact = -f64::cosh(x) * f64::cos(y);
        assert!((j.value - exact).abs() < 1e-7 * exact.abs().max(1.0), "{} vs {exact}", j.value);
        // f' = 0, so the linearized equation says φ is harmonic.
        assert!(j.laplacian().abs() < 1e-6 * f64::cosh(x), "{} at {x},{y}", j.laplacian());
    }
}

#[test]
fn phi_is_even_and_sums_over_coordinates() {
    let p = gelfand(0.5);
    let (combo, phi) = gelfand_phi(&p, 2, 2);
    let a: f64 = combo.alphas.iter().sum();
    for &y in &[0.0, 0.4, -0.9] {
        let w: f64 = phi.modes().iter().zip(phi.alphas()).map(|(m, al)| al * m.value(y)).sum();
        assert!((phi.value(&[0.0, 0.0, y]) - 2.0 * w).abs() < 1e-9 * w.abs().max(1.0));
    }
    assert!((phi.value(&[0.0, 0.0, 0.0]) - 2.0 * a).abs() < 1e-9 * a.abs().max(1.0));
    for &(x1, x2, y) in &[(1.3, -4.2, 0.6), (7.0, 2.0, -0.2)] {
        let v = phi.value(&[x1, x2, y]);
        for q in [[-x1, x2, y], [x1, -x2, y], [x1, x2, -y], [x2, x1, y]] {
            assert!((phi.value(&q) - v).abs() < 1e-10 * v.abs().max(1.0));
        }
    }
}

#[test]
fn phi_solves_the_linearized_equation() {
    let p = gelfand(0.5);
    let (_, phi) = gelfand_phi(&p, 2, 1);
    let mut rng = 0x9e3779b97f4a7c15u64;
    let mut uni = || {
        rng ^= rng << 13;
        rng ^= rng >> 7;
        rng ^= rng << 17;
        (rng >> 11) as f64 / (1u64 << 53) as f64
    };
    let h = 1e-3;
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let x = -3.0 + 6.0 * uni();
        let y = -1.0 + 2.0 * uni();
        let c = phi.value(&[x, y]);
        let lap = (phi.value(&[x + h, y]) + phi.value(&[x - h, y]) + phi.value(&[x, y + h]) + phi.value(&[x, y - h])
            - 4.0 * c)
            / (h * h);
        worst = worst.max((-lap - p.potential(y) * c).abs());
    }
    assert!(worst < 1e-4, "worst residual {worst}");
}

#[test]
fn mode_mismatch_is_rejected() {
    let p = gelfand(0.5);
    let combo = CoshCombo::build(&default_taus(2), p.mu0()).unwrap();
    let modes: Vec<_> = combo.mus.iter().map(|&mu| omega_mode(&p, mu).unwrap()).collect();
    assert!(matches!(assemble_phi(&combo, &modes[..3], 1), Err(FieldError::ModeMismatch(_))));
    let mut shuffled = modes.clone();
    shuffled.swap(0, 1);
    assert!(matches!(assemble_phi(&combo, &shuffled, 1), Err(FieldError::ModeMismatch(_))));
}

#[test]
fn superposition_basics() {
    let p = gelfand(0.5);
    let (combo, phi) = gelfand_phi(&p, 2, 2);
    let u0 = superpose(&p, phi.clone(), 0.0).unwrap();
    for &(x, y) in &[(3.0, 0.2), (-20.0, 0.9)] {
        assert_eq!(u0.value(&[x, 1.0, y]), p.value(y));
    }
    // Small amplitude keeps the origin value well above u0(0)/2.
    let eps = 0.01 / combo.peak_amplitude();
    let u = superpose(&p, phi.clone(), eps).unwrap();
    assert!(u.value(&[0.0, 0.0, 0.0]) >= p.value(0.0) / 2.0);
    let toward_negative = phi.scaled(-phi.value(&[0.0, 0.0, 0.0]).signum());
    assert!(matches!(superpose(&p, toward_negative, 1e6), Err(FieldError::OriginNotPositive { .. })));
}

#[test]
fn critical_structure_at_combo_maxima() {
    let p = gelfand(0.5);
    let (combo, phi) = gelfand_phi(&p, 2, 2);
    let eps = 0.01 / combo.peak_amplitude();
    let u = superpose(&p, phi, eps).unwrap();
    let lam_f0 = p.lambda() * p.nonlinearity().eval(p.value(0.0));
    for m in verify_maxima(&combo).unwrap() {
        let j = u.jet(&[m.t, m.t, 0.0]);
        let g = j.grad_norm();
        assert!(g < 1e-9 * combo.peak_amplitude() * eps.max(1e-300) + 1e-12, "gradient {g}");
        assert!(j.h(0, 1).abs() < 1e-14);
        assert!(j.h(0, 2).abs() < 1e-9 && j.h(1, 2).abs() < 1e-9);
        assert!(j.h(2, 2) < -lam_f0 / 2.0);
    }
}

#[test]
fn gelfand_superposition_derivatives_match_differences() {
    let p = gelfand(0.5);
    let (combo, phi) = gelfand_phi(&p, 2, 2);
    let u = superpose(&p, phi, 0.005 / combo.peak_amplitude()).unwrap();
    for q in [[0.0, 0.0, 0.0], [3.3, -12.0, 0.41], [20.0, 5.0, -0.8], [-31.0, 1.0, 1.05]] {
        assert_jets_close(&u.jet(&q), &fd_jet(&u, &q, 1e-4), 1e-6, 1e-4);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_polynomial_fields_have_consistent_jets(
        c in prop::collection::vec(-2.0f64..2.0, 10),
        x in -1.5f64..1.5, y in -1.5f64..1.5, z in -1.5f64..1.5,
    ) {
        // Cubic with cross terms, given together with hand derivatives.
        let cv = c.clone();
        let val = move |p: &[f64]| {
            let (x, y, z) = (p[0], p[1], p[2]);
            cv[0] + cv[1]*x + cv[2]*y*z + cv[3]*x*x*y + cv[4]*z*z*z + cv[5]*(x*y).sin()
                + cv[6]*z.exp() + cv[7]*x*y*z + cv[8]*y*y + cv[9]*(x*z).cos()
        };
        let cj = c.clone();
        let jet = move |p: &[f64]| {
            let (x, y, z) = (p[0], p[1], p[2]);
            let c = &cj;
            let mut j = Jet::zeros(3);
            j.value = c[0] + c[1]*x + c[2]*y*z + c[3]*x*x*y + c[4]*z*z*z + c[5]*(x*y).sin()
                + c[6]*z.exp() + c[7]*x*y*z + c[8]*y*y + c[9]*(x*z).cos();
            let (sxy, cxy, sxz, cxz) = ((x*y).sin(), (x*y).cos(), (x*z).sin(), (x*z).cos());
            j.grad = vec![
                c[1] + 2.0*c[3]*x*y + c[5]*y*cxy + c[7]*y*z - c[9]*z*sxz,
                c[2]*z + c[3]*x*x + c[5]*x*cxy + c[7]*x*z + 2.0*c[8]*y,
                c[2]*y + 3.0*c[4]*z*z + c[6]*z.exp() + c[7]*x*y - c[9]*x*sxz,
            ];
            let hxx = 2.0*c[3]*y - c[5]*y*y*sxy - c[9]*z*z*cxz;
            let hxy = 2.0*c[3]*x + c[5]*(cxy - x*y*sxy) + c[7]*z;
            let hxz = c[7]*y - c[9]*(sxz + x*z*cxz);
            let hyy = -c[5]*x*x*sxy + 2.0*c[8];
            let hyz = c[2] + c[7]*x;
            let hzz = 6.0*c[4]*z + c[6]*z.exp() - c[9]*x*x*cxz;
            j.hess = vec![hxx, hxy, hxz, hxy, hyy, hyz, hxz, hyz, hzz];
            j
        };
        let f = FnField::new(3, val, jet);
        let q = [x, y, z];
        assert_jets_close(&f.jet(&q), &fd_jet(&f, &q, 1e-4), 1e-6, 1e-4);
    }
}

#[test]
fn sampling_constant_and_linear_fields() {
    let spec = GridSpec::new(vec![-1.0, -2.0], vec![1.0, 3.0], vec![5, 9]).unwrap();
    let c = FnField::new(2, |_| 4.5, |_| Jet::zeros(2));
    let s = sample_on_grid(&c, &spec).unwrap();
    assert!(s.values.iter().all(|&v| v == 4.5));
    let lin = FnField::new(2, |p| 2.0 * p[0] - p[1] + 0.25, |_| Jet::zeros(2));
    let s = sample_on_grid(&lin, &spec).unwrap();
    for k in 0..spec.len() {
        let p = spec.point(&spec.unflat(k));
        assert_eq!(s.values[k], 2.0 * p[0] - p[1] + 0.25);
    }
    // Row-major with y fastest.
    assert_eq!(spec.flat(&[1, 0]), 9);
}

#[test]
fn torsion_superposition_sign_pattern() {
    let p = solve_profile(&Nonlinearity::constant(1.0), 1.0, 0.1).unwrap();
    let mode = omega_mode(&p, 1.0).unwrap();
    let phi = PhiField::from_parts(vec![-1.0], vec![mode], 1).unwrap();
    let u = superpose(&p, phi, 0.01).unwrap();
    let r = 1.1;
    let spec = GridSpec::new(vec![-2.0, -r], vec![2.0, r], vec![41, 23]).unwrap();
    let s = sample_on_grid(&u, &spec).unwrap();
    assert!(s.at(&[20, 11]) > 0.0);
    for i in 0..41 {
        assert!(s.at(&[i, 0]) < 0.0 && s.at(&[i, 22]) < 0.0);
    }
}

#[test]
fn grid_budget_and_validation() {
    assert!(matches!(
        GridSpec::new(vec![0.0; 3], vec![1.0; 3], vec![1024, 1024, 1024]),
        Err(FieldError::OutOfMemoryBudget { .. })
    ));
    assert!(GridSpec::new(vec![0.0], vec![1.0], vec![2]).is_err());
    assert!(GridSpec::new(vec![0.0], vec![0.0], vec![5]).is_err());
}

#[test]
fn dump_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let spec = GridSpec::symmetric(&[1.0, 1.0], &[4, 3]).unwrap();
    let s = sample_on_grid(&FnField::paraboloid(2, 1.0), &spec).unwrap();
    let base = dir.path().join("u");
    write_grid_dump(&s, &base).unwrap();
    let bytes = std::fs::read(base.with_extension("bin")).unwrap();
    let back: Vec<f64> = bytes.chunks(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    assert_eq!(back, s.values);
    let json = std::fs::read_to_string(base.with_extension("json")).unwrap();
    assert!(json.contains("\"counts\": [4, 3]"));
}

#[test]
fn spline_tracks_smooth_field_to_second_order() {
    let f = FnField::new(2, |p| (p[0]).sin() * (0.5 * p[1]).cosh(), |_| Jet::zeros(2));
    let mut errs = Vec::new();
    for &n in &[33usize, 65] {
        let spec = GridSpec::symmetric(&[2.0, 2.0], &[n, n]).unwrap();
        let s = GridSpline::new(&sample_on_grid(&f, &spec).unwrap());
        let q = [0.3141, -0.777];
        let j = s.jet(&q);
        let exact_xx = -(q[0]).sin() * (0.5 * q[1]).cosh();
        errs.push(((j.value - f.value(&q)).abs(), (j.h(0, 0) - exact_xx).abs()));
    }
    assert!(errs[1].0 < 1e-6 && errs[1].1 < 1e-3, "{errs:?}");
    assert!(errs[0].1 > errs[1].1 && errs[0].0 > errs[1].0, "{errs:?}");
}
