//! Cosh-combination checks against direct evaluation and root isolation.

use coshcombo::{
    assemble_combo, build_polynomial, cosh_expand, default_taus, verify_maxima, ComboError,
    CoshCombo,
};
use num::ToPrimitive;
use proptest::prelude::*;

const MU0_TORSION: f64 = 2.039_432_056_846_012; // (π/2.2)²

fn lcg(seed: &mut u64) -> f64 {
    *seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    (*seed >> 11) as f64 / (1u64 << 53) as f64
}

#[test]
fn sixth_power_reconstruction() {
    let e = cosh_expand(6);
    let mut seed = 7;
    for _ in 0..100 {
        let t = 6.0 * lcg(&mut seed) - 3.0;
        let direct = t.cosh().powi(6);
        assert!((e.eval(t) - direct).abs() <= 1e-12 * direct);
    }
}

#[test]
fn every_power_up_to_sixteen_reconstructs() {
    let mut seed = 11;
    for m in 1..=16 {
        let e = cosh_expand(m);
        for _ in 0..20 {
            let t = 4.0 * lcg(&mut seed) - 2.0;
            let direct = t.cosh().powi(m as i32);
            assert!((e.eval(t) - direct).abs() <= 1e-12 * direct, "m = {m}");
        }
        // Parity: only ℓ ≡ m (mod 2) is populated.
        for l in 0..=m {
            if (m - l) % 2 == 1 {
                assert!(e.coeff(l).to_f64().unwrap() == 0.0);
            }
        }
    }
}

#[test]
fn two_target_polynomial_derivative_roots() {
    let p = build_polynomial(&[2.0, 3.0]).unwrap();
    assert_eq!(p.degree(), 4);
    let dp = p.derivative_exact();
    let dpf: Vec<f64> = dp.iter().map(|c| c.to_f64().unwrap()).collect();
    let eval = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |a, v| a * x + v);
    for r in [2.0, 2.5, 3.0] {
        assert!(eval(&dpf, r).abs() < 1e-12);
    }
    let ddp: Vec<f64> = dpf.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
    assert!(eval(&ddp, 2.0) < 0.0 && eval(&ddp, 3.0) < 0.0 && eval(&ddp, 2.5) > 0.0);
    assert_eq!(p.coeffs[4].to_f64().unwrap(), -1.0);
}

#[test]
fn positive_scaling_keeps_argmax() {
    let p = build_polynomial(&[2.0, 3.0]).unwrap();
    let q = p.scaled(2.0);
    let argmax = |f: &dyn Fn(f64) -> f64| {
        (0..=40_000).map(|i| 1.0 + 3.0 * i as f64 / 40_000.0).fold((0.0, f64::MIN), |b, x| {
            let v = f(x);
            if v > b.1 {
                (x, v)
            } else {
                b
            }
        })
    };
    assert_eq!(argmax(&|x| p.eval(x)).0, argmax(&|x| q.eval(x)).0);
}

#[test]
fn ladder_arithmetic() {
    let c = CoshCombo::build(&default_taus(2), 2.0396).unwrap();
    assert!((c.delta - 0.063_737_5).abs() < 1e-6);
    assert!((c.top_mu() - 2.0396f64.powi(2) / 64.0).abs() < 1e-12);
    assert!((c.top_mu() - 0.065).abs() < 1e-4);
    assert!(c.top_mu() < 2.0396 / 4.0);
    assert_eq!(c.alphas[c.n - 1], -1.0);
    assert!(matches!(CoshCombo::build(&[2.0], 16.0), Err(ComboError::LadderViolation { .. })));
}

/// Root isolation oracle on `G(t) = P(cosh δt)`, which shares its critical
/// points on t > 0 with F.
fn oracle_maxima(c: &CoshCombo) -> Vec<f64> {
    let p = build_polynomial(&c.taus).unwrap();
    let g = |t: f64| p.eval((c.delta * t).cosh());
    let end = c.maxima_t.last().unwrap() * 1.3;
    let n = 200_000;
    let h = end / n as f64;
    let mut out = Vec::new();
    for i in 1..n {
        let (a, b, d) = (g((i - 1) as f64 * h), g(i as f64 * h), g((i + 1) as f64 * h));
        if b > a && b >= d {
            // Golden-section refinement on [t-h, t+h].
            let (mut lo, mut hi) = ((i - 1) as f64 * h, (i + 1) as f64 * h);
            let r = 0.5 * (5f64.sqrt() - 1.0);
            for _ in 0..100 {
                let x1 = hi - r * (hi - lo);
                let x2 = lo + r * (hi - lo);
                if g(x1) < g(x2) {
                    lo = x1
                } else {
                    hi = x2
                }
            }
            out.push(0.5 * (lo + hi));
        }
    }
    out
}

#[test]
fn three_targets_give_three_maxima() {
    let c = CoshCombo::build(&[2.0, 4.0, 6.0], 2.0).unwrap();
    let found = verify_maxima(&c).unwrap();
    assert_eq!(found.len(), 3);
    let oracle = oracle_maxima(&c);
    assert_eq!(oracle.len(), 3);
    for ((m, t), o) in found.iter().zip(&c.maxima_t).zip(&oracle) {
        assert!((m.t - t).abs() < 1e-8, "{} vs {}", m.t, t);
        assert!((m.t - o).abs() < 1e-5 * o);
        assert!(m.second < 0.0);
    }
}

#[test]
fn default_targets_for_small_k() {
    for k in 1..=3 {
        let c = CoshCombo::build(&default_taus(k), MU0_TORSION).unwrap();
        let found = verify_maxima(&c).unwrap();
        assert_eq!(found.len(), k);
        for (i, m) in found.iter().enumerate() {
            assert!((m.t - (i + 1) as f64 / c.delta).abs() < 1e-8);
        }
    }
}

#[test]
fn combo_is_even_and_tends_to_minus_infinity() {
    let c = CoshCombo::build(&default_taus(2), MU0_TORSION).unwrap();
    assert_eq!(c.derivs(0.0)[1], 0.0);
    for t in [0.5, 7.0, 20.0] {
        assert_eq!(c.eval(t), c.eval(-t));
    }
    assert!(c.eval(0.0).is_finite());
    let far = 3.0 * c.maxima_t[1];
    assert!(c.eval(far) < -1e3 * c.peak_amplitude());
}

#[test]
fn peak_amplitude_bounds_samples() {
    let c = CoshCombo::build(&default_taus(2), MU0_TORSION).unwrap();
    let a = c.peak_amplitude();
    let tk = c.maxima_t[1];
    let sampled = (0..=10_000).map(|i| c.eval(tk * i as f64 / 10_000.0).abs()).fold(0.0, f64::max);
    assert!(sampled <= a * (1.0 + 1e-12) && sampled >= a * (1.0 - 1e-6));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn ladder_holds_below_sixteen(mu0 in 0.01f64..15.99, k in 1usize..5) {
        let c = assemble_combo(&build_polynomial(&default_taus(k)).unwrap(), mu0).unwrap();
        prop_assert!(c.top_mu() < mu0 / 4.0);
        prop_assert!(c.mus.windows(2).all(|w| w[1] > w[0]));
        prop_assert!(c.mus[0] > 0.0);
    }

    #[test]
    fn argmax_invariant_under_rescaling(factor in 0.01f64..100.0) {
        let c = CoshCombo::build(&[1.5, 2.5], MU0_TORSION).unwrap();
        let mut s = c.clone();
        for a in s.alphas.iter_mut() {
            *a *= factor;
        }
        let m1 = verify_maxima(&c).unwrap();
        let m2 = verify_maxima(&s).unwrap();
        prop_assert_eq!(m1.len(), m2.len());
        for (a, b) in m1.iter().zip(&m2) {
            prop_assert!((a.t - b.t).abs() < 1e-8);
        }
    }
}
