//! Adaptive Dormand–Prince 5(4) integrator for small autonomous-in-shape
//! systems `y' = g(t, y)`.

/// Blow-up guard: any component above this magnitude aborts the integration.
pub const BLOWUP: f64 = 1e8;

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { abs: 1e-10, rel: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OdeFailure {
    /// Solution left the blow-up guard at this time.
    BlowUp(f64),
    /// Step size underflow or step budget exhausted at this time.
    Stalled(f64),
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Error weights: fifth-order minus embedded fourth-order solution.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const D: usize>(y: &[f64; D], terms: &[(f64, &[f64; D])], h: f64) -> [f64; D] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..D {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates from `t0` to `t1` (either direction) and returns `y(t1)`.
/// `h_hint` carries the last accepted step between calls.
pub fn integrate<const D: usize, G>(
    g: &G,
    t0: f64,
    y0: [f64; D],
    t1: f64,
    tol: Tolerance,
    h_hint: &mut f64,
) -> Result<[f64; D], OdeFailure>
where
    G: Fn(f64, &[f64; D]) -> [f64; D],
{
    let span = t1 - t0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut t = t0;
    let mut y = y0;
    let mut h = if *h_hint > 0.0 { h_hint.min(span.abs()) } else { (span.abs() * 1e-2).max(1e-6) };
    let mut k1 = g(t, &y);
    let mut steps = 0usize;
    loop {
        steps += 1;
        if steps > 2_000_000 {
            return Err(OdeFailure::Stalled(t));
        }
        let remaining = (t1 - t) * dir;
        if remaining <= 0.0 {
            break;
        }
        let last = h >= remaining;
        let hs = if last { remaining } else { h } * dir;

        let k2 = g(t + C2 * hs, &axpy(&y, &[(A21, &k1)], hs));
        let k3 = g(t + C3 * hs, &axpy(&y, &[(A31, &k1), (A32, &k2)], hs));
        let k4 = g(t + C4 * hs, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], hs));
        let k5 = g(
            t + C5 * hs,
            &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], hs),
        );
        let k6 = g(
            t + hs,
            &axpy(&y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], hs),
        );
        let y5 = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], hs);
        let k7 = g(t + hs, &y5);

        let mut err = 0.0f64;
        for i in 0..D {
            let e = hs * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol.abs + tol.rel * y[i].abs().max(y5[i].abs());
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.25;
            if h < 1e-14 * span.abs().max(1.0) {
                return Err(OdeFailure::Stalled(t));
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { t1 } else { t + hs };
            y = y5;
            k1 = k7;
            if y.iter().any(|v| !v.is_finite() || v.abs() > BLOWUP) {
                return Err(OdeFailure::BlowUp(t));
            }
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !last {
                h *= grow;
                *h_hint = h;
            } else {
                *h_hint = (h * grow).max(*h_hint * 0.5);
            }
            if last {
                break;
            }
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            if h < 1e-14 * span.abs().max(1.0) {
                return Err(OdeFailure::Stalled(t));
            }
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_one_period() {
        let g = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut h = 0.0;
        let y = integrate(&g, 0.0, [1.0, 0.0], 2.0 * std::f64::consts::PI, Tolerance::default(), &mut h)
            .unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8);
    }

    #[test]
    fn backward_direction() {
        let g = |_t: f64, y: &[f64; 1]| [y[0]];
        let mut h = 0.0;
        let y = integrate(&g, 1.0, [1.0], 0.0, Tolerance::default(), &mut h).unwrap();
        assert!((y[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn detects_blow_up() {
        let g = |_t: f64, y: &[f64; 1]| [y[0] * y[0]];
        let mut h = 0.0;
        let r = integrate(&g, 0.0, [1.0], 2.0, Tolerance::default(), &mut h);
        assert!(matches!(r, Err(OdeFailure::BlowUp(_)) | Err(OdeFailure::Stalled(_))));
    }
}
