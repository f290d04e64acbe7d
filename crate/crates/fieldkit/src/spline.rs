//! Natural tensor-product cubic B-spline through grid samples.
//!
//! The interpolant is C² in every variable, so gradients and Hessians are
//! continuous and Newton iterations on it behave. Beyond the grid the end
//! cell polynomial is continued.

use rayon::prelude::*;

use crate::field::{FieldKind, Jet, ScalarField};
use crate::grid::{GridSamples, GridSpec};

#[derive(Debug, Clone)]
pub struct GridSpline {
    spec: GridSpec,
    /// Shape `counts[a] + 2` per axis, row-major; coefficient of node `i` sits at `i + 1`.
    coeffs: Vec<f64>,
    cstrides: Vec<usize>,
}

impl GridSpline {
    pub fn new(samples: &GridSamples) -> Self {
        let spec = samples.spec.clone();
        let d = spec.dim();
        let mut shape = spec.counts.clone();
        let mut data = samples.values.clone();
        for a in 0..d {
            data = transform_axis(&data, &shape, a);
            shape[a] += 2;
        }
        let mut cstrides = vec![1; d];
        for a in (0..d - 1).rev() {
            cstrides[a] = cstrides[a + 1] * shape[a + 1];
        }
        GridSpline { spec, coeffs: data, cstrides }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    /// Cell start and basis weights with first and second derivatives.
    fn axis_weights(&self, a: usize, x: f64) -> (usize, [[f64; 4]; 3]) {
        let n = self.spec.counts[a];
        let h = self.spec.h(a);
        let pos = (x - self.spec.lo[a]) / h;
        let i = (pos.floor().max(0.0) as usize).min(n - 2);
        let s = pos - i as f64;
        let t = 1.0 - s;
        let (s2, s3) = (s * s, s * s * s);
        let w = [t * t * t / 6.0, (3.0 * s3 - 6.0 * s2 + 4.0) / 6.0, (-3.0 * s3 + 3.0 * s2 + 3.0 * s + 1.0) / 6.0, s3 / 6.0];
        let w1 = [-0.5 * t * t / h, (1.5 * s2 - 2.0 * s) / h, (-1.5 * s2 + s + 0.5) / h, 0.5 * s2 / h];
        let hh = h * h;
        let w2 = [t / hh, (3.0 * s - 2.0) / hh, (1.0 - 3.0 * s) / hh, s / hh];
        (i, [w, w1, w2])
    }

    fn combos(&self, p: &[f64]) -> Vec<(usize, [[f64; 4]; 3])> {
        (0..self.spec.dim()).map(|a| self.axis_weights(a, p[a])).collect()
    }
}

/// Replaces the samples along `axis` by natural-spline coefficients.
fn transform_axis(data: &[f64], shape: &[usize], axis: usize) -> Vec<f64> {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let solver = Tridiag::new(n);
    let mut out = vec![0.0; outer * (n + 2) * inner];
    out.par_chunks_mut((n + 2) * inner).enumerate().for_each(|(o, block)| {
        let src = &data[o * n * inner..(o + 1) * n * inner];
        let mut line = vec![0.0; n];
        let mut c = vec![0.0; n + 2];
        for r in 0..inner {
            for i in 0..n {
                line[i] = src[i * inner + r];
            }
            solver.solve(&line, &mut c);
            for (i, v) in c.iter().enumerate() {
                block[i * inner + r] = *v;
            }
        }
    });
    out
}

/// Interpolation system `c_{i-1} + 4c_i + c_{i+1} = 6f_i` with natural ends,
/// which pins `c_0 = f_0` and `c_{n-1} = f_{n-1}`.
struct Tridiag {
    n: usize,
    cp: Vec<f64>,
}

impl Tridiag {
    fn new(n: usize) -> Self {
        let m = n - 2;
        let mut cp = vec![0.0; m];
        for k in 0..m {
            let denom = if k == 0 { 4.0 } else { 4.0 - cp[k - 1] };
            cp[k] = 1.0 / denom;
        }
        Tridiag { n, cp }
    }

    /// Writes `n + 2` coefficients (ghosts included) into `out`.
    fn solve(&self, f: &[f64], out: &mut [f64]) {
        let n = self.n;
        let m = n - 2;
        let c = &mut out[1..n + 1];
        c[0] = f[0];
        c[n - 1] = f[n - 1];
        let mut dp = vec![0.0; m];
        for k in 0..m {
            let mut rhs = 6.0 * f[k + 1];
            if k == 0 {
                rhs -= f[0];
            }
            if k == m - 1 {
                rhs -= f[n - 1];
            }
            let prev = if k == 0 { 0.0 } else { dp[k - 1] };
            let denom = if k == 0 { 4.0 } else { 4.0 - self.cp[k - 1] };
            dp[k] = (rhs - prev) / denom;
        }
        for k in (0..m).rev() {
            let next = if k + 1 < m { c[k + 2] } else { 0.0 };
            c[k + 1] = dp[k] - self.cp[k] * next;
        }
        out[0] = 2.0 * out[1] - out[2];
        out[n + 1] = 2.0 * out[n] - out[n - 1];
    }
}

impl ScalarField for GridSpline {
    fn dim(&self) -> usize {
        self.spec.dim()
    }

    fn value(&self, p: &[f64]) -> f64 {
        let ws = self.combos(p);
        let d = ws.len();
        let mut total = 0.0;
        for k in 0..4usize.pow(d as u32) {
            let (mut off, mut w, mut r) = (0, 1.0, k);
            for (a, (i, wt)) in ws.iter().enumerate() {
                let m = r % 4;
                r /= 4;
                off += (i + m) * self.cstrides[a];
                w *= wt[0][m];
            }
            total += w * self.coeffs[off];
        }
        total
    }

    fn jet(&self, p: &[f64]) -> Jet {
        let ws = self.combos(p);
        let d = ws.len();
        let mut j = Jet::zeros(d);
        let mut ms = vec![0usize; d];
        for k in 0..4usize.pow(d as u32) {
            let (mut off, mut r) = (0, k);
            for (a, (i, _)) in ws.iter().enumerate() {
                ms[a] = r % 4;
                r /= 4;
                off += (i + ms[a]) * self.cstrides[a];
            }
            let c = self.coeffs[off];
            // order[a] = derivative order applied along axis a
            let prod = |order: &dyn Fn(usize) -> usize| -> f64 {
                (0..d).map(|a| ws[a].1[order(a)][ms[a]]).product::<f64>()
            };
            j.value += c * prod(&|_| 0);
            for a in 0..d {
                j.grad[a] += c * prod(&|b| usize::from(b == a));
                for b in a..d {
                    let v = if a == b {
                        prod(&|e| if e == a { 2 } else { 0 })
                    } else {
                        prod(&|e| usize::from(e == a || e == b))
                    };
                    j.hess[a * d + b] += c * v;
                }
            }
        }
        for a in 0..d {
            for b in 0..a {
                j.hess[a * d + b] = j.hess[b * d + a];
            }
        }
        j
    }

    fn kind(&self) -> FieldKind {
        FieldKind::GridInterpolated
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::sample_on_grid;
    use crate::FnField;

    #[test]
    fn reproduces_nodes_and_cubics() {
        // Natural splines reproduce linear data exactly; nodes always.
        let f = FnField::new(2, |p| 1.0 + 2.0 * p[0] - 3.0 * p[1] + 0.5 * p[0] * p[1], |_| unreachable!());
        let spec = GridSpec::new(vec![-1.0, 0.0], vec![2.0, 1.0], vec![7, 5]).unwrap();
        let s = GridSpline::new(&sample_on_grid(&f, &spec).unwrap());
        for k in 0..spec.len() {
            let p = spec.point(&spec.unflat(k));
            assert!((s.value(&p) - f.value(&p)).abs() < 1e-12);
        }
        let p = [0.37, 0.61];
        let j = s.jet(&p);
        assert!((j.value - f.value(&p)).abs() < 1e-12);
        assert!((j.grad[0] - (2.0 + 0.5 * p[1])).abs() < 1e-11);
        assert!((j.h(0, 1) - 0.5).abs() < 1e-10);
        assert!(j.h(0, 0).abs() < 1e-10);
    }
}
