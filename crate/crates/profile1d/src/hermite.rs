//! Quintic Hermite tables on uniform grids.
//!
//! Nodes carry value, first and second derivative, so the interpolant is C²
//! and reproduces the second derivatives supplied by the ODE.

#[derive(Debug, Clone)]
pub struct HermiteTable {
    start: f64,
    h: f64,
    pub v: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl HermiteTable {
    pub fn new(start: f64, h: f64, v: Vec<f64>, d1: Vec<f64>, d2: Vec<f64>) -> Self {
        assert!(v.len() >= 2 && v.len() == d1.len() && v.len() == d2.len());
        HermiteTable { start, h, v, d1, d2 }
    }

    pub fn len(&self) -> usize {
        self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.v.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn node(&self, i: usize) -> f64 {
        self.start + self.h * i as f64
    }

    pub fn end(&self) -> f64 {
        self.node(self.len() - 1)
    }

    /// Value, first and second derivative at `y`. Outside the table the end
    /// node's second-order Taylor polynomial is used.
    pub fn eval(&self, y: f64) -> (f64, f64, f64) {
        let n = self.len();
        let pos = (y - self.start) / self.h;
        if pos < 0.0 || pos > (n - 1) as f64 {
            let i = if pos < 0.0 { 0 } else { n - 1 };
            let d = y - self.node(i);
            return (
                self.v[i] + self.d1[i] * d + 0.5 * self.d2[i] * d * d,
                self.d1[i] + self.d2[i] * d,
                self.d2[i],
            );
        }
        let i = (pos.floor() as usize).min(n - 2);
        let s = pos - i as f64;
        let h = self.h;
        let (s2, s3, s4, s5) = (s * s, s * s * s, s * s * s * s, s * s * s * s * s);

        let h0 = 1.0 - 10.0 * s3 + 15.0 * s4 - 6.0 * s5;
        let h1 = s - 6.0 * s3 + 8.0 * s4 - 3.0 * s5;
        let h2 = 0.5 * (s2 - 3.0 * s3 + 3.0 * s4 - s5);
        let h3 = 10.0 * s3 - 15.0 * s4 + 6.0 * s5;
        let h4 = -4.0 * s3 + 7.0 * s4 - 3.0 * s5;
        let h5 = 0.5 * (s3 - 2.0 * s4 + s5);

        let g0 = -30.0 * s2 + 60.0 * s3 - 30.0 * s4;
        let g1 = 1.0 - 18.0 * s2 + 32.0 * s3 - 15.0 * s4;
        let g2 = 0.5 * (2.0 * s - 9.0 * s2 + 12.0 * s3 - 5.0 * s4);
        let g3 = -g0;
        let g4 = -12.0 * s2 + 28.0 * s3 - 15.0 * s4;
        let g5 = 0.5 * (3.0 * s2 - 8.0 * s3 + 5.0 * s4);

        let c0 = -60.0 * s + 180.0 * s2 - 120.0 * s3;
        let c1 = -36.0 * s + 96.0 * s2 - 60.0 * s3;
        let c2 = 0.5 * (2.0 - 18.0 * s + 36.0 * s2 - 20.0 * s3);
        let c3 = -c0;
        let c4 = -24.0 * s + 84.0 * s2 - 60.0 * s3;
        let c5 = 0.5 * (6.0 * s - 24.0 * s2 + 20.0 * s3);

        let (a0, a1, a2) = (self.v[i], h * self.d1[i], h * h * self.d2[i]);
        let (b0, b1, b2) = (self.v[i + 1], h * self.d1[i + 1], h * h * self.d2[i + 1]);
        let val = a0 * h0 + a1 * h1 + a2 * h2 + b0 * h3 + b1 * h4 + b2 * h5;
        let der = (a0 * g0 + a1 * g1 + a2 * g2 + b0 * g3 + b1 * g4 + b2 * g5) / h;
        let cur = (a0 * c0 + a1 * c1 + a2 * c2 + b0 * c3 + b1 * c4 + b2 * c5) / (h * h);
        (val, der, cur)
    }
}
