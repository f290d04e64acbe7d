//! Cut-cell Laplacian on a domain mask and its preconditioned CG solver.
//!
//! Row `i` of `-Δ_h` is `Σ_axes Σ_dir (u_i - u_nb) / (h · h_arm)`, where a
//! full arm has `h_arm = h` and an arm cut by the boundary at fraction `θ`
//! has `h_arm = θh` and boundary value `0`. The matrix is symmetric with
//! off-diagonals `-1/h²`, an M-matrix and positive definite.
//!
//! Along a cut axis this row is the consistent nonuniform difference scaled
//! by `(θ₋ + θ₊)/2`, so sources are multiplied by the node weight
//! `w = Π_axes (θ₋ + θ₊)/2`. With one cut axis the scheme is then exact on
//! quadratics.

use domainforge::DomainSlab;
use fieldkit::GridSpec;
use rayon::prelude::*;

use crate::SolveError;

const NONE: u32 = u32::MAX;
const CHUNK: usize = 4096;
/// Cut fractions below this are clamped (the node is then pinned near 0).
pub const THETA_MIN: f64 = 1e-12;

/// An arm of a stencil: a neighbour unknown or the boundary at fraction `θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Arm {
    Node(usize),
    Cut(f64),
}

#[derive(Debug, Clone)]
pub struct Operator {
    pub spec: GridSpec,
    /// Grid node of each unknown, increasing.
    pub nodes: Vec<usize>,
    /// Unknown index of each grid node (`usize::MAX` outside).
    pub index: Vec<usize>,
    pub diag: Vec<f64>,
    /// Source weight of each unknown, `1` away from the boundary.
    pub weight: Vec<f64>,
    /// `2·dim` neighbour slots per unknown, ordered `(axis, -), (axis, +)`.
    nbr: Vec<u32>,
    /// Cut fractions for the slots whose neighbour is outside.
    theta: Vec<f64>,
    inv_h2: Vec<f64>,
    /// Contiguous runs along the last axis, `(start, len)`.
    lines: Vec<(usize, usize)>,
}

impl Operator {
    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Grid coordinates of unknown `i`.
    pub fn point(&self, i: usize) -> Vec<f64> {
        self.spec.point(&self.spec.unflat(self.nodes[i]))
    }

    /// Index along the last axis of unknown `i`.
    pub fn y_index(&self, i: usize) -> usize {
        self.nodes[i] % self.spec.counts[self.dim() - 1]
    }

    pub fn inv_h2(&self, axis: usize) -> f64 {
        self.inv_h2[axis]
    }

    pub fn arm(&self, i: usize, axis: usize, upper: bool) -> Arm {
        let s = i * 2 * self.dim() + 2 * axis + upper as usize;
        match self.nbr[s] {
            NONE => Arm::Cut(self.theta[s]),
            j => Arm::Node(j as usize),
        }
    }

    /// Unknowns whose stencil reaches the boundary.
    pub fn cut_rows(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.nbr[i * 2 * self.dim()..(i + 1) * 2 * self.dim()].contains(&NONE)).collect()
    }

    /// `y = (A + diag(extra)) x`.
    pub fn apply(&self, x: &[f64], extra: Option<&[f64]>, y: &mut [f64]) {
        let w = 2 * self.dim();
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, out)| {
            for (k, yi) in out.iter_mut().enumerate() {
                let i = c * CHUNK + k;
                let mut acc = self.diag[i] * x[i];
                if let Some(e) = extra {
                    acc += e[i] * x[i];
                }
                for s in 0..w {
                    let j = self.nbr[i * w + s];
                    if j != NONE {
                        acc -= self.inv_h2[s / 2] * x[j as usize];
                    }
                }
                *yi = acc;
            }
        });
    }

    /// Linear system `A + diag(extra)` with its line preconditioner.
    pub fn system(&self, extra: Option<&[f64]>) -> Result<System<'_>, SolveError> {
        let diag: Vec<f64> = match extra {
            Some(e) => self.diag.iter().zip(e).map(|(d, e)| d + e).collect(),
            None => self.diag.clone(),
        };
        let off = -self.inv_h2[self.dim() - 1];
        let mut cp = vec![0.0; self.len()];
        let mut inv = vec![0.0; self.len()];
        for &(s, n) in &self.lines {
            let mut prev = 0.0;
            for k in 0..n {
                let i = s + k;
                let den = diag[i] - if k > 0 { off * prev } else { 0.0 };
                if !(den > 0.0) {
                    return Err(SolveError::NotPositiveDefinite(format!("line pivot {den:e} at unknown {i}")));
                }
                inv[i] = 1.0 / den;
                cp[i] = off * inv[i];
                prev = cp[i];
            }
        }
        let mut sys = System { op: self, extra: extra.map(|e| e.to_vec()), off, cp, inv, coarse: None };
        sys.coarse = sys.build_coarse(&diag);
        Ok(sys)
    }

    /// Column (x-index) of a line, when the grid is 2-D.
    fn line_column(&self, l: usize) -> usize {
        self.nodes[self.lines[l].0] / self.spec.counts[1]
    }
}

/// Deterministic parallel dot product: fixed chunks, sequential final sum.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let parts: Vec<f64> =
        a.par_chunks(CHUNK).zip(b.par_chunks(CHUNK)).map(|(x, y)| x.iter().zip(y).map(|(p, q)| p * q).sum()).collect();
    parts.iter().sum()
}

pub fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Convergence record of one preconditioned CG solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcgStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

pub struct System<'a> {
    pub op: &'a Operator,
    extra: Option<Vec<f64>>,
    off: f64,
    cp: Vec<f64>,
    inv: Vec<f64>,
    coarse: Option<Coarse>,
}

/// Two-level correction with one unknown per y-line: the basis vector of a
/// line is its tridiagonal response to a constant load. Smooth x-modes,
/// which line relaxation cannot reach, live in this space. Only built in 2-D
/// with one line per column, where the coarse matrix is tridiagonal.
struct Coarse {
    z: Vec<f64>,
    diag: Vec<f64>,
    /// Coupling of line `l` with line `l + 1`.
    off: Vec<f64>,
}

impl System<'_> {
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.op.apply(x, self.extra.as_deref(), y);
    }

    fn build_coarse(&self, diag: &[f64]) -> Option<Coarse> {
        let op = self.op;
        if op.dim() != 2 || op.lines.len() < 2 {
            return None;
        }
        let cols: Vec<usize> = (0..op.lines.len()).map(|l| op.line_column(l)).collect();
        if cols.windows(2).any(|w| w[1] <= w[0]) {
            return None;
        }
        let ones = vec![1.0; op.len()];
        let mut z = vec![0.0; op.len()];
        self.line_solve(&ones, &mut z);
        let n = op.lines.len();
        let mut cd = vec![0.0; n];
        let mut co = vec![0.0; n];
        let w = 4;
        for (l, &(s, len)) in op.lines.iter().enumerate() {
            let mut acc = 0.0;
            for k in 0..len {
                let i = s + k;
                let mut t = diag[i] * z[i];
                if k > 0 {
                    t += self.off * z[i - 1];
                }
                if k + 1 < len {
                    t += self.off * z[i + 1];
                }
                acc += z[i] * t;
            }
            cd[l] = acc;
            if l + 1 < n && cols[l + 1] == cols[l] + 1 {
                let mut c = 0.0;
                for i in s..s + len {
                    let j = op.nbr[i * w + 1];
                    if j != NONE {
                        c -= op.inv_h2[0] * z[i] * z[j as usize];
                    }
                }
                co[l] = c;
            }
        }
        Some(Coarse { z, diag: cd, off: co })
    }

    /// Exact tridiagonal solves along every line.
    fn line_solve(&self, r: &[f64], z: &mut [f64]) {
        let mut slices = Vec::with_capacity(self.op.lines.len());
        let mut rest = z;
        for &(_, n) in &self.op.lines {
            let (head, tail) = rest.split_at_mut(n);
            slices.push(head);
            rest = tail;
        }
        self.op.lines.par_iter().zip(slices.into_par_iter()).for_each(|(&(s, n), zl)| {
            let mut prev = 0.0;
            for k in 0..n {
                let i = s + k;
                let v = (r[i] - if k > 0 { self.off * prev } else { 0.0 }) * self.inv[i];
                zl[k] = v;
                prev = v;
            }
            for k in (0..n.saturating_sub(1)).rev() {
                zl[k] -= self.cp[s + k] * zl[k + 1];
            }
        });
    }

    /// Line relaxation plus the additive coarse correction.
    fn precondition(&self, r: &[f64], z: &mut [f64]) {
        self.line_solve(r, z);
        let Some(c) = &self.coarse else { return };
        let lines = &self.op.lines;
        let rc: Vec<f64> = lines.par_iter().map(|&(s, n)| (s..s + n).map(|i| c.z[i] * r[i]).sum()).collect();
        let m = rc.len();
        let mut cp = vec![0.0; m];
        let mut x = vec![0.0; m];
        for l in 0..m {
            let (a, prev_c, prev_x) = if l > 0 { (c.off[l - 1], cp[l - 1], x[l - 1]) } else { (0.0, 0.0, 0.0) };
            let den = c.diag[l] - a * prev_c;
            cp[l] = c.off[l] / den;
            x[l] = (rc[l] - a * prev_x) / den;
        }
        for l in (0..m.saturating_sub(1)).rev() {
            x[l] -= cp[l] * x[l + 1];
        }
        let mut slices = Vec::with_capacity(m);
        let mut rest = z;
        for &(_, n) in lines {
            let (head, tail) = rest.split_at_mut(n);
            slices.push(head);
            rest = tail;
        }
        lines.par_iter().zip(slices.into_par_iter()).zip(x.par_iter()).for_each(|((&(s, _), zl), &xl)| {
            for (k, v) in zl.iter_mut().enumerate() {
                *v += xl * c.z[s + k];
            }
        });
    }

    /// Solves to `‖b - Ax‖₂ ≤ rtol·‖b‖₂`, starting from `x`.
    pub fn solve(&self, b: &[f64], x: &mut [f64], rtol: f64, max_iter: usize) -> Result<PcgStats, SolveError> {
        let n = b.len();
        let bn = dot(b, b).sqrt();
        if bn == 0.0 {
            x.iter_mut().for_each(|v| *v = 0.0);
            return Ok(PcgStats { iterations: 0, relative_residual: 0.0 });
        }
        let mut r = vec![0.0; n];
        self.apply(x, &mut r);
        r.par_iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
        let mut rel = dot(&r, &r).sqrt() / bn;
        if rel <= rtol {
            return Ok(PcgStats { iterations: 0, relative_residual: rel });
        }
        let mut z = vec![0.0; n];
        self.precondition(&r, &mut z);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut q = vec![0.0; n];
        for it in 1..=max_iter {
            self.apply(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                return Err(SolveError::NotPositiveDefinite(format!("p.Ap = {pq:e} at iteration {it}")));
            }
            let a = rz / pq;
            x.par_iter_mut().zip(&p).for_each(|(xi, pi)| *xi += a * pi);
            r.par_iter_mut().zip(&q).for_each(|(ri, qi)| *ri -= a * qi);
            rel = dot(&r, &r).sqrt() / bn;
            if rel <= rtol {
                return Ok(PcgStats { iterations: it, relative_residual: rel });
            }
            self.precondition(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            p.par_iter_mut().zip(&z).for_each(|(pi, zi)| *pi = zi + beta * *pi);
        }
        Err(SolveError::LinearSolverStalled { iterations: max_iter, relative_residual: rel })
    }
}

/// Assembles the cut-cell Laplacian on the component's nodes.
pub fn discretize(d: &DomainSlab) -> Result<Operator, SolveError> {
    let spec = d.spec.clone();
    let dim = spec.dim();
    let strides = spec.strides();
    let nodes: Vec<usize> = (0..spec.len()).filter(|&k| d.mask[k]).collect();
    if nodes.is_empty() {
        return Err(SolveError::InvalidInput("empty domain".into()));
    }
    let mut index = vec![usize::MAX; spec.len()];
    for (i, &k) in nodes.iter().enumerate() {
        index[k] = i;
    }
    let inv_h2: Vec<f64> = (0..dim).map(|a| 1.0 / (spec.h(a) * spec.h(a))).collect();
    let w = 2 * dim;
    let mut nbr = vec![NONE; nodes.len() * w];
    let mut theta = vec![1.0; nodes.len() * w];
    let mut diag = vec![0.0; nodes.len()];
    let mut weight = vec![1.0; nodes.len()];
    for (i, &k) in nodes.iter().enumerate() {
        let mut inner = 0;
        for a in 0..dim {
            let ia = (k / strides[a]) % spec.counts[a];
            for (u, dir) in [(0usize, -1i32), (1, 1)] {
                let s = i * w + 2 * a + u;
                let nb = match dir {
                    -1 if ia > 0 => Some(k - strides[a]),
                    1 if ia + 1 < spec.counts[a] => Some(k + strides[a]),
                    _ => None,
                };
                match nb {
                    Some(j) if d.mask[j] => {
                        nbr[s] = index[j] as u32;
                        diag[i] += inv_h2[a];
                        inner += 1;
                    }
                    Some(_) => {
                        let t = d.cut_fraction(k, a, dir).unwrap_or(1.0).clamp(THETA_MIN, 1.0);
                        theta[s] = t;
                        diag[i] += inv_h2[a] / t;
                    }
                    None => {
                        return Err(SolveError::InvalidInput(format!("domain reaches the grid edge at node {k}")));
                    }
                }
            }
            weight[i] *= 0.5 * (theta[i * w + 2 * a] + theta[i * w + 2 * a + 1]);
        }
        if inner == 0 {
            return Err(SolveError::TooCoarse { node: spec.unflat(k) });
        }
    }
    let ny = spec.counts[dim - 1];
    let mut lines = Vec::new();
    let mut start = 0;
    for i in 1..=nodes.len() {
        if i == nodes.len() || nodes[i] != nodes[i - 1] + 1 || nodes[i] % ny == 0 {
            lines.push((start, i - start));
            start = i;
        }
    }
    Ok(Operator { spec, nodes, index, diag, weight, nbr, theta, inv_h2, lines })
}
