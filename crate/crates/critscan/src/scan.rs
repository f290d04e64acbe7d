use std::cmp::Ordering;
use std::collections::BTreeSet;

use domainforge::{DomainSlab, Marker};
use ellipsolve::DiscreteSolution;
use fieldkit::{FieldKind, GridSamples, GridSpline, Jet, ScalarField};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;

use crate::ScanError;

const MAX_NEWTON: usize = 100;
const MAX_HALVINGS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Kind {
    Max,
    Min,
    Saddle,
    Degenerate,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Max => "max",
            Kind::Min => "min",
            Kind::Saddle => "saddle",
            Kind::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub location: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    /// Ascending.
    pub hess_eigs: Vec<f64>,
    pub kind: Kind,
    /// Grid node the Newton iteration started from.
    pub basin_seed: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ScanOptions {
    /// Degeneracy floor; default `1e-6 · scale / diam²`.
    pub floor: Option<f64>,
    /// Acceptance threshold on `|∇|`; default `1e-9` for analytic fields and
    /// `1e-6 · scale` for interpolated ones.
    pub grad_tol: Option<f64>,
}

/// Result of a scan, with the constants it used.
#[derive(Debug, Clone, PartialEq)]
pub struct Scan {
    /// Lexicographic by location.
    pub points: Vec<CriticalPoint>,
    pub seeds: usize,
    /// Seeds whose Newton iteration stalled (skipped).
    pub stalled: Vec<ScanError>,
    pub scale: f64,
    pub floor: f64,
    pub grad_tol: f64,
}

impl Scan {
    pub fn maxima(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.points.iter().filter(|p| p.kind == Kind::Max)
    }
}

/// C² interpolant of a discrete solution (zero outside the domain).
pub fn interpolate_solution(sol: &DiscreteSolution) -> GridSpline {
    let samples = GridSamples { spec: sol.op.spec.clone(), values: sol.grid_values(), gradients: None };
    GridSpline::new(&samples)
}

pub fn find_critical_points<F: ScalarField + ?Sized>(
    field: &F,
    d: &DomainSlab,
    opts: &ScanOptions,
) -> Result<Scan, ScanError> {
    let spec = &d.spec;
    let dim = spec.dim();
    if field.dim() != dim {
        return Err(ScanError::DimensionMismatch { field: field.dim(), domain: dim });
    }
    let values: Vec<f64> = (0..spec.len())
        .into_par_iter()
        .map(|k| if d.mask[k] { field.value(&spec.point(&spec.unflat(k))) } else { f64::NAN })
        .collect();
    let scale = values.iter().filter(|v| !v.is_nan()).fold(0.0f64, |m, v| m.max(v.abs()));
    let diam = d.diameter();
    let floor = opts.floor.unwrap_or(1e-6 * scale / (diam * diam));
    let grad_tol = opts.grad_tol.unwrap_or(match field.kind() {
        FieldKind::Analytic => 1e-9,
        FieldKind::GridInterpolated => 1e-6 * scale,
    });

    let seeds = seed_nodes(d, &values);
    let h: Vec<f64> = (0..dim).map(|a| spec.h(a)).collect();
    let results: Vec<Result<(Vec<f64>, Jet, usize), ScanError>> = seeds
        .par_iter()
        .map(|&k| {
            let (x, jet) = newton(field, spec.point(&spec.unflat(k)), &h, &spec.lo, &spec.hi);
            let g = jet.grad_norm();
            if g <= grad_tol {
                Ok((x, jet, k))
            } else {
                Err(ScanError::NewtonStalled { seed: k, grad_norm: g })
            }
        })
        .collect();

    let mut found = Vec::new();
    let mut stalled = Vec::new();
    for r in results {
        match r {
            Ok((x, jet, k)) => {
                let node: Vec<usize> = (0..dim).map(|a| spec.nearest(a, x[a])).collect();
                if d.mask[spec.flat(&node)] {
                    found.push(classify(x, &jet, k, floor));
                }
            }
            Err(e) => stalled.push(e),
        }
    }
    // Deduplicate within 2h per axis, keeping the smallest gradient.
    found.sort_by(|a, b| a.grad_norm.total_cmp(&b.grad_norm).then(a.basin_seed.cmp(&b.basin_seed)));
    let mut points: Vec<CriticalPoint> = Vec::new();
    for p in found {
        let dup = points.iter().any(|q| (0..dim).all(|a| (p.location[a] - q.location[a]).abs() <= 2.0 * h[a]));
        if !dup {
            points.push(p);
        }
    }
    points.sort_by(|a, b| lex(&a.location, &b.location));
    if points.is_empty() {
        return Err(ScanError::NoCriticalPoints);
    }
    Ok(Scan { points, seeds: seeds.len(), stalled, scale, floor, grad_tol })
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| *o != Ordering::Equal).unwrap_or(Ordering::Equal)
}

/// Grid-local extrema over the `3^d` neighbourhood (inside neighbours only),
/// plus 1-D extrema along each coordinate axis through the origin node.
fn seed_nodes(d: &DomainSlab, values: &[f64]) -> Vec<usize> {
    let spec = &d.spec;
    let dim = spec.dim();
    let strides = spec.strides();
    let offsets: Vec<Vec<i64>> = (0..3usize.pow(dim as u32))
        .map(|mut c| {
            (0..dim)
                .map(|_| {
                    let o = (c % 3) as i64 - 1;
                    c /= 3;
                    o
                })
                .collect()
        })
        .filter(|o: &Vec<i64>| o.iter().any(|&v| v != 0))
        .collect();
    let neighbour = |idx: &[usize], off: &[i64]| -> Option<usize> {
        let mut k = 0;
        for a in 0..dim {
            let i = idx[a] as i64 + off[a];
            if i < 0 || i >= spec.counts[a] as i64 {
                return None;
            }
            k += i as usize * strides[a];
        }
        d.mask[k].then_some(k)
    };
    let mut seeds: BTreeSet<usize> = (0..spec.len())
        .into_par_iter()
        .filter(|&k| {
            if !d.mask[k] {
                return false;
            }
            let idx = spec.unflat(k);
            let v = values[k];
            let (mut is_max, mut is_min) = (true, true);
            for off in &offsets {
                if let Some(j) = neighbour(&idx, off) {
                    is_max &= values[j] <= v;
                    is_min &= values[j] >= v;
                }
            }
            is_max || is_min
        })
        .collect::<Vec<_>>()
        .into_iter()
        .collect();
    if d.origin_inside {
        let origin = spec.unflat(d.origin_node);
        for a in 0..dim {
            for i in 0..spec.counts[a] {
                let mut idx = origin.clone();
                idx[a] = i;
                let k = spec.flat(&idx);
                if !d.mask[k] {
                    continue;
                }
                let v = values[k];
                let nb: Vec<f64> = [i.checked_sub(1), Some(i + 1)]
                    .into_iter()
                    .flatten()
                    .filter(|&j| j < spec.counts[a])
                    .filter_map(|j| {
                        idx[a] = j;
                        let kk = spec.flat(&idx);
                        d.mask[kk].then(|| values[kk])
                    })
                    .collect();
                if nb.iter().all(|&w| w <= v) || nb.iter().all(|&w| w >= v) {
                    seeds.insert(k);
                }
            }
        }
    }
    seeds.into_iter().collect()
}

fn hessian(jet: &Jet) -> DMatrix<f64> {
    let n = jet.dim();
    DMatrix::from_fn(n, n, |i, j| 0.5 * (jet.h(i, j) + jet.h(j, i)))
}

/// `-H⁺g`, dropping directions with negligible curvature.
fn newton_step(jet: &Jet) -> Vec<f64> {
    let eig = SymmetricEigen::new(hessian(jet));
    let g = DVector::from_column_slice(&jet.grad);
    let big = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut step = DVector::zeros(jet.dim());
    for (i, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam.abs() > 1e-14 * big {
            let v = eig.eigenvectors.column(i);
            step -= v * (v.dot(&g) / lam);
        }
    }
    step.iter().copied().collect()
}

/// Damped Newton: the step is halved until `|∇|` decreases, at most 50 times.
fn newton<F: ScalarField + ?Sized>(field: &F, mut x: Vec<f64>, h: &[f64], lo: &[f64], hi: &[f64]) -> (Vec<f64>, Jet) {
    let mut jet = field.jet(&x);
    let mut gn = jet.grad_norm();
    for _ in 0..MAX_NEWTON {
        if gn == 0.0 {
            break;
        }
        let step = newton_step(&jet);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            let trial: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + t * s).collect();
            if trial.iter().zip(lo.iter().zip(hi)).all(|(v, (l, u))| v >= l && v <= u) {
                let j = field.jet(&trial);
                if j.grad_norm() < gn {
                    accepted = Some((trial, j));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((nx, nj)) = accepted else { break };
        let moved = nx.iter().zip(&x).zip(h).fold(0.0f64, |m, ((a, b), h)| m.max((a - b).abs() / h));
        x = nx;
        gn = nj.grad_norm();
        jet = nj;
        if moved < 1e-13 {
            break;
        }
    }
    (x, jet)
}

fn classify(location: Vec<f64>, jet: &Jet, seed: usize, floor: f64) -> CriticalPoint {
    let mut eigs: Vec<f64> = SymmetricEigen::new(hessian(jet)).eigenvalues.iter().copied().collect();
    eigs.sort_by(f64::total_cmp);
    let kind = if eigs.iter().any(|e| e.abs() <= floor) {
        Kind::Degenerate
    } else if eigs.iter().all(|&e| e < 0.0) {
        Kind::Max
    } else if eigs.iter().all(|&e| e > 0.0) {
        Kind::Min
    } else {
        Kind::Saddle
    };
    CriticalPoint { location, value: jet.value, grad_norm: jet.grad_norm(), hess_eigs: eigs, kind, basin_seed: seed }
}

/// Smallest `|largest Hessian eigenvalue|` over the maxima. A degenerate
/// point that is otherwise maximum-like, or a margin not above `floor`, is
/// an error.
pub fn nondegeneracy_margin(points: &[CriticalPoint], floor: f64) -> Result<f64, ScanError> {
    if points.is_empty() {
        return Err(ScanError::NoCriticalPoints);
    }
    for p in points.iter().filter(|p| p.kind == Kind::Degenerate) {
        let top = *p.hess_eigs.last().unwrap_or(&0.0);
        if p.hess_eigs[..p.hess_eigs.len() - 1].iter().all(|&e| e < 0.0) && top <= floor {
            return Err(ScanError::DegenerateFound { location: p.location.clone(), eig: top, floor });
        }
    }
    let (margin, at) = points
        .iter()
        .filter(|p| p.kind == Kind::Max)
        .map(|p| (p.hess_eigs.last().copied().unwrap_or(0.0).abs(), p))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(ScanError::NoMaxima)?;
    if margin <= floor {
        return Err(ScanError::DegenerateFound { location: at.location.clone(), eig: -margin, floor });
    }
    Ok(margin)
}

/// Every point has a partner of the same kind under each coordinate
/// reflection through the origin, within `tol[a]` per axis.
pub fn is_reflection_symmetric(points: &[CriticalPoint], tol: &[f64]) -> bool {
    let dim = tol.len();
    points.iter().all(|p| {
        (0..dim).all(|r| {
            points.iter().any(|q| {
                q.kind == p.kind
                    && (0..dim).all(|a| {
                        let target = if a == r { -p.location[a] } else { p.location[a] };
                        (q.location[a] - target).abs() <= tol[a]
                    })
            })
        })
    })
}

/// Table of critical points: kind, value, gradient norm, location, eigenvalues.
pub fn critical_csv(points: &[CriticalPoint]) -> String {
    let dim = points.first().map_or(0, |p| p.location.len());
    let mut s = String::from("kind,value,grad_norm");
    for a in 0..dim {
        s.push_str(&format!(",x{a}"));
    }
    for a in 0..dim {
        s.push_str(&format!(",eig{a}"));
    }
    s.push('\n');
    for p in points {
        s.push_str(&format!("{},{:.12e},{:.3e}", p.kind.as_str(), p.value, p.grad_norm));
        for v in &p.location {
            s.push_str(&format!(",{v:.12e}"));
        }
        for v in &p.hess_eigs {
            s.push_str(&format!(",{v:.6e}"));
        }
        s.push('\n');
    }
    s
}

/// Overlay markers in the `(first, last)` coordinate plane.
pub fn markers(points: &[CriticalPoint]) -> Vec<Marker> {
    points
        .iter()
        .map(|p| Marker { x: p.location[0], y: *p.location.last().unwrap_or(&0.0), label: p.kind.as_str().to_string() })
        .collect()
}
