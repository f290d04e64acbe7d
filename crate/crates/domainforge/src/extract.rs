use std::collections::HashMap;
use std::fmt;

use fieldkit::{sample_on_grid, GridSpec, ScalarField};
use rayon::prelude::*;

use crate::DomainError;

/// Target for `|U|` at refined boundary vertices.
pub const SURFACE_TOL: f64 = 1e-10;

/// A face of the grid box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Face {
    pub axis: usize,
    pub upper: bool,
    pub dim: usize,
}

impl fmt::Display for Face {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.upper { '+' } else { '-' };
        if self.axis + 1 == self.dim {
            write!(f, "y{sign}")
        } else if self.dim == 2 {
            write!(f, "x{sign}")
        } else {
            write!(f, "x{}{sign}", self.axis + 1)
        }
    }
}

/// Boundary sample on the grid edge from `inner` (in the component) to
/// `outer`, at fraction `theta` of the edge.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryVertex {
    pub point: Vec<f64>,
    pub normal: Vec<f64>,
    pub value: f64,
    pub inner: usize,
    pub outer: usize,
    pub theta: f64,
}

#[derive(Debug, Clone)]
pub struct DomainSlab {
    pub spec: GridSpec,
    pub mask: Vec<bool>,
    pub values: Vec<f64>,
    pub vertices: Vec<BoundaryVertex>,
    /// Polyline pieces (2-D).
    pub segments: Vec<[usize; 2]>,
    /// Oriented triangles (3-D).
    pub triangles: Vec<[usize; 3]>,
    pub origin_node: usize,
    pub origin_inside: bool,
    pub bbox_lo: Vec<f64>,
    pub bbox_hi: Vec<f64>,
    edges: HashMap<(usize, usize), usize>,
}

impl DomainSlab {
    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn inside_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|a| self.spec.h(a)).product()
    }

    /// Neighbour along `axis` in direction `dir` (±1), if on the grid.
    pub fn neighbor(&self, node: usize, axis: usize, dir: i32) -> Option<usize> {
        let stride = self.spec.strides()[axis];
        let i = (node / stride) % self.spec.counts[axis];
        match dir {
            1 if i + 1 < self.spec.counts[axis] => Some(node + stride),
            -1 if i > 0 => Some(node - stride),
            _ => None,
        }
    }

    /// Boundary vertex on the edge between two nodes, if any.
    pub fn vertex_on_edge(&self, a: usize, b: usize) -> Option<&BoundaryVertex> {
        self.edges.get(&(a.min(b), a.max(b))).map(|&i| &self.vertices[i])
    }

    /// Fraction of the arm from an inside `node` to its `(axis, dir)`
    /// neighbour at which the boundary sits, when that neighbour is outside.
    pub fn cut_fraction(&self, node: usize, axis: usize, dir: i32) -> Option<f64> {
        let nb = self.neighbor(node, axis, dir)?;
        if self.mask[nb] {
            return None;
        }
        self.vertex_on_edge(node, nb).map(|v| v.theta)
    }

    /// Largest `|U|` over boundary vertices.
    pub fn max_boundary_residual(&self) -> f64 {
        self.vertices.iter().map(|v| v.value.abs()).fold(0.0, f64::max)
    }

    /// Diameter of the bounding box.
    pub fn diameter(&self) -> f64 {
        self.bbox_lo.iter().zip(&self.bbox_hi).map(|(l, h)| (h - l) * (h - l)).sum::<f64>().sqrt()
    }
}

/// Extracts the component of `{U > 0}` that contains the origin.
pub fn extract_component<F: ScalarField + ?Sized>(u: &F, spec: &GridSpec) -> Result<DomainSlab, DomainError> {
    let d = spec.dim();
    if !(2..=3).contains(&d) {
        return Err(DomainError::UnsupportedDimension(d));
    }
    if u.dim() != d {
        return Err(DomainError::InvalidInput(format!("field dim {} vs grid dim {d}", u.dim())));
    }
    let origin = vec![0.0; d];
    let u_origin = u.value(&origin);
    if !(u_origin > 0.0) {
        return Err(DomainError::OriginOutside { value: u_origin });
    }
    if !spec.contains_box(&origin, &origin) {
        return Err(DomainError::InvalidInput("grid does not contain the origin".into()));
    }
    let values = sample_on_grid(u, spec)?.values;
    let oidx: Vec<usize> = (0..d).map(|a| spec.nearest(a, 0.0)).collect();
    let origin_node = spec.flat(&oidx);
    if !(values[origin_node] > 0.0) {
        return Err(DomainError::OriginOutside { value: values[origin_node] });
    }

    let mask = flood_fill(spec, &values, origin_node);

    let strides = spec.strides();
    let mut faces = Vec::new();
    for axis in 0..d {
        for upper in [false, true] {
            let fixed = if upper { spec.counts[axis] - 1 } else { 0 };
            let touches = (0..spec.len())
                .into_par_iter()
                .any(|k| mask[k] && (k / strides[axis]) % spec.counts[axis] == fixed);
            if touches {
                faces.push(Face { axis, upper, dim: d });
            }
        }
    }
    if !faces.is_empty() {
        return Err(DomainError::ComponentTouchesGridEdge { faces });
    }

    let mut topo = Topology::default();
    if d == 2 {
        marching_squares(spec, &mask, &values, &mut topo);
    } else {
        marching_tetrahedra(spec, &mask, &mut topo);
    }

    let vertices: Vec<BoundaryVertex> = topo
        .edge_list
        .par_iter()
        .map(|&(a, b)| {
            let (inner, outer) = if mask[a] { (a, b) } else { (b, a) };
            refine_edge(u, spec, inner, outer, values[inner], values[outer])
        })
        .collect();

    let mut triangles = topo.triangles;
    for t in triangles.iter_mut() {
        orient(t, &vertices);
    }

    let mut bbox_lo = vec![f64::INFINITY; d];
    let mut bbox_hi = vec![f64::NEG_INFINITY; d];
    for v in &vertices {
        for a in 0..d {
            bbox_lo[a] = bbox_lo[a].min(v.point[a]);
            bbox_hi[a] = bbox_hi[a].max(v.point[a]);
        }
    }

    Ok(DomainSlab {
        spec: spec.clone(),
        mask,
        values,
        vertices,
        segments: topo.segments,
        triangles,
        origin_node,
        origin_inside: true,
        bbox_lo,
        bbox_hi,
        edges: topo.edges,
    })
}

fn flood_fill(spec: &GridSpec, values: &[f64], seed: usize) -> Vec<bool> {
    let d = spec.dim();
    let strides = spec.strides();
    let mut mask = vec![false; spec.len()];
    let mut stack = vec![seed];
    mask[seed] = true;
    while let Some(k) = stack.pop() {
        for a in 0..d {
            let i = (k / strides[a]) % spec.counts[a];
            if i > 0 {
                let nb = k - strides[a];
                if !mask[nb] && values[nb] > 0.0 {
                    mask[nb] = true;
                    stack.push(nb);
                }
            }
            if i + 1 < spec.counts[a] {
                let nb = k + strides[a];
                if !mask[nb] && values[nb] > 0.0 {
                    mask[nb] = true;
                    stack.push(nb);
                }
            }
        }
    }
    mask
}

#[derive(Default)]
struct Topology {
    edges: HashMap<(usize, usize), usize>,
    edge_list: Vec<(usize, usize)>,
    segments: Vec<[usize; 2]>,
    triangles: Vec<[usize; 3]>,
}

impl Topology {
    fn vertex(&mut self, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        let next = self.edge_list.len();
        *self.edges.entry(key).or_insert_with(|| {
            self.edge_list.push(key);
            next
        })
    }
}

fn marching_squares(spec: &GridSpec, mask: &[bool], values: &[f64], topo: &mut Topology) {
    let (nx, ny) = (spec.counts[0], spec.counts[1]);
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            let c = [i * ny + j, (i + 1) * ny + j, (i + 1) * ny + j + 1, i * ny + j + 1];
            let inside = c.map(|k| mask[k]);
            let n_in = inside.iter().filter(|&&b| b).count();
            if n_in == 0 || n_in == 4 {
                continue;
            }
            let crossing: Vec<usize> = (0..4).filter(|&e| inside[e] != inside[(e + 1) % 4]).collect();
            let v: Vec<usize> = crossing.iter().map(|&e| topo.vertex(c[e], c[(e + 1) % 4])).collect();
            if crossing.len() == 2 {
                topo.segments.push([v[0], v[1]]);
                continue;
            }
            // Diagonal configuration: the bilinear saddle decides which
            // corners are joined.
            let f = c.map(|k| values[k]);
            let denom = f[0] + f[2] - f[1] - f[3];
            let saddle = if denom != 0.0 { (f[0] * f[2] - f[1] * f[3]) / denom } else { 0.0 };
            let joined_in = saddle > 0.0;
            // Edge e joins corners e and e+1; a corner is cut off by its two
            // incident edges e-1 and e.
            for corner in 0..4 {
                if inside[corner] != joined_in {
                    let e_prev = (corner + 3) % 4;
                    let a = v[crossing.iter().position(|&e| e == e_prev).unwrap()];
                    let b = v[crossing.iter().position(|&e| e == corner).unwrap()];
                    topo.segments.push([a, b]);
                }
            }
        }
    }
}

fn marching_tetrahedra(spec: &GridSpec, mask: &[bool], topo: &mut Topology) {
    let (nx, ny, nz) = (spec.counts[0], spec.counts[1], spec.counts[2]);
    let s = spec.strides();
    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
    let off = |bits: usize| (bits & 1) * s[0] + ((bits >> 1) & 1) * s[1] + ((bits >> 2) & 1) * s[2];
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            for k in 0..nz - 1 {
                let base = i * s[0] + j * s[1] + k * s[2];
                let corners: [usize; 8] = std::array::from_fn(|b| base + off(b));
                let ins = corners.map(|c| mask[c]);
                let n_in = ins.iter().filter(|&&b| b).count();
                if n_in == 0 || n_in == 8 {
                    continue;
                }
                for p in PERMS {
                    let b1 = 1 << p[0];
                    let b2 = b1 | (1 << p[1]);
                    let tet = [corners[0], corners[b1], corners[b2], corners[7]];
                    let tin = [ins[0], ins[b1], ins[b2], ins[7]];
                    tet_surface(&tet, &tin, topo);
                }
            }
        }
    }
}

fn tet_surface(tet: &[usize; 4], tin: &[bool; 4], topo: &mut Topology) {
    let inside: Vec<usize> = (0..4).filter(|&q| tin[q]).collect();
    let outside: Vec<usize> = (0..4).filter(|&q| !tin[q]).collect();
    match inside.len() {
        1 | 3 => {
            let (lone, others) = if inside.len() == 1 { (inside[0], &outside) } else { (outside[0], &inside) };
            let v: Vec<usize> = others.iter().map(|&o| topo.vertex(tet[lone], tet[o])).collect();
            topo.triangles.push([v[0], v[1], v[2]]);
        }
        2 => {
            let (a, b, c, d) = (inside[0], inside[1], outside[0], outside[1]);
            let ac = topo.vertex(tet[a], tet[c]);
            let ad = topo.vertex(tet[a], tet[d]);
            let bd = topo.vertex(tet[b], tet[d]);
            let bc = topo.vertex(tet[b], tet[c]);
            topo.triangles.push([ac, ad, bd]);
            topo.triangles.push([ac, bd, bc]);
        }
        _ => {}
    }
}

/// Root of `U` on the segment from an inside node to an outside one.
fn refine_edge<F: ScalarField + ?Sized>(
    u: &F,
    spec: &GridSpec,
    inner: usize,
    outer: usize,
    f_in: f64,
    f_out: f64,
) -> BoundaryVertex {
    let pa = spec.point(&spec.unflat(inner));
    let pb = spec.point(&spec.unflat(outer));
    let at = |s: f64| -> Vec<f64> { pa.iter().zip(&pb).map(|(a, b)| a + s * (b - a)).collect() };
    let g = |s: f64| u.value(&at(s));

    let (mut lo, mut hi, mut glo, mut ghi) = (0.0, 1.0, f_in, f_out);
    if ghi > 0.0 {
        // Neighbouring positive region outside the component: look for an
        // interior sign change, else settle on the midpoint.
        let mut found = false;
        for m in 1..16 {
            let s = m as f64 / 16.0;
            let gs = g(s);
            if gs <= 0.0 {
                hi = s;
                ghi = gs;
                found = true;
                break;
            }
        }
        if !found {
            lo = 0.5;
            hi = 0.5;
            glo = g(0.5);
        }
    }
    // Illinois regula falsi with a bisection safeguard.
    let mut s = lo;
    let mut gs = glo;
    let mut side = 0i32;
    for it in 0..200 {
        if hi - lo <= 1e-16 || gs.abs() <= 0.01 * SURFACE_TOL && it > 0 {
            break;
        }
        s = if it % 8 == 7 || glo == ghi { 0.5 * (lo + hi) } else { (lo * ghi - hi * glo) / (ghi - glo) };
        if !(s > lo && s < hi) {
            s = 0.5 * (lo + hi);
        }
        gs = g(s);
        if gs == 0.0 {
            break;
        }
        if gs > 0.0 {
            lo = s;
            glo = gs;
            if side == 1 {
                ghi *= 0.5;
            }
            side = 1;
        } else {
            hi = s;
            ghi = gs;
            if side == -1 {
                glo *= 0.5;
            }
            side = -1;
        }
    }
    let point = at(s);
    let jet = u.jet(&point);
    let gn = jet.grad_norm();
    let normal = if gn > 0.0 { jet.grad.iter().map(|g| -g / gn).collect() } else { vec![0.0; point.len()] };
    BoundaryVertex { point, normal, value: jet.value, inner, outer, theta: s }
}

fn orient(t: &mut [usize; 3], v: &[BoundaryVertex]) {
    let p = |i: usize| &v[t[i]].point;
    let e1: Vec<f64> = (0..3).map(|a| p(1)[a] - p(0)[a]).collect();
    let e2: Vec<f64> = (0..3).map(|a| p(2)[a] - p(0)[a]).collect();
    let n = [e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0]];
    let avg: f64 = (0..3).map(|a| n[a] * (v[t[0]].normal[a] + v[t[1]].normal[a] + v[t[2]].normal[a])).sum();
    if avg < 0.0 {
        t.swap(1, 2);
    }
}
