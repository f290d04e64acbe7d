//! Tensor grids, dense sampling and flat binary dumps.
//!
//! Nodes are stored row-major: the first axis is slowest, the last axis (the
//! profile direction `y`) is fastest.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::field::ScalarField;
use crate::FieldError;

/// Node budget for a single grid.
pub const MAX_NODES: usize = 64 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, counts: Vec<usize>) -> Result<Self, FieldError> {
        if lo.len() != hi.len() || lo.len() != counts.len() || lo.is_empty() {
            return Err(FieldError::InvalidGrid("axis arrays have different lengths".into()));
        }
        for a in 0..lo.len() {
            if counts[a] < 3 {
                return Err(FieldError::InvalidGrid(format!("axis {a} has {} nodes, need 3", counts[a])));
            }
            if !(hi[a] > lo[a]) || !lo[a].is_finite() || !hi[a].is_finite() {
                return Err(FieldError::InvalidGrid(format!("axis {a} extent [{}, {}]", lo[a], hi[a])));
            }
        }
        let nodes = counts.iter().try_fold(1usize, |acc, &c| acc.checked_mul(c)).unwrap_or(usize::MAX);
        if nodes > MAX_NODES {
            return Err(FieldError::OutOfMemoryBudget { nodes, budget: MAX_NODES });
        }
        Ok(GridSpec { lo, hi, counts })
    }

    /// Box `∏ [-half_a, half_a]`.
    pub fn symmetric(half: &[f64], counts: &[usize]) -> Result<Self, FieldError> {
        GridSpec::new(half.iter().map(|h| -h).collect(), half.to_vec(), counts.to_vec())
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    pub fn h(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / (self.counts[axis] - 1) as f64
    }
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        if i + 1 == self.counts[axis] {
            self.hi[axis]
        } else {
            self.lo[axis] + self.h(axis) * i as f64
        }
    }
    pub fn strides(&self) -> Vec<usize> {
        let d = self.dim();
        let mut s = vec![1; d];
        for a in (0..d - 1).rev() {
            s[a] = s[a + 1] * self.counts[a + 1];
        }
        s
    }
    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(self.strides()).map(|(i, s)| i * s).sum()
    }
    pub fn unflat(&self, mut k: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for a in (0..self.dim()).rev() {
            idx[a] = k % self.counts[a];
            k /= self.counts[a];
        }
        idx
    }
    pub fn point(&self, idx: &[usize]) -> Vec<f64> {
        idx.iter().enumerate().map(|(a, &i)| self.coord(a, i)).collect()
    }
    /// Nearest node index along an axis, clamped to the grid.
    pub fn nearest(&self, axis: usize, x: f64) -> usize {
        let r = ((x - self.lo[axis]) / self.h(axis)).round();
        r.clamp(0.0, (self.counts[axis] - 1) as f64) as usize
    }
    /// Whether the box `[lo, hi]` lies inside the grid.
    pub fn contains_box(&self, lo: &[f64], hi: &[f64]) -> bool {
        (0..self.dim()).all(|a| self.lo[a] <= lo[a] && hi[a] <= self.hi[a])
    }
}

#[derive(Debug, Clone)]
pub struct GridSamples {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    /// Node gradients, `dim` entries per node, when cached.
    pub gradients: Option<Vec<f64>>,
}

/// Evaluates `field` at every node; slabs of the first axis run in parallel.
pub fn sample_on_grid<F: ScalarField + ?Sized>(field: &F, spec: &GridSpec) -> Result<GridSamples, FieldError> {
    check_dim(field.dim(), spec)?;
    let slab = spec.strides()[0];
    let mut values = vec![0.0; spec.len()];
    values.par_chunks_mut(slab).enumerate().for_each(|(i0, chunk)| {
        let mut idx = vec![0; spec.dim()];
        idx[0] = i0;
        for (k, v) in chunk.iter_mut().enumerate() {
            let mut r = k;
            for a in (1..spec.dim()).rev() {
                idx[a] = r % spec.counts[a];
                r /= spec.counts[a];
            }
            *v = field.value(&spec.point(&idx));
        }
    });
    Ok(GridSamples { spec: spec.clone(), values, gradients: None })
}

fn check_dim(dim: usize, spec: &GridSpec) -> Result<(), FieldError> {
    if dim != spec.dim() {
        return Err(FieldError::InvalidGrid(format!("field has dim {dim}, grid has {}", spec.dim())));
    }
    Ok(())
}

impl GridSamples {
    pub fn at(&self, idx: &[usize]) -> f64 {
        self.values[self.spec.flat(idx)]
    }

    /// Fills `gradients` from the field's analytic derivatives.
    pub fn cache_gradients<F: ScalarField + ?Sized>(&mut self, field: &F) -> Result<(), FieldError> {
        check_dim(field.dim(), &self.spec)?;
        let d = self.spec.dim();
        let spec = &self.spec;
        let mut g = vec![0.0; spec.len() * d];
        g.par_chunks_mut(d).enumerate().for_each(|(k, out)| {
            out.copy_from_slice(&field.gradient(&spec.point(&spec.unflat(k))));
        });
        self.gradients = Some(g);
        Ok(())
    }

    /// CSV of the line through `fixed` along `axis` (`fixed[axis]` ignored).
    pub fn csv_line(&self, axis: usize, fixed: &[usize]) -> String {
        let mut idx = fixed.to_vec();
        let mut out = String::from("coord,value\n");
        for i in 0..self.spec.counts[axis] {
            idx[axis] = i;
            out.push_str(&format!("{:.12e},{:.12e}\n", self.spec.coord(axis, i), self.at(&idx)));
        }
        out
    }
}

/// Writes `<base>.bin` (little-endian f64, row-major) and `<base>.json`.
pub fn write_grid_dump(samples: &GridSamples, base: &Path) -> Result<(), FieldError> {
    let io = |e: std::io::Error| FieldError::Io(e.to_string());
    let bin = base.with_extension("bin");
    let mut bytes = Vec::with_capacity(samples.values.len() * 8);
    for v in &samples.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&bin, bytes).map_err(io)?;
    let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ");
    let counts = samples.spec.counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ");
    let json = format!(
        "{{\n  \"file\": \"{}\",\n  \"dtype\": \"f64-le\",\n  \"ordering\": \"row-major, first axis slowest, last axis is y\",\n  \"lo\": [{}],\n  \"hi\": [{}],\n  \"counts\": [{}]\n}}\n",
        bin.file_name().and_then(|s| s.to_str()).unwrap_or(""),
        list(&samples.spec.lo),
        list(&samples.spec.hi),
        counts
    );
    let mut f = fs::File::create(base.with_extension("json")).map_err(io)?;
    f.write_all(json.as_bytes()).map_err(io)
}
