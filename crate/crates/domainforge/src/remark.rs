//! Negative control: the eigenfunction construction with `f(t) = λ₁t`.
//!
//! `U = cos(πy/2) − ε cosh(√μ₁x) cos(ω₁y)` with `ω₁ = √(π²/4 + μ₁)`. For
//! `ȳ < y < 1` both terms are positive, so the line `y = ȳ + δ` stays in the
//! positive set for every `x` and the component is unbounded.

use std::f64::consts::FRAC_PI_2;

use fieldkit::{FnField, GridSpec, Jet};

use crate::extract::{extract_component, Face};
use crate::DomainError;

const LINE_SAMPLES: usize = 2001;
const NODES_X: usize = 401;
const NODES_Y: usize = 121;
const Y_HALF: f64 = 1.2;

pub fn remark_r_field(mu1: f64, eps: f64) -> FnField {
    let r = mu1.sqrt();
    let w = (FRAC_PI_2 * FRAC_PI_2 + mu1).sqrt();
    FnField::new(
        2,
        move |p| (FRAC_PI_2 * p[1]).cos() - eps * (r * p[0]).cosh() * (w * p[1]).cos(),
        move |p| {
            let (x, y) = (p[0], p[1]);
            let (ch, sh) = ((r * x).cosh(), (r * x).sinh());
            let (c, s) = ((w * y).cos(), (w * y).sin());
            let (c0, s0) = ((FRAC_PI_2 * y).cos(), (FRAC_PI_2 * y).sin());
            let mut j = Jet::zeros(2);
            j.value = c0 - eps * ch * c;
            j.grad = vec![-eps * r * sh * c, -FRAC_PI_2 * s0 + eps * ch * w * s];
            let hxy = eps * r * sh * w * s;
            j.hess = vec![-eps * r * r * ch * c, hxy, hxy, -FRAC_PI_2 * FRAC_PI_2 * c0 + eps * ch * w * w * c];
            j
        },
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemarkWidth {
    /// Half-width of the base box.
    pub width: f64,
    pub line_positive: bool,
    /// Half-widths tried (base box and its doublings).
    pub boxes: Vec<f64>,
    /// Whether the component reached an x-face, per box.
    pub escapes: Vec<bool>,
    pub faces: Vec<Vec<Face>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemarkReport {
    pub mu1: f64,
    pub eps: f64,
    pub ybar: f64,
    pub delta: f64,
    pub widths: Vec<RemarkWidth>,
    /// Escapes at every width and every doubling.
    pub unbounded: bool,
}

/// Runs the line test and the box-doubling extraction for each half-width.
pub fn remark_r_demo(mu1: f64, eps: f64, widths: &[f64], doublings: usize) -> Result<RemarkReport, DomainError> {
    if !(mu1 > 0.0 && eps > 0.0) || widths.is_empty() {
        return Err(DomainError::InvalidInput("need mu1 > 0, eps > 0 and at least one width".into()));
    }
    let w1 = (FRAC_PI_2 * FRAC_PI_2 + mu1).sqrt();
    let ybar = FRAC_PI_2 / w1;
    let delta = 0.5 * (1.0 - ybar);
    let field = remark_r_field(mu1, eps);
    let u = |x: f64, y: f64| (FRAC_PI_2 * y).cos() - eps * (mu1.sqrt() * x).cosh() * (w1 * y).cos();

    let mut out = Vec::new();
    for &width in widths {
        let line_positive = (0..LINE_SAMPLES).all(|i| {
            let x = -width + 2.0 * width * i as f64 / (LINE_SAMPLES - 1) as f64;
            u(x, ybar + delta) > 0.0
        });
        let mut boxes = Vec::new();
        let mut escapes = Vec::new();
        let mut faces = Vec::new();
        for m in 0..=doublings {
            let half = width * (1u64 << m) as f64;
            let spec = GridSpec::symmetric(&[half, Y_HALF], &[NODES_X, NODES_Y])?;
            let touched = match extract_component(&field, &spec) {
                Ok(_) => Vec::new(),
                Err(DomainError::ComponentTouchesGridEdge { faces }) => faces,
                Err(e) => return Err(e),
            };
            escapes.push(touched.iter().any(|f| f.axis == 0));
            faces.push(touched);
            boxes.push(half);
        }
        out.push(RemarkWidth { width, line_positive, boxes, escapes, faces });
    }
    let unbounded = out.iter().all(|w| w.line_positive && w.escapes.iter().all(|&e| e));
    Ok(RemarkReport { mu1, eps, ybar, delta, widths: out, unbounded })
}
