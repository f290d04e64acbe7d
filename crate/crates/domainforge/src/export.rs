//! Text and image exports of an extracted domain. All writers are
//! deterministic: they follow vertex and cell order from extraction.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::extract::DomainSlab;
use crate::DomainError;

/// Point marker for SVG overlays (critical points).
#[derive(Debug, Clone, PartialEq)]
pub struct Marker {
    pub x: f64,
    pub y: f64,
    pub label: String,
}

/// Boundary vertices with outward normals, then the polyline pieces.
pub fn boundary_csv(d: &DomainSlab) -> String {
    let dim = d.dim();
    let mut s = String::new();
    let coord_names: Vec<String> = (0..dim).map(|a| axis_name(a, dim)).collect();
    let _ = writeln!(
        s,
        "vertex,{},{},value",
        coord_names.join(","),
        coord_names.iter().map(|c| format!("n_{c}")).collect::<Vec<_>>().join(",")
    );
    for (i, v) in d.vertices.iter().enumerate() {
        let p: Vec<String> = v.point.iter().map(|x| format!("{x:.12e}")).collect();
        let n: Vec<String> = v.normal.iter().map(|x| format!("{x:.9e}")).collect();
        let _ = writeln!(s, "{i},{},{},{:.3e}", p.join(","), n.join(","), v.value);
    }
    if !d.segments.is_empty() {
        let _ = writeln!(s, "segment,from,to");
        for (i, [a, b]) in d.segments.iter().enumerate() {
            let _ = writeln!(s, "{i},{a},{b}");
        }
    }
    s
}

fn axis_name(a: usize, dim: usize) -> String {
    if a + 1 == dim {
        "y".into()
    } else if dim == 2 {
        "x".into()
    } else {
        format!("x{}", a + 1)
    }
}

/// Wavefront OBJ of the 3-D triangle soup (1-based indices).
pub fn obj_mesh(d: &DomainSlab) -> String {
    let mut s = String::from("# boundary of the origin's positive component\n");
    for v in &d.vertices {
        let _ = writeln!(s, "v {:.9} {:.9} {:.9}", v.point[0], v.point[1], v.point.get(2).copied().unwrap_or(0.0));
    }
    for v in &d.vertices {
        let _ = writeln!(s, "vn {:.6} {:.6} {:.6}", v.normal[0], v.normal[1], v.normal.get(2).copied().unwrap_or(0.0));
    }
    for t in &d.triangles {
        let _ = writeln!(s, "f {0}//{0} {1}//{1} {2}//{2}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    s
}

/// SVG rendering of a 2-D boundary with optional markers. The y axis is
/// stretched so the slab is readable when it is long and thin.
pub fn svg_contour(d: &DomainSlab, markers: &[Marker], title: &str) -> String {
    let spec = &d.spec;
    let (x0, x1, y0, y1) = (spec.lo[0], spec.hi[0], spec.lo[1], spec.hi[1]);
    let width = 1200.0;
    let height = (width * (y1 - y0) / (x1 - x0)).clamp(240.0, 900.0);
    let px = |x: f64| (x - x0) / (x1 - x0) * width;
    let py = |y: f64| (y1 - y) / (y1 - y0) * height;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">",
        w = width,
        h = height + 30.0
    );
    let _ = writeln!(s, "<rect x=\"0\" y=\"0\" width=\"{width}\" height=\"{height}\" fill=\"white\" stroke=\"#888\"/>");
    for yl in [-1.0, 1.0] {
        if yl > y0 && yl < y1 {
            let _ = writeln!(
                s,
                "<line x1=\"0\" y1=\"{y:.2}\" x2=\"{width}\" y2=\"{y:.2}\" stroke=\"#bbb\" stroke-dasharray=\"6 4\"/>",
                y = py(yl)
            );
        }
    }
    let _ = write!(s, "<path fill=\"none\" stroke=\"#1f4e9c\" stroke-width=\"1.2\" d=\"");
    for [a, b] in &d.segments {
        let (pa, pb) = (&d.vertices[*a].point, &d.vertices[*b].point);
        let _ = write!(s, "M{:.2} {:.2}L{:.2} {:.2}", px(pa[0]), py(pa[1]), px(pb[0]), py(pb[1]));
    }
    let _ = writeln!(s, "\"/>");
    for m in markers {
        let _ = writeln!(
            s,
            "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"#c0392b\"><title>{}</title></circle>",
            px(m.x),
            py(m.y),
            m.label
        );
    }
    let _ = writeln!(s, "<text x=\"8\" y=\"{:.0}\" font-family=\"monospace\" font-size=\"14\">{}</text>", height + 20.0, title);
    s.push_str("</svg>\n");
    s
}

/// Binary PGM (P5) of a 2-D mask, y up.
pub fn mask_pgm(d: &DomainSlab) -> Result<Vec<u8>, DomainError> {
    if d.dim() != 2 {
        return Err(DomainError::UnsupportedDimension(d.dim()));
    }
    let (nx, ny) = (d.spec.counts[0], d.spec.counts[1]);
    let mut out = format!("P5\n{nx} {ny}\n255\n").into_bytes();
    for j in (0..ny).rev() {
        for i in 0..nx {
            out.push(if d.mask[i * ny + j] { 255 } else { 0 });
        }
    }
    Ok(out)
}

/// Raw mask bytes (row-major, 1 = inside) with a JSON sidecar.
pub fn write_mask_raw(d: &DomainSlab, base: &Path) -> Result<(), DomainError> {
    let io = |e: std::io::Error| DomainError::Io(e.to_string());
    let raw = base.with_extension("raw");
    fs::write(&raw, d.mask.iter().map(|&m| m as u8).collect::<Vec<_>>()).map_err(io)?;
    let list = |v: &[f64]| v.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(", ");
    let json = format!(
        "{{\n  \"file\": \"{}\",\n  \"dtype\": \"u8\",\n  \"ordering\": \"row-major, first axis slowest, last axis is y\",\n  \"lo\": [{}],\n  \"hi\": [{}],\n  \"counts\": [{}]\n}}\n",
        raw.file_name().and_then(|s| s.to_str()).unwrap_or(""),
        list(&d.spec.lo),
        list(&d.spec.hi),
        d.spec.counts.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")
    );
    fs::write(base.with_extension("json"), json).map_err(io)
}
