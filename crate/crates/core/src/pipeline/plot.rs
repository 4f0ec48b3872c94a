//! Dependency-free SVG output. All numbers are printed with fixed precision so
//! equal inputs give equal bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::assembly::PlateModel;
use crate::error::{Error, Result};
use crate::estimates::{lower_bound, upper_bound, Calibration};
use crate::geometry::{BoundaryTag, Mesh};
use crate::solvers::{PlateSolution, ProblemKind};
use crate::works::energy_density_field;

const BANDS: usize = 12;
const PANEL: f64 = 320.0;
const MARGIN: f64 = 30.0;

/// Viridis-like ramp sampled at five stops.
fn color(s: f64) -> String {
    const STOPS: [[f64; 3]; 5] = [
        [68.0, 1.0, 84.0],
        [59.0, 82.0, 139.0],
        [33.0, 145.0, 140.0],
        [94.0, 201.0, 98.0],
        [253.0, 231.0, 37.0],
    ];
    let x = s.clamp(0.0, 1.0) * 4.0;
    let i = (x.floor() as usize).min(3);
    let f = x - i as f64;
    let c: Vec<u8> = (0..3).map(|k| (STOPS[i][k] + f * (STOPS[i + 1][k] - STOPS[i][k])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

struct Frame {
    x0: f64,
    y0: f64,
    scale: f64,
    dx: f64,
}

impl Frame {
    fn new(mesh: &Mesh, dx: f64) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in mesh.nodes() {
            lo = [lo[0].min(p.x), lo[1].min(p.y)];
            hi = [hi[0].max(p.x), hi[1].max(p.y)];
        }
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]).max(f64::MIN_POSITIVE);
        Frame { x0: lo[0], y0: hi[1], scale: PANEL / span, dx }
    }

    fn pt(&self, x: f64, y: f64) -> (f64, f64) {
        (self.dx + MARGIN + (x - self.x0) * self.scale, MARGIN + (self.y0 - y) * self.scale)
    }
}

/// Triangles filled by band of `values`; `None` entries are left untinted.
fn panel(svg: &mut String, mesh: &Mesh, values: &[Option<f64>], frame: &Frame, label: &str) {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    let lo = present.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for (t, v) in values.iter().enumerate() {
        let Some(v) = v else { continue };
        let band = if span > 1e-14 * hi.abs().max(lo.abs()) && span > 0.0 {
            (((v - lo) / span * BANDS as f64) as usize).min(BANDS - 1)
        } else {
            0
        };
        let c = color((band as f64 + 0.5) / BANDS as f64);
        let pts: Vec<String> = mesh
            .triangle_points(t)
            .iter()
            .map(|p| {
                let (x, y) = frame.pt(p.x, p.y);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(svg, r#"<polygon points="{}" fill="{c}" stroke="{c}" stroke-width="0.3"/>"#, pts.join(" "));
    }
    for (tag, stroke) in [(BoundaryTag::Outer, "#000000"), (BoundaryTag::Defect, "#d62728")] {
        for e in mesh.edges_tagged(tag) {
            let (a, b) = (mesh.nodes()[e.nodes[0]], mesh.nodes()[e.nodes[1]]);
            let ((x1, y1), (x2, y2)) = (frame.pt(a.x, a.y), frame.pt(b.x, b.y));
            let _ = writeln!(svg, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="{stroke}" stroke-width="1.2"/>"#);
        }
    }
    // colorbar
    let bx = frame.dx + MARGIN + PANEL + 8.0;
    for k in 0..BANDS {
        let y = MARGIN + PANEL * (1.0 - (k + 1) as f64 / BANDS as f64);
        let c = color((k as f64 + 0.5) / BANDS as f64);
        let _ = writeln!(svg, r#"<rect x="{bx:.2}" y="{y:.2}" width="12" height="{:.2}" fill="{c}"/>"#, PANEL / BANDS as f64);
    }
    let (lo, hi) = if present.is_empty() { (0.0, 0.0) } else { (lo, hi) };
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="9">{hi:.3e}</text>"#, bx, MARGIN - 4.0);
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="9">{lo:.3e}</text>"#, bx, MARGIN + PANEL + 12.0);
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="12">{label}</text>"#, frame.dx + MARGIN, MARGIN + PANEL + 24.0);
}

/// Two panels: the deflection w and the energy density E, with the defect outline.
pub fn fields_svg(model: &PlateModel, solution: &PlateSolution, rho0: f64, title: &str) -> String {
    let mesh = model.mesh();
    let inside = |t: usize| mesh.triangles()[t].iter().all(|&n| solution.active[n]);
    let w: Vec<Option<f64>> = (0..mesh.n_triangles())
        .map(|t| inside(t).then(|| mesh.triangles()[t].iter().map(|&n| solution.w(n)).sum::<f64>() / 3.0))
        .collect();
    let e = energy_density_field(model, solution, rho0);
    let e: Vec<Option<f64>> = (0..mesh.n_triangles()).map(|t| inside(t).then_some(e[t])).collect();
    let width = 2.0 * (PANEL + 2.0 * MARGIN + 60.0);
    let height = PANEL + 2.0 * MARGIN + 20.0;
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}">"#);
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="18" font-size="13">{title}</text>"#);
    panel(&mut svg, mesh, &w, &Frame::new(mesh, 0.0), "w");
    panel(&mut svg, mesh, &e, &Frame::new(mesh, width / 2.0), "E");
    svg.push_str("</svg>\n");
    svg
}

pub fn plot_fields(model: &PlateModel, solution: &PlateSolution, rho0: f64, path: &Path) -> Result<()> {
    let title = path.file_stem().and_then(|s| s.to_str()).unwrap_or("fields");
    std::fs::write(path, fields_svg(model, solution, rho0, title))?;
    Ok(())
}

/// Scatter of (t, |D|) with the line Kρ₀²t and the curve kρ₀²Ψ(t) or Cρ₀²Φ(t).
pub fn bounds_svg(points: &[(f64, f64)], cal: &Calibration, rho0: f64, title: &str) -> Result<String> {
    if points.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let (w, h) = (480.0, 360.0);
    let (l, r, top, bot) = (60.0, 20.0, 30.0, 40.0);
    let mut tmax = points.iter().map(|p| p.0).fold(0.0, f64::max) * 1.1;
    if cal.kind == ProblemKind::Rigid {
        tmax = tmax.min(0.99);
    }
    let tmax = tmax.max(1e-12);
    let curve = |t: f64| (upper_bound(t, cal.upper, rho0), lower_bound(t, cal.lower, rho0, cal.kind).unwrap_or(f64::NAN));
    let amax = points
        .iter()
        .map(|p| p.1)
        .chain([curve(tmax).0, curve(tmax).1].into_iter().filter(|v| v.is_finite()))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let sx = |t: f64| l + (w - l - r) * t / tmax;
    let sy = |a: f64| top + (h - top - bot) * (1.0 - a / amax);
    let mut svg = String::new();
    let _ = writeln!(svg, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#);
    let _ = writeln!(svg, r##"<rect width="100%" height="100%" fill="#ffffff"/>"##);
    let _ = writeln!(svg, r#"<text x="{l}" y="18" font-size="13">{title}</text>"#);
    let _ = writeln!(svg, r##"<line x1="{l}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#000"/>"##, h - bot, w - r, h - bot);
    let _ = writeln!(svg, r##"<line x1="{l}" y1="{top}" x2="{l}" y2="{:.2}" stroke="#000"/>"##, h - bot);
    let _ = writeln!(svg, r#"<text x="{:.2}" y="{:.2}" font-size="11">t (0 to {tmax:.3})</text>"#, (w - r) / 2.0, h - 10.0);
    let _ = writeln!(svg, r#"<text x="4" y="{:.2}" font-size="11">|D| (max {amax:.3e})</text>"#, top - 8.0);
    let n = 100;
    for (idx, color) in [(0usize, "#1f77b4"), (1, "#ff7f0e")] {
        let pts: Vec<String> = (0..=n)
            .filter_map(|k| {
                let t = tmax * k as f64 / n as f64;
                let c = curve(t);
                let a = if idx == 0 { c.0 } else { c.1 };
                a.is_finite().then(|| format!("{:.2},{:.2}", sx(t), sy(a.min(amax))))
            })
            .collect();
        let _ = writeln!(svg, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, pts.join(" "));
    }
    for &(t, a) in points {
        let _ = writeln!(svg, r##"<circle cx="{:.2}" cy="{:.2}" r="3.5" fill="#2ca02c"/>"##, sx(t), sy(a));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
