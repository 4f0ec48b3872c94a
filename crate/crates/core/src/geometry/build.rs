use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{DefectShape, Mesh, Point2, Region};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DomainShape {
    /// The rectangle [0, width] × [0, height].
    Rectangle { width: f64, height: f64 },
    /// The disc of the given radius centered at the origin.
    Disc { radius: f64 },
}

/// Plate mid-plane together with its a-priori scale parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    #[serde(flatten)]
    pub shape: DomainShape,
    pub rho0: f64,
    #[serde(default = "default_l0")]
    pub l0: f64,
    pub q0: f64,
    /// Segments of the inscribed polygon for curved boundaries.
    #[serde(default = "default_segments")]
    pub segments: usize,
}

fn default_l0() -> f64 {
    1.0
}

fn default_segments() -> usize {
    64
}

impl DomainSpec {
    pub fn unit_square() -> Self {
        Self {
            shape: DomainShape::Rectangle { width: 1.0, height: 1.0 },
            rho0: 1.0,
            l0: 1.0,
            q0: 2.0,
            segments: 64,
        }
    }

    pub fn disc(radius: f64) -> Self {
        Self { shape: DomainShape::Disc { radius }, rho0: radius, l0: 1.0, q0: 2.0, segments: 64 }
    }

    pub fn diameter(&self) -> f64 {
        match self.shape {
            DomainShape::Rectangle { width, height } => width.hypot(height),
            DomainShape::Disc { radius } => 2.0 * radius,
        }
    }

    /// Checks positivity and diam(Ω) ≤ Q₀ρ₀. The origin lies in the closure of Ω for both shapes.
    pub fn validate(&self) -> Result<()> {
        let positive = match self.shape {
            DomainShape::Rectangle { width, height } => width > 0.0 && height > 0.0,
            DomainShape::Disc { radius } => radius > 0.0,
        };
        if !positive || !(self.rho0 > 0.0) || !(self.q0 > 0.0) {
            return Err(Error::InvalidDomain("dimensions, rho0 and q0 must be positive".into()));
        }
        if self.diameter() > self.q0 * self.rho0 * (1.0 + 1e-12) {
            return Err(Error::InvalidDomain(format!(
                "diam = {} exceeds q0 * rho0 = {}",
                self.diameter(),
                self.q0 * self.rho0
            )));
        }
        if self.segments < 3 {
            return Err(Error::InvalidDomain("at least 3 boundary segments are required".into()));
        }
        Ok(())
    }

    /// The (polygonal) outline of Ω, counterclockwise.
    pub fn outline(&self) -> Vec<Point2> {
        match self.shape {
            DomainShape::Rectangle { width, height } => vec![
                Point2::new(0.0, 0.0),
                Point2::new(width, 0.0),
                Point2::new(width, height),
                Point2::new(0.0, height),
            ],
            DomainShape::Disc { radius } => ring(Point2::default(), radius, self.polygon_segments()),
        }
    }

    pub(crate) fn polygon_segments(&self) -> usize {
        self.segments.max(64)
    }
}

pub(crate) fn ring(center: Point2, radius: f64, n: usize) -> Vec<Point2> {
    (0..n)
        .map(|j| {
            let a = 2.0 * PI * j as f64 / n as f64;
            center + Point2::new(radius * a.cos(), radius * a.sin())
        })
        .collect()
}

fn divisions(len: f64, h: f64) -> usize {
    ((len / h) - 1e-9).ceil().max(1.0) as usize
}

/// Builds a structured conforming mesh of Ω with the defect resolved as a tagged submesh.
///
/// Supported combinations: rectangle (plain or with an axis-aligned rectangular
/// defect) and disc (plain or with a concentric disc defect). The grid spacing
/// never exceeds `target_h`.
pub fn build_plate_mesh(domain: &DomainSpec, defect: Option<&DefectShape>, target_h: f64) -> Result<Mesh> {
    domain.validate()?;
    if !(target_h > 0.0) || !target_h.is_finite() {
        return Err(Error::Unmeshable("target_h must be positive".into()));
    }
    match (domain.shape, defect) {
        (DomainShape::Rectangle { width, height }, None) => {
            let xs = breaks(&[0.0, width], target_h);
            let ys = breaks(&[0.0, height], target_h);
            grid_mesh(&xs, &ys, |_| false)
        }
        (DomainShape::Rectangle { width, height }, Some(&DefectShape::Rectangle { center, a, b })) => {
            if !(a > 0.0 && b > 0.0) {
                return Err(Error::Unmeshable("defect sides must be positive".into()));
            }
            let (x0, x1) = (center.x - 0.5 * a, center.x + 0.5 * a);
            let (y0, y1) = (center.y - 0.5 * b, center.y + 0.5 * b);
            if x0 <= 0.0 || y0 <= 0.0 || x1 >= width || y1 >= height {
                return Err(Error::DefectNotInterior);
            }
            if target_h > a.min(b) * (1.0 + 1e-12) {
                return Err(Error::Unmeshable(format!(
                    "target_h = {target_h} exceeds the smallest defect side {}",
                    a.min(b)
                )));
            }
            let xs = breaks(&[0.0, x0, x1, width], target_h);
            let ys = breaks(&[0.0, y0, y1, height], target_h);
            grid_mesh(&xs, &ys, |c| c.x > x0 && c.x < x1 && c.y > y0 && c.y < y1)
        }
        (DomainShape::Disc { radius }, None) => {
            let n = divisions(radius, target_h);
            let radii: Vec<f64> = (1..=n).map(|k| radius * k as f64 / n as f64).collect();
            polar_mesh(&radii, domain.polygon_segments(), 0)
        }
        (DomainShape::Disc { radius }, Some(&DefectShape::Disc { center, radius: r })) => {
            if center.norm() > 1e-12 * radius {
                return Err(Error::Unmeshable("disc defects must be concentric with the disc plate".into()));
            }
            if !(r > 0.0) {
                return Err(Error::Unmeshable("defect radius must be positive".into()));
            }
            let n = domain.polygon_segments();
            // compare against the inscribed outer polygon
            if r >= radius * (PI / n as f64).cos() {
                return Err(Error::DefectNotInterior);
            }
            if target_h > 2.0 * r {
                return Err(Error::Unmeshable(format!("target_h = {target_h} exceeds the defect diameter")));
            }
            let n_in = divisions(r, target_h);
            let n_out = divisions(radius - r, target_h);
            let mut radii: Vec<f64> = (1..=n_in).map(|k| r * k as f64 / n_in as f64).collect();
            radii.extend((1..=n_out).map(|k| r + (radius - r) * k as f64 / n_out as f64));
            polar_mesh(&radii, n, n_in)
        }
        (_, Some(d)) => Err(Error::Unmeshable(format!(
            "no structured mesher for a {} defect in this domain",
            d.kind_name()
        ))),
    }
}

/// Sorted break points with each interval uniformly subdivided to spacing ≤ h.
fn breaks(fixed: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![fixed[0]];
    for w in fixed.windows(2) {
        let n = divisions(w[1] - w[0], h);
        for k in 1..=n {
            out.push(if k == n { w[1] } else { w[0] + (w[1] - w[0]) * k as f64 / n as f64 });
        }
    }
    out
}

fn grid_mesh(xs: &[f64], ys: &[f64], in_defect: impl Fn(Point2) -> bool) -> Result<Mesh> {
    let nx = xs.len();
    let id = |i: usize, j: usize| j * nx + i;
    let mut nodes = Vec::with_capacity(nx * ys.len());
    for &y in ys {
        for &x in xs {
            nodes.push(Point2::new(x, y));
        }
    }
    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    for j in 0..ys.len() - 1 {
        for i in 0..nx - 1 {
            let c = Point2::new(0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1]));
            let region = if in_defect(c) { Region::Defect } else { Region::Exterior };
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            regions.extend_from_slice(&[region, region]);
        }
    }
    Mesh::from_tagged_triangles(nodes, triangles, regions)
}

/// Polar mesh with a center node, rings at `radii` and `n` nodes per ring.
/// Triangles inside ring `defect_rings` (1-based) are tagged Defect.
fn polar_mesh(radii: &[f64], n: usize, defect_rings: usize) -> Result<Mesh> {
    let mut nodes = vec![Point2::default()];
    for &r in radii {
        nodes.extend(ring(Point2::default(), r, n));
    }
    let id = |k: usize, j: usize| 1 + (k - 1) * n + (j % n);
    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    let tag = |k: usize| if k <= defect_rings { Region::Defect } else { Region::Exterior };
    for j in 0..n {
        triangles.push([0, id(1, j), id(1, j + 1)]);
        regions.push(tag(1));
    }
    for k in 1..radii.len() {
        for j in 0..n {
            triangles.push([id(k, j), id(k + 1, j), id(k + 1, j + 1)]);
            triangles.push([id(k, j), id(k + 1, j + 1), id(k, j + 1)]);
            regions.extend_from_slice(&[tag(k + 1); 2]);
        }
    }
    Mesh::from_tagged_triangles(nodes, triangles, regions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BoundaryTag, RegionSel};

    #[test]
    fn unit_square_grid() {
        let m = build_plate_mesh(&DomainSpec::unit_square(), None, 0.25).unwrap();
        assert_eq!(m.n_triangles(), 32);
        assert_eq!(m.n_nodes(), 25);
        assert!(!m.has_defect());
        assert!((m.area(RegionSel::All) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn square_hole_area_exact() {
        let d = DefectShape::Rectangle { center: Point2::new(0.5, 0.5), a: 0.2, b: 0.2 };
        let m = build_plate_mesh(&DomainSpec::unit_square(), Some(&d), 0.05).unwrap();
        assert!((m.area(RegionSel::Defect) - 0.04).abs() <= 1e-12 * 0.04);
        assert!((m.area(RegionSel::All) - 1.0).abs() <= 1e-12);
        assert_eq!(m.n_triangles(), 800);
    }

    #[test]
    fn annulus_defect_area() {
        let d = DefectShape::Disc { center: Point2::default(), radius: 0.3 };
        let m = build_plate_mesh(&DomainSpec::disc(1.0), Some(&d), 0.1).unwrap();
        let exact = std::f64::consts::PI * 0.09;
        let n = 64.0;
        let inscribed = n / 2.0 * 0.09 * (2.0 * PI / n).sin();
        let area = m.area(RegionSel::Defect);
        assert!((area - inscribed).abs() < 1e-12);
        assert!((area - exact).abs() / exact < 0.01);
        assert_eq!(m.boundary_loops(BoundaryTag::Defect)[0].len(), 64);
    }

    #[test]
    fn annulus_refinement_boundary_counts() {
        let d = DefectShape::Disc { center: Point2::default(), radius: 0.3 };
        let m = build_plate_mesh(&DomainSpec::disc(1.0), Some(&d), 0.1).unwrap();
        let r = m.refine().refine();
        for tag in [BoundaryTag::Outer, BoundaryTag::Defect] {
            let before = m.boundary_loops(tag)[0].len();
            let after = r.boundary_loops(tag)[0].len();
            assert_eq!(after, 4 * before);
        }
    }

    #[test]
    fn rejects_touching_defect_and_coarse_h() {
        let touching = DefectShape::Rectangle { center: Point2::new(0.1, 0.5), a: 0.2, b: 0.2 };
        assert!(matches!(
            build_plate_mesh(&DomainSpec::unit_square(), Some(&touching), 0.05),
            Err(Error::DefectNotInterior)
        ));
        let small = DefectShape::Rectangle { center: Point2::new(0.5, 0.5), a: 0.05, b: 0.05 };
        assert!(matches!(
            build_plate_mesh(&DomainSpec::unit_square(), Some(&small), 0.1),
            Err(Error::Unmeshable(_))
        ));
        assert!(build_plate_mesh(&DomainSpec::unit_square(), None, 0.0).is_err());
    }
}
