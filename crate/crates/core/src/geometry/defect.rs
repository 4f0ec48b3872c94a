use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};

use super::build::ring;
use super::{point_segment_distance, polygon_area, polygon_boundary_distance, BoundaryTag, DomainSpec, Mesh, Point2, RegionSel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum DefectShape {
    Disc {
        center: Point2,
        radius: f64,
    },
    /// Axis-aligned rectangle with side `a` along x and side `b` along y.
    Rectangle {
        center: Point2,
        a: f64,
        b: f64,
    },
    /// General polygon; its Lipschitz constants must be supplied.
    Polygon {
        vertices: Vec<Point2>,
        #[serde(default)]
        r_d: Option<f64>,
        #[serde(default)]
        l_d: Option<f64>,
    },
}

impl DefectShape {
    pub fn kind_name(&self) -> &'static str {
        match self {
            DefectShape::Disc { .. } => "disc",
            DefectShape::Rectangle { .. } => "rectangle",
            DefectShape::Polygon { .. } => "polygon",
        }
    }

    /// Counterclockwise outline; discs use the inscribed `segments`-gon.
    pub fn outline(&self, segments: usize) -> Vec<Point2> {
        match self {
            DefectShape::Disc { center, radius } => ring(*center, *radius, segments),
            DefectShape::Rectangle { center, a, b } => {
                let (ha, hb) = (0.5 * a, 0.5 * b);
                vec![
                    *center + Point2::new(-ha, -hb),
                    *center + Point2::new(ha, -hb),
                    *center + Point2::new(ha, hb),
                    *center + Point2::new(-ha, hb),
                ]
            }
            DefectShape::Polygon { vertices, .. } => {
                let mut v = vertices.clone();
                if polygon_area(&v) < 0.0 {
                    v.reverse();
                }
                v
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            DefectShape::Disc { radius, .. } => 2.0 * radius,
            DefectShape::Rectangle { a, b, .. } => a.hypot(*b),
            DefectShape::Polygon { vertices, .. } => {
                let mut d: f64 = 0.0;
                for (i, p) in vertices.iter().enumerate() {
                    for q in &vertices[i + 1..] {
                        d = d.max(p.dist(*q));
                    }
                }
                d
            }
        }
    }

    /// Lipschitz constants (r_D, L_D) from the closed-form table.
    ///
    /// Disc of radius r: (r/√2, 3/2). Around any boundary point the disc is the
    /// epigraph of ψ(s) = r − √(r² − s²) on |s| < r/√2, with ‖ψ‖∞ + ρ‖ψ'‖∞ = r ≤ 1.06 r.
    ///
    /// Rectangle a×b: (min(a,b)/4, 2). Near a corner the boundary is |s| in a frame
    /// rotated by 45°, whose C^{0,1} norm is 2ρ; the box R_{ρ,2ρ} stays inside
    /// a window of size 0.78·min(a,b) around the corner.
    pub fn lipschitz_constants(&self) -> Result<(f64, f64)> {
        match self {
            DefectShape::Disc { radius, .. } => Ok((radius / SQRT_2, 1.5)),
            DefectShape::Rectangle { a, b, .. } => Ok((0.25 * a.min(*b), 2.0)),
            DefectShape::Polygon { r_d: Some(r), l_d: Some(l), .. } => Ok((*r, *l)),
            DefectShape::Polygon { .. } => Err(Error::UnsupportedShape(
                "general polygons need user-supplied r_d and l_d".into(),
            )),
        }
    }
}

/// Geometric parameters of a defect entering the size estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DefectGeometry {
    pub shape: DefectShape,
    pub r_d: f64,
    pub l_d: f64,
    pub q_d: f64,
    pub diam: f64,
    pub dist_to_outer: f64,
    pub d0: f64,
}

impl DefectGeometry {
    /// diam ≤ Q_D r_D holds with equality by construction.
    pub fn sifc_holds(&self, q_d_max: f64) -> bool {
        self.diam <= q_d_max * self.r_d * (1.0 + 1e-12)
    }

    pub fn distance_holds(&self, rho0: f64) -> bool {
        self.dist_to_outer >= self.d0 * rho0 && self.r_d < 0.5 * self.d0 * rho0
    }
}

/// Fills the Lipschitz table entries, diameter, Q_D = diam / r_D and the distance
/// from the (polygonal) defect to the (polygonal) outer boundary.
pub fn defect_parameters(shape: &DefectShape, domain: &DomainSpec, d0: f64) -> Result<DefectGeometry> {
    let (r_d, l_d) = shape.lipschitz_constants()?;
    let diam = shape.diameter();
    let n = domain.polygon_segments();
    let dist_to_outer = polygon_boundary_distance(&shape.outline(n), &domain.outline());
    Ok(DefectGeometry { shape: shape.clone(), r_d, l_d, q_d: diam / r_d, diam, dist_to_outer, d0 })
}

/// Area of {x ∈ D : dist(x, Γ) > threshold}, with Γ the boundary carrying `tag`.
///
/// Integrates the indicator over the defect triangles. Triangles are classified
/// wholesale when the 1-Lipschitz distance bound decides them; ambiguous ones are
/// quadrisected until their diameter falls below a fixed fraction of the defect
/// extent and then sampled at the centroid.
pub fn envelope_area(mesh: &Mesh, threshold: f64, tag: BoundaryTag) -> f64 {
    const RESOLUTION: f64 = 2.5e-4;
    let segments: Vec<(Point2, Point2)> =
        mesh.edges_tagged(tag).map(|e| (mesh.nodes()[e.nodes[0]], mesh.nodes()[e.nodes[1]])).collect();
    let dist = |p: Point2| segments.iter().map(|&(a, b)| point_segment_distance(p, a, b)).fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for t in mesh.selected_triangles(RegionSel::Defect) {
        for p in mesh.triangle_points(t) {
            lo = [lo[0].min(p.x), lo[1].min(p.y)];
            hi = [hi[0].max(p.x), hi[1].max(p.y)];
        }
    }
    let min_diam = RESOLUTION * (hi[0] - lo[0]).hypot(hi[1] - lo[1]);
    fn recurse(tri: [Point2; 3], d: [f64; 3], t: f64, min_diam: f64, dist: &dyn Fn(Point2) -> f64) -> f64 {
        let [a, b, c] = tri;
        let area = 0.5 * (b - a).cross(c - a);
        let diam = a.dist(b).max(b.dist(c)).max(c.dist(a));
        let dmin = d.iter().copied().fold(f64::INFINITY, f64::min);
        let dmax = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if dmax - diam > t {
            return area;
        }
        if dmin + diam <= t {
            return 0.0;
        }
        if diam <= min_diam {
            let g = Point2::new((a.x + b.x + c.x) / 3.0, (a.y + b.y + c.y) / 3.0);
            return if dist(g) > t { area } else { 0.0 };
        }
        let (ab, bc, ca) = (a.lerp(b, 0.5), b.lerp(c, 0.5), c.lerp(a, 0.5));
        let (dab, dbc, dca) = (dist(ab), dist(bc), dist(ca));
        recurse([a, ab, ca], [d[0], dab, dca], t, min_diam, dist)
            + recurse([ab, b, bc], [dab, d[1], dbc], t, min_diam, dist)
            + recurse([ca, bc, c], [dca, dbc, d[2]], t, min_diam, dist)
            + recurse([ab, bc, ca], [dab, dbc, dca], t, min_diam, dist)
    }
    mesh.selected_triangles(RegionSel::Defect)
        .map(|t| {
            let tri = mesh.triangle_points(t);
            let d = [dist(tri[0]), dist(tri[1]), dist(tri[2])];
            recurse(tri, d, threshold, min_diam, &dist)
        })
        .sum()
}

/// |D_t| = |{x ∈ D : dist(x, ∂D) > t}|, the quantity in the fatness condition.
pub fn fatness_measure(mesh: &Mesh, threshold: f64) -> f64 {
    envelope_area(mesh, threshold, BoundaryTag::Defect)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_plate_mesh;

    fn centered_square(side: f64) -> DefectShape {
        DefectShape::Rectangle { center: Point2::new(0.5, 0.5), a: side, b: side }
    }

    #[test]
    fn diameters_and_ratios() {
        let r = DefectShape::Rectangle { center: Point2::new(0.5, 0.5), a: 0.2, b: 0.1 };
        assert!((r.diameter() - 0.05f64.sqrt()).abs() < 1e-15);
        let d = DefectShape::Disc { center: Point2::default(), radius: 0.3 };
        let g = defect_parameters(&d, &DomainSpec::disc(1.0), 0.2).unwrap();
        assert!((g.diam - 0.6).abs() < 1e-15);
        assert!((g.q_d - 2.0 * SQRT_2).abs() < 1e-12);
        assert!(g.sifc_holds(g.q_d));
    }

    #[test]
    fn polygon_requires_constants() {
        let p = DefectShape::Polygon {
            vertices: vec![Point2::new(0.4, 0.4), Point2::new(0.6, 0.4), Point2::new(0.5, 0.6)],
            r_d: None,
            l_d: None,
        };
        assert!(matches!(
            defect_parameters(&p, &DomainSpec::unit_square(), 0.1),
            Err(Error::UnsupportedShape(_))
        ));
    }

    #[test]
    fn distance_to_outer_boundary() {
        let g = defect_parameters(&centered_square(0.2), &DomainSpec::unit_square(), 0.2).unwrap();
        assert!((g.dist_to_outer - 0.4).abs() < 1e-15);
        assert!(g.distance_holds(1.0));
        let near = DefectShape::Rectangle { center: Point2::new(0.15, 0.5), a: 0.2, b: 0.2 };
        let g = defect_parameters(&near, &DomainSpec::unit_square(), 0.2).unwrap();
        assert!((g.dist_to_outer - 0.05).abs() < 1e-15);
        assert!(!g.distance_holds(1.0));
    }

    #[test]
    fn envelope_measured_from_outer_boundary() {
        let m = build_plate_mesh(&DomainSpec::unit_square(), Some(&centered_square(0.2)), 0.05).unwrap();
        assert!((envelope_area(&m, 0.3, BoundaryTag::Outer) - 0.04).abs() < 1e-12);
        assert!((envelope_area(&m, 0.0, BoundaryTag::Outer) - 0.04).abs() < 1e-12);
        assert!((envelope_area(&m, 0.45, BoundaryTag::Outer) - 0.01).abs() < 1e-12);
    }

    #[test]
    fn fatness_uses_distance_to_defect_boundary() {
        let m = build_plate_mesh(&DomainSpec::unit_square(), Some(&centered_square(0.2)), 0.05).unwrap();
        assert!((fatness_measure(&m, 0.0) - 0.04).abs() < 1e-12);
        // D_t = [0.4 + t, 0.6 - t]²
        for &t in &[0.025, 0.05, 0.0137] {
            let expect = (0.2 - 2.0 * t) * (0.2 - 2.0 * t);
            let got = fatness_measure(&m, t);
            assert!((got - expect).abs() < 2e-4 * 0.04, "t={t}: {got} vs {expect}");
        }
        assert_eq!(fatness_measure(&m, 0.2), 0.0);
    }
}
