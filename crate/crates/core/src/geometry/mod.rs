//! Plane geometry, triangulations of the plate mid-plane and defect descriptors.

mod build;
mod defect;
mod io;
mod mesh;

pub use build::{build_plate_mesh, DomainShape, DomainSpec};
pub use defect::{defect_parameters, envelope_area, fatness_measure, DefectGeometry, DefectShape};
pub use io::{export_mesh, import_mesh};
pub use mesh::{BoundaryEdge, BoundaryTag, Mesh, Region, RegionSel};

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the planar cross product.
    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dist(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Self, s: f64) -> Self {
        self + (other - self) * s
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(p: [f64; 2]) -> Self {
        Self::new(p[0], p[1])
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

impl Add for Point2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

/// Twice the signed area of the triangle (a, b, c); positive when counterclockwise.
pub fn signed_area2(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

pub fn triangle_area(a: Point2, b: Point2, c: Point2) -> f64 {
    0.5 * signed_area2(a, b, c)
}

/// Euclidean distance from `p` to the closed segment [a, b].
pub fn point_segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.dist(a);
    }
    let s = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.dist(a + ab * s)
}

/// Shoelace area, positive for counterclockwise vertex order.
pub fn polygon_area(poly: &[Point2]) -> f64 {
    let n = poly.len();
    (0..n).map(|i| poly[i].cross(poly[(i + 1) % n])).sum::<f64>() * 0.5
}

/// Even-odd point-in-polygon test.
pub fn point_in_polygon(p: Point2, poly: &[Point2]) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Minimum distance between the boundaries of two closed polygons that do not intersect.
pub fn polygon_boundary_distance(a: &[Point2], b: &[Point2]) -> f64 {
    let mut best = f64::INFINITY;
    for (p, q) in [(a, b), (b, a)] {
        for &v in p {
            for j in 0..q.len() {
                best = best.min(point_segment_distance(v, q[j], q[(j + 1) % q.len()]));
            }
        }
    }
    best
}

/// Area of the intersection of the open disc B_r(c) with the triangle `tri`.
///
/// Sums the signed overlap of the disc with the fans (c, p_i, p_{i+1}); each fan
/// piece splits into straight triangular parts and circular sectors.
pub fn disc_triangle_overlap(c: Point2, r: f64, tri: [Point2; 3]) -> f64 {
    let mut total = 0.0;
    for i in 0..3 {
        total += fan_overlap(tri[i] - c, tri[(i + 1) % 3] - c, r);
    }
    total.abs()
}

// Signed area of B_r(0) ∩ triangle(0, a, b).
fn fan_overlap(a: Point2, b: Point2, r: f64) -> f64 {
    let cross = a.cross(b);
    if cross.abs() < 1e-300 {
        return 0.0;
    }
    let d = b - a;
    let aa = d.dot(d);
    let bb = a.dot(d);
    let cc = a.dot(a) - r * r;
    let disc = bb * bb - aa * cc;
    let sector = |u: Point2, v: Point2| 0.5 * r * r * u.cross(v).atan2(u.dot(v));
    let inside_a = a.dot(a) <= r * r;
    let inside_b = b.dot(b) <= r * r;
    if inside_a && inside_b {
        return 0.5 * cross;
    }
    if disc <= 0.0 {
        return sector(a, b);
    }
    let sq = disc.sqrt();
    let s1 = (-bb - sq) / aa;
    let s2 = (-bb + sq) / aa;
    if inside_a {
        let q = a + d * s2;
        return 0.5 * a.cross(q) + sector(q, b);
    }
    if inside_b {
        let p = a + d * s1;
        return sector(a, p) + 0.5 * p.cross(b);
    }
    // both endpoints outside: the chord is either inside (0, 1) or misses the segment
    if s1 >= 1.0 || s2 <= 0.0 {
        return sector(a, b);
    }
    let p = a + d * s1;
    let q = a + d * s2;
    sector(a, p) + 0.5 * p.cross(q) + sector(q, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn segment_distance_cases() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(1.0, 0.0);
        assert_eq!(point_segment_distance(Point2::new(0.5, 2.0), a, b), 2.0);
        assert_eq!(point_segment_distance(Point2::new(-3.0, 4.0), a, b), 5.0);
        assert_eq!(point_segment_distance(Point2::new(0.3, 0.0), a, b), 0.0);
    }

    #[test]
    fn disc_overlap_full_and_partial() {
        let tri = [Point2::new(-10.0, -10.0), Point2::new(10.0, -10.0), Point2::new(0.0, 10.0)];
        let a = disc_triangle_overlap(Point2::new(0.0, 0.0), 1.0, tri);
        assert!((a - PI).abs() < 1e-12);
        // tiny triangle fully inside the disc
        let small = [Point2::new(0.0, 0.0), Point2::new(0.1, 0.0), Point2::new(0.0, 0.1)];
        assert!((disc_triangle_overlap(Point2::new(0.0, 0.0), 1.0, small) - 0.005).abs() < 1e-15);
        // quarter disc: unit square corner at center
        let sq1 = [Point2::new(0.0, 0.0), Point2::new(2.0, 0.0), Point2::new(2.0, 2.0)];
        let sq2 = [Point2::new(0.0, 0.0), Point2::new(2.0, 2.0), Point2::new(0.0, 2.0)];
        let q = disc_triangle_overlap(Point2::new(0.0, 0.0), 1.0, sq1)
            + disc_triangle_overlap(Point2::new(0.0, 0.0), 1.0, sq2);
        assert!((q - PI / 4.0).abs() < 1e-12);
        // half plane cut through the middle of the disc
        let h1 = [Point2::new(-5.0, 0.0), Point2::new(5.0, 0.0), Point2::new(5.0, 5.0)];
        let h2 = [Point2::new(-5.0, 0.0), Point2::new(5.0, 5.0), Point2::new(-5.0, 5.0)];
        let c = Point2::new(0.0, 0.0);
        let half = disc_triangle_overlap(c, 1.0, h1) + disc_triangle_overlap(c, 1.0, h2);
        assert!((half - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn disc_overlap_chord_through_edge() {
        // strip y ∈ [0.5, 5] cut from the unit disc: segment area r²acos(d) - d√(1-d²)
        let c = Point2::new(0.0, 0.0);
        let t1 = [Point2::new(-5.0, 0.5), Point2::new(5.0, 0.5), Point2::new(5.0, 5.0)];
        let t2 = [Point2::new(-5.0, 0.5), Point2::new(5.0, 5.0), Point2::new(-5.0, 5.0)];
        let got = disc_triangle_overlap(c, 1.0, t1) + disc_triangle_overlap(c, 1.0, t2);
        let d: f64 = 0.5;
        let expect = d.acos() - d * (1.0 - d * d).sqrt();
        assert!((got - expect).abs() < 1e-12, "{got} vs {expect}");
    }
}
