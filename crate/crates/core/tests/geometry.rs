use std::f64::consts::{FRAC_PI_4, PI};

use mindlin_size::geometry::{
    build_plate_mesh, defect_parameters, export_mesh, import_mesh, BoundaryTag, DefectShape, DomainSpec, Point2,
    RegionSel,
};
use proptest::prelude::*;

/// Checks the local-graph condition at `p` in the frame whose x₂ axis is `normal`:
/// inside R_{r,Lr} the set is {x₂ > ψ(x₁)} with ψ(0) = 0 and sup|ψ| + r·Lip(ψ) ≤ Lr.
fn graph_condition(inside: &dyn Fn(Point2) -> bool, p: Point2, normal: f64, r: f64, l: f64) -> bool {
    let (n, t) = (Point2::new(normal.cos(), normal.sin()), Point2::new(normal.sin(), -normal.cos()));
    let to_world = |x1: f64, x2: f64| Point2::new(p.x + x1 * t.x + x2 * n.x, p.y + x1 * t.y + x2 * n.y);
    let (nx, ny) = (81, 400);
    let mut psi = Vec::with_capacity(nx);
    for i in 0..nx {
        let x1 = -r + 2.0 * r * (i as f64 + 0.5) / nx as f64;
        let col: Vec<bool> = (0..ny).map(|j| inside(to_world(x1, -l * r + 2.0 * l * r * (j as f64 + 0.5) / ny as f64))).collect();
        // exactly one switch from outside to inside along the column
        let switches = col.windows(2).filter(|w| w[0] != w[1]).count();
        if switches > 1 || (switches == 1 && col[0]) {
            return false;
        }
        let k = col.iter().position(|&b| b).unwrap_or(ny);
        psi.push((x1, -l * r + 2.0 * l * r * k as f64 / ny as f64));
    }
    let dy = 2.0 * l * r / ny as f64;
    let sup = psi.iter().map(|q| q.1.abs()).fold(0.0, f64::max);
    let lip = psi
        .windows(2)
        .map(|w| ((w[1].1 - w[0].1).abs() - dy).max(0.0) / (w[1].0 - w[0].0))
        .fold(0.0, f64::max);
    sup + r * lip <= l * r * (1.0 + 1e-9) + 2.0 * dy
}

#[test]
fn disc_table_satisfies_graph_condition() {
    let (c, rad) = (Point2::new(0.5, 0.5), 0.2);
    let (r, l) = DefectShape::Disc { center: c, radius: rad }.lipschitz_constants().unwrap();
    let inside = |x: Point2| x.dist(c) < rad;
    for k in 0..24 {
        let a = 2.0 * PI * k as f64 / 24.0;
        let p = Point2::new(c.x + rad * a.cos(), c.y + rad * a.sin());
        assert!(graph_condition(&inside, p, a + PI, r, l), "angle {a}");
    }
}

#[test]
fn rectangle_table_satisfies_graph_condition() {
    let (c, a, b) = (Point2::new(0.5, 0.5), 0.4, 0.24);
    let (r, l) = DefectShape::Rectangle { center: c, a, b }.lipschitz_constants().unwrap();
    let inside = |x: Point2| (x.x - c.x).abs() < a / 2.0 && (x.y - c.y).abs() < b / 2.0;
    let corners = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];
    for (i, &(sx, sy)) in corners.iter().enumerate() {
        let (tx, ty) = corners[(i + 1) % 4];
        let p0 = Point2::new(c.x + sx * a / 2.0, c.y + sy * b / 2.0);
        let p1 = Point2::new(c.x + tx * a / 2.0, c.y + ty * b / 2.0);
        let edge_normal = (p1 - p0).y.atan2((p1 - p0).x) + PI / 2.0;
        for k in 0..=40 {
            let p = p0.lerp(p1, k as f64 / 40.0);
            // some frame among the edge normal and the two corner bisectors works
            let ok = [edge_normal, edge_normal - FRAC_PI_4, edge_normal + FRAC_PI_4]
                .iter()
                .any(|&nrm| graph_condition(&inside, p, nrm, r, l));
            assert!(ok, "no admissible frame at {p:?}");
        }
    }
}

#[test]
fn half_side_radius_fails_at_corners() {
    let (c, a) = (Point2::new(0.5, 0.5), 0.4);
    let inside = |x: Point2| (x.x - c.x).abs() < a / 2.0 && (x.y - c.y).abs() < a / 2.0;
    let corner = Point2::new(c.x - a / 2.0, c.y - a / 2.0);
    let ok = [0.0, FRAC_PI_4, PI / 2.0].iter().any(|&nrm| graph_condition(&inside, corner, nrm, a / 2.0, 1.0));
    assert!(!ok);
}

#[test]
fn defect_parameters_of_ladder() {
    let domain = DomainSpec::unit_square();
    for s in [0.2, 0.4, 0.6] {
        let g = defect_parameters(&DefectShape::Rectangle { center: Point2::new(0.5, 0.5), a: s, b: s }, &domain, 0.1).unwrap();
        assert!((g.q_d - 4.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((g.dist_to_outer - (0.5 - s / 2.0)).abs() < 1e-12);
    }
}

#[test]
fn annulus_export_import_round_trip() {
    let m = build_plate_mesh(&DomainSpec::disc(1.0), Some(&DefectShape::Disc { center: Point2::new(0.0, 0.0), radius: 0.3 }), 0.2)
        .unwrap();
    let back = import_mesh(&export_mesh(&m)).unwrap();
    assert_eq!(back.nodes(), m.nodes());
    assert_eq!(back.triangles(), m.triangles());
    assert_eq!(back.regions(), m.regions());
    assert_eq!(back.boundary_length(BoundaryTag::Defect), m.boundary_length(BoundaryTag::Defect));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_preserves_regions(side in 0.15f64..0.7, cx in 0.4f64..0.6, h in 0.06f64..0.15) {
        prop_assume!(cx - side / 2.0 > 0.02 && cx + side / 2.0 < 0.98 && h <= side);
        let d = DefectShape::Rectangle { center: Point2::new(cx, 0.5), a: side, b: side };
        let m = build_plate_mesh(&DomainSpec::unit_square(), Some(&d), h).unwrap();
        let r = m.refine();
        prop_assert_eq!(r.n_triangles(), 4 * m.n_triangles());
        prop_assert!((r.area(RegionSel::Defect) - side * side).abs() < 1e-12);
        prop_assert!((r.area(RegionSel::All) - 1.0).abs() < 1e-12);
        prop_assert!((r.boundary_length(BoundaryTag::Defect) - 4.0 * side).abs() < 1e-12);
        prop_assert!(r.characteristic_size() <= m.characteristic_size() / 2.0 + 1e-12);
        prop_assert!(r.is_connected(RegionSel::Exterior));
    }

    #[test]
    fn round_trip_is_exact(h in 0.08f64..0.3) {
        let m = build_plate_mesh(&DomainSpec::unit_square(), None, h).unwrap();
        let back = import_mesh(&export_mesh(&m)).unwrap();
        prop_assert_eq!(back.nodes(), m.nodes());
        prop_assert_eq!(back.boundary_edges(), m.boundary_edges());
    }
}
