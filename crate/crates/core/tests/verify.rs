use std::f64::consts::PI;

use approx::assert_relative_eq;
use mindlin_size::assembly::{PlateModel, ShearRule};
use mindlin_size::geometry::{build_plate_mesh, DefectShape, DomainSpec, Mesh, Point2};
use mindlin_size::material::PlateMaterial;
use mindlin_size::solvers::{Gauge, PlateSolution, ProblemKind, RigidTriple};
use mindlin_size::verify::{
    disc_energy_ratio, error_orders, estimate_inequality_constant, lps_probe, observed_orders, richardson,
    ConstantName,
};
use nalgebra::{DMatrix, SymmetricEigen};

fn square(h: f64) -> Mesh {
    build_plate_mesh(&DomainSpec::unit_square(), None, h).unwrap()
}

/// First nonzero Neumann eigenvalue of −u'' on [0, 1] with P1 elements on `n` cells.
fn neumann_1d(n: usize) -> f64 {
    let h = 1.0 / n as f64;
    let (mut k, mut m) = (DMatrix::<f64>::zeros(n + 1, n + 1), DMatrix::<f64>::zeros(n + 1, n + 1));
    for e in 0..n {
        for (i, j, kv, mv) in [(e, e, 1.0, 2.0), (e + 1, e + 1, 1.0, 2.0), (e, e + 1, -1.0, 1.0), (e + 1, e, -1.0, 1.0)] {
            k[(i, j)] += kv / h;
            m[(i, j)] += mv * h / 6.0;
        }
    }
    let l = m.cholesky().unwrap().l();
    let li = l.try_inverse().unwrap();
    let c = &li * k * li.transpose();
    let mut ev: Vec<f64> = SymmetricEigen::new(0.5 * (&c + c.transpose())).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev[1]
}

#[test]
fn poincare_square_matches_separable_oracle() {
    // the square's first Neumann mode is the 1D mode in one variable
    let lam = neumann_1d(400);
    assert_relative_eq!(lam, PI * PI, max_relative = 1e-4);
    let c1 = estimate_inequality_constant(ConstantName::PoincareC1, &square(0.05), 1.0, ShearRule::Reduced, 0).unwrap();
    assert_relative_eq!(c1.value, 1.0 / lam, max_relative = 0.02);
    // conforming eigenvalues lie above the exact ones, so the constant lies below
    assert!(c1.value <= 1.0 / (PI * PI) * (1.0 + 1e-9), "{}", c1.value);
}

#[test]
fn poincare_scales_with_rho() {
    let m = square(0.1);
    let a = estimate_inequality_constant(ConstantName::PoincareC1, &m, 1.0, ShearRule::Reduced, 0).unwrap();
    let b = estimate_inequality_constant(ConstantName::PoincareC1, &m, 0.5, ShearRule::Reduced, 0).unwrap();
    assert_relative_eq!(b.value, 4.0 * a.value, max_relative = 1e-6);
}

#[test]
fn korn2_is_at_least_one_and_grows() {
    let coarse = square(0.1);
    let fine = coarse.refine();
    let a = estimate_inequality_constant(ConstantName::Korn2, &coarse, 1.0, ShearRule::Reduced, 0).unwrap();
    let b = estimate_inequality_constant(ConstantName::Korn2, &fine, 1.0, ShearRule::Reduced, 1).unwrap();
    assert!(a.value >= 1.0 && b.value >= a.value * (1.0 - 1e-8), "{} then {}", a.value, b.value);
}

#[test]
fn trace_poincare_needs_a_defect() {
    assert!(estimate_inequality_constant(ConstantName::TracePoincareC3, &square(0.2), 1.0, ShearRule::Reduced, 0).is_err());
    let d = DefectShape::Disc { center: Point2::new(0.0, 0.0), radius: 0.3 };
    let ann = build_plate_mesh(&DomainSpec::disc(1.0), Some(&d), 0.1).unwrap();
    let c3 = estimate_inequality_constant(ConstantName::TracePoincareC3, &ann, 0.1, ShearRule::Reduced, 0).unwrap();
    assert!(c3.value.is_finite() && c3.value > 0.0);
}

/// φ = 0, w = g·x: no bending, constant shear, hence constant E.
fn linear_w(mesh: &Mesh, g: [f64; 2]) -> PlateSolution {
    let mut values = vec![0.0; 3 * mesh.n_nodes()];
    for (n, p) in mesh.nodes().iter().enumerate() {
        values[3 * n + 2] = g[0] * p.x + g[1] * p.y;
    }
    PlateSolution {
        kind: ProblemKind::Reference,
        values,
        active: vec![true; mesh.n_nodes()],
        gauge: Gauge::IntegralMeans { region: mindlin_size::geometry::RegionSel::All, removed: RigidTriple::default() },
        residual: 0.0,
        multipliers: None,
        iterations: 0,
    }
}

#[test]
fn constant_density_ratio_is_an_area_ratio() {
    let mesh = square(0.1);
    let model = PlateModel::new(mesh.clone(), PlateMaterial::uniform(1.0, 1.0, 0.1), ShearRule::Reduced).unwrap();
    let sol = linear_w(&mesh, [0.3, -0.7]);
    let r = 0.15;
    let ratio = disc_energy_ratio(&model, &sol, 0.1, Point2::new(0.5, 0.5), r);
    assert_relative_eq!(ratio, PI * r * r, max_relative = 1e-12);
    // a disc at a corner keeps a quarter
    let corner = disc_energy_ratio(&model, &sol, 0.1, Point2::new(0.0, 0.0), r);
    assert_relative_eq!(corner, PI * r * r / 4.0, max_relative = 1e-12);
    assert_relative_eq!(disc_energy_ratio(&model, &sol, 0.1, Point2::new(0.5, 0.5), 2.0), 1.0, max_relative = 1e-12);
}

#[test]
fn lps_probe_admissibility() {
    let mesh = square(0.1);
    let model = PlateModel::new(mesh.clone(), PlateMaterial::uniform(1.0, 1.0, 0.1), ShearRule::Reduced).unwrap();
    let sol = linear_w(&mesh, [1.0, 0.0]);
    let centers = [Point2::new(0.5, 0.5), Point2::new(0.1, 0.5), Point2::new(0.45, 0.55)];
    let res = lps_probe(&model, &sol, 0.1, 0.05, &centers, 0.5).unwrap();
    assert_eq!((res.admissible, res.rejected), (2, 1));
    assert_relative_eq!(res.min_ratio, PI * 0.05 * 0.05, max_relative = 1e-12);
    assert!(lps_probe(&model, &sol, 0.1, 0.05, &centers, 1.0).is_err());
    assert!(lps_probe(&model, &sol, 0.1, 0.05, &[Point2::new(0.05, 0.05)], 0.5).is_err());
}

#[test]
fn orders_of_synthetic_sequences() {
    let h = [0.1, 0.05, 0.025, 0.0125];
    let v: Vec<f64> = h.iter().map(|x| 2.0 + 3.0 * x * x).collect();
    for o in observed_orders(&v, &h) {
        assert_relative_eq!(o, 2.0, max_relative = 1e-9);
    }
    for o in error_orders(&v, 2.0, &h) {
        assert_relative_eq!(o, 2.0, max_relative = 1e-9);
    }
    assert_relative_eq!(richardson(&v, &h).unwrap(), 2.0, max_relative = 1e-9);
    assert!(richardson(&v[..2], &h[..2]).is_none());
}
