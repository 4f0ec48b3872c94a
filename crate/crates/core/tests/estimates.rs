use mindlin_size::estimates::{calibrate, lower_bound, phi, psi, upper_bound, CalibrationPoint, SizeEstimateReport};
use mindlin_size::estimates::{Flag, HypothesisFlags};
use mindlin_size::solvers::ProblemKind;
use proptest::prelude::*;

fn flags() -> HypothesisFlags {
    let f = Flag { pass: true, margin: 0.0 };
    HypothesisFlags { fatness: f, sifc: f, distance: f, frequency: f }
}

#[test]
fn profile_values() {
    assert_eq!(psi(1.0).unwrap(), 0.5);
    assert_eq!(psi(3.0).unwrap(), 2.25);
    assert_eq!(phi(0.5).unwrap(), 0.5);
    assert!(phi(1.0).is_err());
    assert!(phi(1.5).is_err());
    assert!(lower_bound(1.0, 1.0, 1.0, ProblemKind::Rigid).is_err());
    assert!(lower_bound(0.5, 1.0, 1.0, ProblemKind::Reference).is_err());
}

#[test]
fn empty_and_mixed_families_are_rejected() {
    assert!(calibrate(&[], 0.1).is_err());
    let pts = [
        CalibrationPoint { area: 0.1, t: 0.2, kind: ProblemKind::Cavity },
        CalibrationPoint { area: 0.1, t: 0.2, kind: ProblemKind::Rigid },
    ];
    assert!(calibrate(&pts, 0.1).is_err());
}

fn family() -> impl Strategy<Value = (bool, Vec<(f64, f64)>)> {
    (any::<bool>(), prop::collection::vec((1e-3f64..1.0, 1e-3f64..0.95), 1..8))
}

proptest! {
    #[test]
    fn psi_and_phi_are_increasing(a in 0.0f64..0.99, b in 0.0f64..0.99) {
        prop_assume!(a < b);
        prop_assert!(psi(a).unwrap() < psi(b).unwrap());
        prop_assert!(phi(a).unwrap() < phi(b).unwrap());
        prop_assert!(psi(a).unwrap() <= a * a && phi(a).unwrap() >= a * a);
    }

    #[test]
    fn calibration_brackets_every_member((rigid, pts) in family(), rho0 in 0.05f64..2.0) {
        let kind = if rigid { ProblemKind::Rigid } else { ProblemKind::Cavity };
        let points: Vec<CalibrationPoint> = pts.iter().map(|&(area, t)| CalibrationPoint { area, t, kind }).collect();
        let cal = calibrate(&points, rho0).unwrap();
        for p in &points {
            let r = SizeEstimateReport::new("m".into(), p, &cal, rho0, 1.0, flags()).unwrap();
            prop_assert!(r.bracketed(), "{} not in [{}, {}]", p.area, r.lower, r.upper);
            prop_assert!((r.upper - upper_bound(p.t, cal.upper, rho0)).abs() <= 1e-15 * r.upper);
        }
        // the extreme members attain the bounds
        let hits_upper = points.iter().any(|p| (upper_bound(p.t, cal.upper, rho0) - p.area).abs() <= 1e-12 * p.area);
        let hits_lower = points.iter().any(|p| (lower_bound(p.t, cal.lower, rho0, kind).unwrap() - p.area).abs() <= 1e-12 * p.area);
        prop_assert!(hits_upper && hits_lower);
    }
}
