use serde::{Deserialize, Serialize};

use crate::assembly::PlateModel;
use crate::error::{Error, Result};
use crate::geometry::{disc_triangle_overlap, BoundaryTag, Point2};
use crate::solvers::PlateSolution;
use crate::works::energy_density_field;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpsResult {
    pub min_ratio: f64,
    /// (center, ratio) for every admissible center, in input order.
    pub ratios: Vec<(Point2, f64)>,
    pub admissible: usize,
    pub rejected: usize,
}

/// ∫_{B_r(c)} E² / ∫_Ω E² with E constant per triangle and exact disc clipping.
pub fn disc_energy_ratio(model: &PlateModel, solution: &PlateSolution, rho0: f64, center: Point2, radius: f64) -> f64 {
    let e = energy_density_field(model, solution, rho0);
    ratio_from_density(model, &e, center, radius)
}

fn ratio_from_density(model: &PlateModel, e: &[f64], center: Point2, radius: f64) -> f64 {
    let mesh = model.mesh();
    let (mut local, mut total) = (0.0, 0.0);
    for (t, &et) in e.iter().enumerate() {
        let e2 = et * et;
        if e2 == 0.0 {
            continue;
        }
        total += e2 * mesh.triangle_area(t);
        local += e2 * disc_triangle_overlap(center, radius, mesh.triangle_points(t));
    }
    if total > 0.0 {
        local / total
    } else {
        0.0
    }
}

/// Minimum disc ratio over the centers with dist(x, ∂Ω) > 7ρ/(2θ̂).
pub fn lps_probe(
    model: &PlateModel,
    reference: &PlateSolution,
    rho0: f64,
    rho: f64,
    centers: &[Point2],
    theta: f64,
) -> Result<LpsResult> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("aperture must lie in (0, 1), got {theta}")));
    }
    let mesh = model.mesh();
    let depth = 3.5 * rho / theta;
    let e = energy_density_field(model, reference, rho0);
    let mut ratios = Vec::new();
    let mut rejected = 0;
    for &c in centers {
        if mesh.distance_to_boundary(c, BoundaryTag::Outer) > depth {
            ratios.push((c, ratio_from_density(model, &e, c, rho)));
        } else {
            rejected += 1;
        }
    }
    if ratios.is_empty() {
        return Err(Error::Domain("no admissible LPS center".into()));
    }
    let min_ratio = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(LpsResult { min_ratio, admissible: ratios.len(), ratios, rejected })
}
