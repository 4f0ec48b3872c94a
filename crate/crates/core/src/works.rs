//! Works of the boundary loads, energy integrals and the normalized work gap.

use serde::{Deserialize, Serialize};

use crate::assembly::{BoundaryLoad, PlateModel};
use crate::error::{Error, Result};
use crate::geometry::{BoundaryTag, RegionSel};
use crate::material::sym;
use crate::solvers::{PlateSolution, ProblemKind, Reactions};

/// ∫_{∂Ω} Q̄w + M̄·φ by exact edge integration.
pub fn work_boundary(model: &PlateModel, solution: &PlateSolution, load: &BoundaryLoad) -> Result<f64> {
    let mesh = model.mesh();
    let n_outer = mesh.edges_tagged(BoundaryTag::Outer).count();
    if load.edges.len() != n_outer {
        return Err(Error::LoadMismatch(format!("{} edge loads for {n_outer} outer edges", load.edges.len())));
    }
    let u = &solution.values;
    let mut w = 0.0;
    for (e, el) in mesh.edges_tagged(BoundaryTag::Outer).zip(&load.edges) {
        let [a, b] = e.nodes;
        let len = mesh.nodes()[a].dist(mesh.nodes()[b]);
        let pair = |f: [f64; 2], g: [f64; 2]| len * (2.0 * f[0] * g[0] + f[0] * g[1] + f[1] * g[0] + 2.0 * f[1] * g[1]) / 6.0;
        w += pair(el.q, [u[3 * a + 2], u[3 * b + 2]]);
        w += pair([el.m[0][0], el.m[1][0]], [u[3 * a], u[3 * b]]);
        w += pair([el.m[0][1], el.m[1][1]], [u[3 * a + 1], u[3 * b + 1]]);
    }
    Ok(w)
}

/// ∫_R ℙ∇φ·∇φ + S|φ + ∇w|² with the assembly quadrature.
pub fn work_energy(model: &PlateModel, solution: &PlateSolution, region: RegionSel) -> Result<f64> {
    let mesh = model.mesh();
    for t in mesh.selected_triangles(region) {
        if mesh.triangles()[t].iter().any(|&n| !solution.active[n]) {
            return Err(Error::Domain(format!("region {region:?} extends outside the solution support")));
        }
    }
    Ok(model.energy(region, &solution.values))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkReport {
    pub kind: ProblemKind,
    pub w_boundary: f64,
    pub w_energy: f64,
    pub duality_gap: f64,
}

pub fn work_report(model: &PlateModel, solution: &PlateSolution, load: &BoundaryLoad) -> Result<WorkReport> {
    let region = match solution.kind {
        ProblemKind::Cavity => RegionSel::Exterior,
        ProblemKind::Reference | ProblemKind::Rigid => RegionSel::All,
        ProblemKind::DirichletExtension => RegionSel::Defect,
    };
    let wb = work_boundary(model, solution, load)?;
    let we = work_energy(model, solution, region)?;
    let m = wb.abs().max(we.abs());
    let gap = if m > 0.0 { (wb - we).abs() / m } else { 0.0 };
    Ok(WorkReport { kind: solution.kind, w_boundary: wb, w_energy: we, duality_gap: gap })
}

/// Energy-form works of a reference and a defected solve and the normalized gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub kind: ProblemKind,
    pub w0: f64,
    pub wdef: f64,
    pub delta_w: f64,
    pub t: f64,
}

impl GapReport {
    /// δW = W_c − W₀ for cavities and W₀ − W_r for rigid inclusions.
    pub fn new(kind: ProblemKind, w0: f64, wdef: f64) -> Result<Self> {
        let delta_w = match kind {
            ProblemKind::Cavity => wdef - w0,
            ProblemKind::Rigid => w0 - wdef,
            k => return Err(Error::Domain(format!("no work gap for {k:?}"))),
        };
        let t = if w0 > 0.0 { delta_w / w0 } else { 0.0 };
        Ok(GapReport { kind, w0, wdef, delta_w, t })
    }
}

/// E = (|∇̂φ|² + ρ₀⁻²|φ + ∇w|²)^{1/2} per triangle, evaluated at the centroid.
pub fn energy_density_field(model: &PlateModel, solution: &PlateSolution, rho0: f64) -> Vec<f64> {
    let mesh = model.mesh();
    (0..mesh.n_triangles())
        .map(|t| {
            if mesh.triangles()[t].iter().any(|&n| !solution.active[n]) {
                return 0.0;
            }
            let geo = model.element_geometry(t);
            let u = model.gather(&solution.values, t);
            let s = sym(geo.grad_phi(&u));
            let g = geo.shear_strain(&u, [1.0 / 3.0; 3]);
            let bend = s[0][0] * s[0][0] + 2.0 * s[0][1] * s[0][1] + s[1][1] * s[1][1];
            (bend + (g[0] * g[0] + g[1] * g[1]) / (rho0 * rho0)).sqrt()
        })
        .collect()
}

/// a_D(ũ_c, u₀): the bilinear energy over D between the extended cavity field and
/// the reference field.
pub fn cross_energy_cavity(model: &PlateModel, reference: &PlateSolution, extended_cavity: &[f64]) -> f64 {
    model.bilinear(RegionSel::Defect, extended_cavity, &reference.values)
}

/// ∫_∂D (ℙ∇φ_r)n·φ₀ + (S(φ_r + ∇w_r)·n) w₀ from the recovered tractions.
pub fn lemma61_boundary_term(model: &PlateModel, reference: &PlateSolution, reactions: &Reactions) -> f64 {
    reactions.pair(model.mesh(), &reference.values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::ShearRule;
    use crate::geometry::{build_plate_mesh, DomainSpec};
    use crate::material::PlateMaterial;
    use crate::solvers::{Gauge, RigidTriple};

    #[test]
    fn rigid_field_has_no_energy() {
        let mesh = build_plate_mesh(&DomainSpec::unit_square(), None, 0.25).unwrap();
        let model = PlateModel::new(mesh.clone(), PlateMaterial::uniform(1.0, 1.0, 0.1), ShearRule::Reduced).unwrap();
        let z = RigidTriple { a: 0.3, b: [1.0, -2.0] };
        let sol = PlateSolution {
            kind: ProblemKind::Reference,
            values: z.interpolate(&mesh),
            active: vec![true; mesh.n_nodes()],
            gauge: Gauge::Trace,
            residual: 0.0,
            multipliers: None,
            iterations: 0,
        };
        assert!(work_energy(&model, &sol, RegionSel::All).unwrap().abs() < 1e-14);
        assert!(energy_density_field(&model, &sol, 1.0).iter().all(|e| e.abs() < 1e-7));
    }

    #[test]
    fn gap_domains() {
        let c = GapReport::new(ProblemKind::Cavity, 2.0, 2.5).unwrap();
        assert_eq!((c.delta_w, c.t), (0.5, 0.25));
        let r = GapReport::new(ProblemKind::Rigid, 2.0, 1.5).unwrap();
        assert_eq!((r.delta_w, r.t), (0.5, 0.25));
        assert!(GapReport::new(ProblemKind::Reference, 1.0, 1.0).is_err());
    }
}
