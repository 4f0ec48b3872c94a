//! Executable checks of the energy identities, balance laws and inequalities.

mod constants;
mod convergence;
mod lps;

use serde::{Deserialize, Serialize};

pub use constants::{estimate_inequality_constant, ConstantEstimate, ConstantName};
pub use convergence::{error_orders, observed_orders, richardson, ConvergenceColumn, ConvergenceTable};
pub use lps::{disc_energy_ratio, lps_probe, LpsResult};

use crate::assembly::PlateModel;
use crate::geometry::{Mesh, RegionSel};
use crate::solvers::{extended_field, PlateSolution, Reactions, RigidTriple};
use crate::works::cross_energy_cavity;

/// One named comparison. `vacuous` checks hold trivially and never fail a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
    pub vacuous: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        let margin = bound - value;
        Check { name: name.into(), value, bound, margin: finite(margin), pass: value <= bound, vacuous: false }
    }

    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        let margin = value - bound;
        Check { name: name.into(), value, bound, margin: finite(margin), pass: value >= bound, vacuous: false }
    }

    /// A stage that could not produce its value.
    pub fn failure(name: impl Into<String>) -> Self {
        Check { name: name.into(), value: 1.0, bound: 0.0, margin: -1.0, pass: false, vacuous: false }
    }

    pub fn vacuous(name: impl Into<String>) -> Self {
        Check { name: name.into(), value: 0.0, bound: 0.0, margin: 0.0, pass: true, vacuous: true }
    }
}

fn finite(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else if x.is_nan() {
        0.0
    } else {
        x.signum() * f64::MAX
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub instance: String,
    pub level: usize,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(instance: impl Into<String>, level: usize) -> Self {
        VerificationReport { instance: instance.into(), level, checks: Vec::new() }
    }

    pub fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn extend(&mut self, other: VerificationReport) {
        self.checks.extend(other.checks);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass || c.vacuous)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass && !c.vacuous)
    }
}

pub const SANDWICH_EPS: f64 = 1e-8;
pub const IDENTITY_TOL: f64 = 1e-6;
pub const BALANCE_TOL: f64 = 1e-8;

/// Energy identity and lower inequality for a cavity:
/// ∫_D q(u₀) ≤ W_c − W₀ = a_D(ũ_c, u₀).
pub fn verify_cavity_sandwich(
    model: &PlateModel,
    reference: &PlateSolution,
    cavity: &PlateSolution,
    extension: &PlateSolution,
) -> VerificationReport {
    let mut rep = VerificationReport::new("", 0);
    let w0 = model.energy(RegionSel::All, &reference.values);
    let wc = model.energy(RegionSel::Exterior, &cavity.values);
    let dw = wc - w0;
    let lhs = model.energy(RegionSel::Defect, &reference.values);
    let cross = cross_energy_cavity(model, reference, &extended_field(cavity, extension));
    if model.mesh().area(RegionSel::Defect) == 0.0 || (w0 == 0.0 && wc == 0.0) {
        rep.push(Check::vacuous("cavity sandwich lower"));
        rep.push(Check::vacuous("cavity identity"));
        return rep;
    }
    rep.push(Check::at_least("cavity work gap positive", dw, f64::MIN_POSITIVE));
    rep.push(Check::at_most("cavity sandwich lower", lhs, dw * (1.0 + SANDWICH_EPS)));
    rep.push(Check::at_most("cavity identity", (dw - cross).abs(), IDENTITY_TOL * dw.abs()));
    rep
}

/// Energy identity and lower inequality for a rigid inclusion:
/// ∫_D q(u₀) ≤ W₀ − W_r = ∫_∂D t·u₀. Also checks that the boundary term does not
/// see rigid triples added to u₀.
pub fn verify_rigid_sandwich(
    model: &PlateModel,
    reference: &PlateSolution,
    rigid: &PlateSolution,
    reactions: &Reactions,
) -> VerificationReport {
    let mut rep = VerificationReport::new("", 0);
    let mesh = model.mesh();
    let w0 = model.energy(RegionSel::All, &reference.values);
    let wr = model.energy(RegionSel::All, &rigid.values);
    let dw = w0 - wr;
    if mesh.area(RegionSel::Defect) == 0.0 || (w0 == 0.0 && wr == 0.0) {
        rep.push(Check::vacuous("rigid sandwich lower"));
        rep.push(Check::vacuous("rigid identity"));
        return rep;
    }
    let lhs = model.energy(RegionSel::Defect, &reference.values);
    let boundary = reactions.pair(mesh, &reference.values);
    rep.push(Check::at_least("rigid work gap positive", dw, f64::MIN_POSITIVE));
    rep.push(Check::at_most("rigid sandwich lower", lhs, dw * (1.0 + SANDWICH_EPS)));
    rep.push(Check::at_most("rigid identity", (dw - boundary).abs(), IDENTITY_TOL * dw.abs()));

    let z = RigidTriple { a: 1.0, b: [1.0, -1.0] };
    let zv = z.interpolate(mesh);
    let zmax = zv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let shift = reactions.pair(mesh, &zv).abs();
    let tol = 1e-10 * (boundary.abs() + reactions.scale * zmax);
    rep.push(Check::at_most("rigid boundary term gauge invariance", shift, tol));
    rep
}

/// Force and couple balance of the contact actions on ∂D.
pub fn verify_balance(mesh: &Mesh, reactions: &Reactions) -> VerificationReport {
    let mut rep = VerificationReport::new("", 0);
    if reactions.scale == 0.0 {
        rep.push(Check::vacuous("force balance"));
        rep.push(Check::vacuous("couple balance"));
        return rep;
    }
    let force = reactions.force_resultant().abs();
    let force_scale: f64 = reactions.nodal.iter().map(|g| g[2].abs()).sum();
    let c = reactions.couple_resultant(mesh);
    let couple_scale: f64 = reactions
        .nodes
        .iter()
        .zip(&reactions.nodal)
        .map(|(&n, g)| g[0].abs() + g[1].abs() + g[2].abs() * mesh.nodes()[n].norm())
        .sum();
    rep.push(Check::at_most("force balance", force, BALANCE_TOL * force_scale));
    rep.push(Check::at_most("couple balance", c[0].hypot(c[1]), BALANCE_TOL * couple_scale));
    rep
}

/// A cavity carries no contact actions on ∂D.
pub fn verify_traction_free(reactions: &Reactions) -> VerificationReport {
    let mut rep = VerificationReport::new("", 0);
    let worst = reactions.nodal.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if reactions.load_scale == 0.0 {
        rep.push(Check::vacuous("cavity traction free"));
    } else {
        rep.push(Check::at_most("cavity traction free", worst, 1e-10 * reactions.load_scale));
    }
    rep
}

/// Empirical constant of the contact-action bound,
/// Ĉ = ∫_∂D(|t_φ|² + ρ₀²|t_w|²) / ((ρ₀/r_D) ∫_{Ω∖D̄} ρ₀⁵|∇̂φ|² + ρ₀³|φ+∇w|²).
pub fn traction_bound_ratio(
    model: &PlateModel,
    rigid: &PlateSolution,
    reactions: &Reactions,
    rho0: f64,
    r_d: f64,
) -> Option<f64> {
    let mesh = model.mesh();
    let lhs = reactions.traction_norm_sq(mesh, rho0);
    let mut core = 0.0;
    for t in mesh.selected_triangles(RegionSel::Exterior) {
        let geo = model.element_geometry(t);
        let u = model.gather(&rigid.values, t);
        let s = crate::material::sym(geo.grad_phi(&u));
        let bend = s[0][0] * s[0][0] + 2.0 * s[0][1] * s[0][1] + s[1][1] * s[1][1];
        let shear: f64 = model
            .rule()
            .points()
            .iter()
            .map(|&(q, wq)| {
                let g = geo.shear_strain(&u, q);
                wq * (g[0] * g[0] + g[1] * g[1])
            })
            .sum();
        core += geo.area * (rho0.powi(5) * bend + rho0.powi(3) * shear);
    }
    let rhs = rho0 / r_d * core;
    if rhs > 0.0 {
        Some(lhs / rhs)
    } else {
        None
    }
}

pub fn verify_traction_bound(
    model: &PlateModel,
    rigid: &PlateSolution,
    reactions: &Reactions,
    rho0: f64,
    r_d: f64,
) -> (VerificationReport, Option<f64>) {
    let mut rep = VerificationReport::new("", 0);
    let ratio = traction_bound_ratio(model, rigid, reactions, rho0, r_d);
    match ratio {
        Some(c) => rep.push(Check::at_most("traction bound ratio finite", c, f64::MAX)),
        None => rep.push(Check::vacuous("traction bound ratio finite")),
    }
    (rep, ratio)
}

/// Bilinear-form consistency of a converged solve.
pub fn verify_duality(name: &str, gap: f64) -> Check {
    Check::at_most(format!("{name} work duality"), gap, 1e-8)
}

pub fn verify_residual(name: &str, residual: f64, tol: f64) -> Check {
    Check::at_most(format!("{name} solver residual"), residual, tol)
}
