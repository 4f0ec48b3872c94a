//! Defect size estimators and their hypotheses.

mod frequency;

use serde::{Deserialize, Serialize};

pub use frequency::{frequency, FrequencyReport};

use crate::error::{Error, Result};
use crate::geometry::{fatness_measure, DefectGeometry, Mesh, RegionSel};
use crate::solvers::ProblemKind;

/// Ψ(t) = t²/(1 + t), the cavity lower-bound profile.
pub fn psi(t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("Psi needs t >= 0, got {t}")));
    }
    Ok(t * t / (1.0 + t))
}

/// Φ(t) = t²/(1 − t), the rigid-inclusion lower-bound profile.
pub fn phi(t: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain(format!("Phi needs 0 <= t < 1, got {t}")));
    }
    Ok(t * t / (1.0 - t))
}

pub fn upper_bound(t: f64, k: f64, rho0: f64) -> f64 {
    k * rho0 * rho0 * t
}

pub fn lower_bound(t: f64, k: f64, rho0: f64, kind: ProblemKind) -> Result<f64> {
    let profile = match kind {
        ProblemKind::Cavity => psi(t)?,
        ProblemKind::Rigid => phi(t)?,
        k => return Err(Error::Domain(format!("no size estimate for {k:?}"))),
    };
    Ok(k * rho0 * rho0 * profile)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub area: f64,
    pub t: f64,
    pub kind: ProblemKind,
}

/// Family constants: `upper` is K̂, `lower` is k̂ (cavity) or Ĉ (rigid).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub kind: ProblemKind,
    pub upper: f64,
    pub lower: f64,
}

/// K̂ = max area/(ρ₀²t) and k̂ = min area/(ρ₀² profile(t)) over the family.
pub fn calibrate(points: &[CalibrationPoint], rho0: f64) -> Result<Calibration> {
    let first = points.first().ok_or(Error::EmptyFamily)?;
    if points.iter().any(|p| p.kind != first.kind) {
        return Err(Error::Domain("calibration family mixes cavity and rigid instances".into()));
    }
    let (mut upper, mut lower) = (f64::NEG_INFINITY, f64::INFINITY);
    for p in points {
        if p.t <= 0.0 {
            return Err(Error::Domain(format!("calibration instance with t = {}", p.t)));
        }
        upper = upper.max(p.area / (rho0 * rho0 * p.t));
        let prof = lower_bound(p.t, 1.0, 1.0, p.kind)?;
        lower = lower.min(p.area / (rho0 * rho0 * prof));
    }
    Ok(Calibration { kind: first.kind, upper, lower })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Flag {
    pub pass: bool,
    /// Positive when the hypothesis holds with room to spare.
    pub margin: f64,
}

impl Flag {
    fn at_least(value: f64, bound: f64) -> Self {
        Flag { pass: value >= bound, margin: value - bound }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisFlags {
    pub fatness: Flag,
    pub sifc: Flag,
    pub distance: Flag,
    pub frequency: Flag,
}

impl HypothesisFlags {
    pub fn summary(&self) -> String {
        let c = |f: &Flag| if f.pass { '1' } else { '0' };
        format!(
            "fat={} sifc={} dist={} freq={}",
            c(&self.fatness),
            c(&self.sifc),
            c(&self.distance),
            c(&self.frequency)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisParams {
    /// Fatness depth h₁ (in units of ρ₀).
    pub h1: f64,
    /// Class bound on Q_D.
    pub q_d_max: f64,
    /// Class bound on 𝓕; `None` accepts any finite value.
    pub f_max: Option<f64>,
}

/// Evaluates fatness, SIFC, distance from ∂Ω and the frequency bound.
pub fn check_hypotheses(
    mesh: &Mesh,
    defect: &DefectGeometry,
    rho0: f64,
    params: &HypothesisParams,
    frequency: Option<f64>,
) -> HypothesisFlags {
    let area = mesh.area(RegionSel::Defect);
    let fat = fatness_measure(mesh, params.h1 * rho0);
    let fatness = Flag::at_least(fat, 0.5 * area);
    let sifc = Flag::at_least(params.q_d_max * defect.r_d, defect.diam);
    let far = defect.dist_to_outer - defect.d0 * rho0;
    let small = 0.5 * defect.d0 * rho0 - defect.r_d;
    let distance = Flag { pass: far >= 0.0 && small > 0.0, margin: far.min(small) };
    HypothesisFlags { fatness, sifc, distance, frequency: frequency_flag(frequency, params) }
}

/// 𝓕 ≤ f_max, or just a finite positive 𝓕 when no bound is configured.
pub fn frequency_flag(frequency: Option<f64>, params: &HypothesisParams) -> Flag {
    match (frequency, params.f_max) {
        (Some(f), Some(m)) if f.is_finite() => Flag::at_least(m, f),
        (Some(f), None) => Flag { pass: f.is_finite() && f > 0.0, margin: 0.0 },
        _ => Flag { pass: false, margin: f64::NAN },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeEstimateReport {
    pub id: String,
    pub kind: ProblemKind,
    pub t: f64,
    pub area_true: f64,
    pub frequency: f64,
    pub k_upper: f64,
    pub k_lower: f64,
    pub upper: f64,
    pub lower: f64,
    pub flags: HypothesisFlags,
}

impl SizeEstimateReport {
    pub fn new(
        id: String,
        point: &CalibrationPoint,
        calibration: &Calibration,
        rho0: f64,
        frequency: f64,
        flags: HypothesisFlags,
    ) -> Result<Self> {
        Ok(SizeEstimateReport {
            id,
            kind: point.kind,
            t: point.t,
            area_true: point.area,
            frequency,
            k_upper: calibration.upper,
            k_lower: calibration.lower,
            upper: upper_bound(point.t, calibration.upper, rho0),
            lower: lower_bound(point.t, calibration.lower, rho0, point.kind)?,
            flags,
        })
    }

    /// lower ≤ |D| ≤ upper, with a relative slack for the calibrating member.
    pub fn bracketed(&self) -> bool {
        let eps = 1e-12 * self.area_true;
        self.lower <= self.area_true + eps && self.area_true <= self.upper + eps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles() {
        assert_eq!(psi(0.0).unwrap(), 0.0);
        assert_eq!(psi(1.0).unwrap(), 0.5);
        assert_eq!(psi(3.0).unwrap(), 2.25);
        assert!(psi(-0.1).is_err());
        assert_eq!(phi(0.0).unwrap(), 0.0);
        assert_eq!(phi(0.5).unwrap(), 0.5);
        assert!((phi(0.9).unwrap() - 8.1).abs() < 1e-12);
        assert!(phi(1.0).is_err() && phi(1.5).is_err());
    }

    #[test]
    fn bounds() {
        assert_eq!(upper_bound(0.0, 2.0, 1.0), 0.0);
        assert!((upper_bound(0.05, 2.0, 1.0) - 0.1).abs() < 1e-15);
        assert_eq!(lower_bound(1.0, 0.5, 1.0, ProblemKind::Cavity).unwrap(), 0.25);
        assert!(lower_bound(1.0, 0.5, 1.0, ProblemKind::Rigid).is_err());
    }

    #[test]
    fn singleton_calibration_is_tight() {
        let p = CalibrationPoint { area: 0.04, t: 0.013, kind: ProblemKind::Cavity };
        let c = calibrate(&[p], 1.0).unwrap();
        assert!((upper_bound(p.t, c.upper, 1.0) - 0.04).abs() < 1e-15);
        assert!(calibrate(&[], 1.0).is_err());
        let zero = CalibrationPoint { t: 0.0, ..p };
        assert!(calibrate(&[zero], 1.0).is_err());
    }
}
