use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, FamilyConfig};
use super::plot::fields_svg;
use crate::assembly::{preset_load, LoadPreset, PlateModel};
use crate::error::{Error, Result};
use crate::estimates::{
    calibrate, check_hypotheses, frequency, frequency_flag, Calibration, CalibrationPoint, FrequencyReport, HypothesisFlags,
    SizeEstimateReport,
};
use crate::geometry::{build_plate_mesh, defect_parameters, DefectShape, DomainSpec, Mesh, Point2, RegionSel};
use crate::solvers::{
    boundary_reactions, dirichlet_extension, extended_field, solve_cavity, solve_reference, solve_rigid, ProblemKind,
};
use crate::verify::{
    estimate_inequality_constant, lps_probe, verify_balance, verify_cavity_sandwich, verify_duality, verify_residual,
    verify_rigid_sandwich, verify_traction_bound, verify_traction_free, Check, ConstantEstimate, ConstantName,
    ConvergenceTable, VerificationReport,
};
use crate::works::{cross_energy_cavity, work_report, GapReport, WorkReport};

/// Relative residual accepted from every linear solve.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Allowed relative drift of calibrated constants between the two finest levels.
pub const CALIBRATION_STABILITY: f64 = 0.05;
pub const LPS_STABILITY: f64 = 0.20;
pub const LPS_FLOOR: f64 = 1e-6;
pub const GENERALIZED_KORN_STABILITY: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub n_triangles: usize,
    pub area_true: f64,
    pub reference: WorkReport,
    pub defected: Option<WorkReport>,
    pub gap: Option<GapReport>,
    pub frequency: FrequencyReport,
    pub flags: Option<HypothesisFlags>,
    pub identity_residual: Option<f64>,
    pub traction_ratio: Option<f64>,
    pub solver_residuals: Vec<(String, f64)>,
    pub verification: VerificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceResult {
    pub id: String,
    pub family: String,
    pub member: usize,
    pub load: String,
    pub kind: ProblemKind,
    pub defect: Option<DefectShape>,
    pub levels: Vec<LevelResult>,
    pub error: Option<String>,
    pub error_code: Option<i32>,
    pub seconds: f64,
    #[serde(skip)]
    pub field_plot: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyLevel {
    pub level: usize,
    pub calibration: Calibration,
    pub reports: Vec<SizeEstimateReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyResult {
    pub family: String,
    pub load: String,
    pub kind: ProblemKind,
    pub rho0: f64,
    pub levels: Vec<FamilyLevel>,
    pub verification: VerificationReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpsRow {
    pub load: String,
    pub level: usize,
    pub h: f64,
    pub frequency: f64,
    pub min_ratio: f64,
    pub admissible: usize,
    pub rejected: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub name: String,
    pub config_hash: String,
    pub instances: Vec<InstanceResult>,
    pub families: Vec<FamilyResult>,
    pub convergence: Vec<ConvergenceTable>,
    pub constants: Vec<ConstantEstimate>,
    pub lps: Vec<LpsRow>,
    pub suite: VerificationReport,
}

impl RunResult {
    pub fn reports(&self) -> impl Iterator<Item = &VerificationReport> {
        self.instances
            .iter()
            .flat_map(|i| i.levels.iter().map(|l| &l.verification))
            .chain(self.families.iter().map(|f| &f.verification))
            .chain(std::iter::once(&self.suite))
    }

    pub fn passed(&self) -> bool {
        self.reports().all(|r| r.passed())
    }

    pub fn n_checks(&self) -> (usize, usize) {
        let total = self.reports().map(|r| r.checks.len()).sum();
        let failed = self.reports().map(|r| r.failures().count()).sum();
        (total, failed)
    }
}

/// One (family, member, load) triple.
#[derive(Debug, Clone)]
pub struct InstanceSpec {
    pub id: String,
    pub family: FamilyConfig,
    pub member: usize,
    pub defect: Option<DefectShape>,
    pub load: LoadPreset,
}

pub fn instance_specs(cfg: &ExperimentConfig) -> Result<Vec<InstanceSpec>> {
    let mut out = Vec::new();
    for fam in &cfg.families {
        for (m, defect) in fam.members()?.into_iter().enumerate() {
            for load in &cfg.loads {
                out.push(InstanceSpec {
                    id: format!("{}-{m}-{}", fam.name, load.name()),
                    family: fam.clone(),
                    member: m,
                    defect: defect.clone(),
                    load: *load,
                });
            }
        }
    }
    Ok(out)
}

pub fn family_domain(cfg: &ExperimentConfig, fam: &FamilyConfig) -> DomainSpec {
    fam.domain.unwrap_or(cfg.domain)
}

/// Base mesh followed by `levels − 1` quadrisections.
pub fn mesh_levels(domain: &DomainSpec, defect: Option<&DefectShape>, target_h: f64, levels: usize) -> Result<Vec<Mesh>> {
    let mut meshes = vec![build_plate_mesh(domain, defect, target_h)?];
    for _ in 1..levels {
        let next = meshes.last().expect("nonempty").refine();
        meshes.push(next);
    }
    Ok(meshes)
}

/// Geometric hypotheses do not depend on the level, so they are evaluated once
/// on the base mesh and carried through `flags`.
fn run_level(
    cfg: &ExperimentConfig,
    spec: &InstanceSpec,
    mesh: &Mesh,
    level: usize,
    flags: &mut Option<HypothesisFlags>,
    plot: bool,
) -> Result<(LevelResult, Option<String>)> {
    let material = cfg.material.material();
    let opts = &cfg.solver.options;
    let domain = family_domain(cfg, &spec.family);
    let rho0 = domain.rho0;
    let kind = spec.family.kind;
    let model = PlateModel::new(mesh.clone(), material.clone(), cfg.shear_rule())?;
    let load = preset_load(mesh, &material, spec.load)?;
    let mut rep = VerificationReport::new(spec.id.clone(), level);

    let reference = solve_reference(&model, &load, opts)?;
    let ref_work = work_report(&model, &reference, &load)?;
    rep.push(verify_duality("reference", ref_work.duality_gap));
    let mut residuals = vec![("reference".to_string(), reference.residual)];
    let w0 = ref_work.w_energy;

    let freq = frequency(mesh, &load, rho0)?;
    let area_true = mesh.area(RegionSel::Defect);
    let mut out = LevelResult {
        level,
        h: mesh.characteristic_size(),
        n_triangles: mesh.n_triangles(),
        area_true,
        reference: ref_work,
        defected: None,
        gap: None,
        frequency: freq,
        flags: None,
        identity_residual: None,
        traction_ratio: None,
        solver_residuals: Vec::new(),
        verification: VerificationReport::new(spec.id.clone(), level),
    };
    let mut plotted = &reference;
    let defected;
    match kind {
        ProblemKind::Reference => {}
        ProblemKind::Cavity | ProblemKind::Rigid => {
            let shape = spec.defect.as_ref().ok_or(Error::NoDefect)?;
            let geo = defect_parameters(shape, &domain, cfg.hypotheses.d0)?;
            let params = cfg.hypotheses.params();
            let f = flags.get_or_insert_with(|| check_hypotheses(mesh, &geo, rho0, &params, Some(freq.f)));
            f.frequency = frequency_flag(Some(freq.f), &params);
            out.flags = Some(*f);
            if kind == ProblemKind::Cavity {
                defected = solve_cavity(&model, &load, opts)?;
                let ext = dirichlet_extension(&model, &defected, opts)?;
                residuals.push(("extension".into(), ext.residual));
                let mut sandwich = verify_cavity_sandwich(&model, &reference, &defected, &ext);
                sandwich.checks.iter_mut().for_each(|c| c.name = c.name.replacen("cavity ", "", 1));
                rep.checks.extend(sandwich.checks);
                let reactions = boundary_reactions(&model, &defected, &load)?;
                rep.extend(verify_traction_free(&reactions));
                let dw = model.energy(RegionSel::Exterior, &defected.values) - w0;
                let cross = cross_energy_cavity(&model, &reference, &extended_field(&defected, &ext));
                out.identity_residual = Some(if dw != 0.0 { (dw - cross).abs() / dw.abs() } else { 0.0 });
            } else {
                defected = solve_rigid(&model, &load, opts)?;
                let reactions = boundary_reactions(&model, &defected, &load)?;
                let mut sandwich = verify_rigid_sandwich(&model, &reference, &defected, &reactions);
                sandwich.checks.iter_mut().for_each(|c| c.name = c.name.replacen("rigid ", "", 1));
                rep.checks.extend(sandwich.checks);
                rep.extend(verify_balance(mesh, &reactions));
                let (tb, ratio) = verify_traction_bound(&model, &defected, &reactions, rho0, geo.r_d);
                rep.extend(tb);
                out.traction_ratio = ratio;
                let dw = w0 - model.energy(RegionSel::All, &defected.values);
                let boundary = reactions.pair(mesh, &reference.values);
                out.identity_residual = Some(if dw != 0.0 { (dw - boundary).abs() / dw.abs() } else { 0.0 });
            }
            let work = work_report(&model, &defected, &load)?;
            rep.push(verify_duality(if kind == ProblemKind::Cavity { "cavity" } else { "rigid" }, work.duality_gap));
            residuals.push((format!("{kind:?}").to_lowercase(), defected.residual));
            let gap = GapReport::new(kind, w0, work.w_energy)?;
            if kind == ProblemKind::Rigid {
                rep.push(Check::at_least("rigid t nonnegative", gap.t, 0.0));
                rep.push(Check::at_most("rigid t below one", gap.t, 1.0 - f64::EPSILON));
            }
            out.defected = Some(work);
            out.gap = Some(gap);
            plotted = &defected;
        }
        ProblemKind::DirichletExtension => return Err(Error::Config("extension is not a family kind".into())),
    }
    for (name, r) in &residuals {
        rep.push(verify_residual(name, *r, RESIDUAL_TOL));
    }
    out.solver_residuals = residuals;
    out.verification = rep;
    let svg = plot.then(|| fields_svg(&model, plotted, rho0, &spec.id));
    Ok((out, svg))
}

pub fn run_instance(cfg: &ExperimentConfig, spec: &InstanceSpec) -> InstanceResult {
    let start = Instant::now();
    let mut res = InstanceResult {
        id: spec.id.clone(),
        family: spec.family.name.clone(),
        member: spec.member,
        load: spec.load.name(),
        kind: spec.family.kind,
        defect: spec.defect.clone(),
        levels: Vec::new(),
        error: None,
        error_code: None,
        seconds: 0.0,
        field_plot: None,
    };
    let domain = family_domain(cfg, &spec.family);
    let outcome = (|| -> Result<()> {
        let meshes = mesh_levels(&domain, spec.defect.as_ref(), spec.family.target_h, cfg.levels)?;
        let mut flags = None;
        for (level, mesh) in meshes.iter().enumerate() {
            let (lr, svg) = run_level(cfg, spec, mesh, level, &mut flags, cfg.plot_level == Some(level))?;
            res.levels.push(lr);
            if svg.is_some() {
                res.field_plot = svg;
            }
        }
        Ok(())
    })();
    if let Err(e) = outcome {
        res.error_code = Some(e.exit_code());
        res.error = Some(e.to_string());
    }
    res.seconds = start.elapsed().as_secs_f64();
    res
}

pub fn convergence_table(inst: &InstanceResult) -> ConvergenceTable {
    let mut t = ConvergenceTable::new(inst.id.clone());
    for l in &inst.levels {
        let mut vals = vec![("w0", l.reference.w_energy)];
        if let (Some(d), Some(g)) = (&l.defected, &l.gap) {
            vals.push(("w_def", d.w_energy));
            vals.push(("t", g.t));
        }
        if let Some(r) = l.identity_residual {
            vals.push(("identity_residual", r));
        }
        t.push_level(l.h, l.n_triangles, &vals);
    }
    t
}

fn relative_change(a: f64, b: f64) -> f64 {
    (b - a).abs() / a.abs().max(b.abs())
}

/// Calibrates each (family, load) at every level and checks the brackets.
pub fn calibrate_families(cfg: &ExperimentConfig, instances: &[InstanceResult]) -> Vec<FamilyResult> {
    let mut out = Vec::new();
    for fam in cfg.families.iter().filter(|f| f.kind != ProblemKind::Reference) {
        let rho0 = family_domain(cfg, fam).rho0;
        for load in &cfg.loads {
            let name = load.name();
            let members: Vec<&InstanceResult> =
                instances.iter().filter(|i| i.family == fam.name && i.load == name).collect();
            let mut rep = VerificationReport::new(format!("{}-{name}", fam.name), cfg.levels - 1);
            let mut levels = Vec::new();
            for level in 0..cfg.levels {
                let rows: Vec<(&InstanceResult, &LevelResult)> =
                    members.iter().filter_map(|i| i.levels.get(level).map(|l| (*i, l))).collect();
                if rows.len() != members.len() || rows.is_empty() {
                    continue;
                }
                let points: Vec<CalibrationPoint> = rows
                    .iter()
                    .map(|(_, l)| CalibrationPoint { area: l.area_true, t: l.gap.map_or(0.0, |g| g.t), kind: fam.kind })
                    .collect();
                let cal = match calibrate(&points, rho0) {
                    Ok(c) => c,
                    Err(e) => {
                        rep.push(Check::failure(format!("calibration level {level}: {e}")));
                        continue;
                    }
                };
                let mut reports = Vec::new();
                for ((inst, l), p) in rows.iter().zip(&points) {
                    let flags = l.flags.expect("defect instances carry flags");
                    match SizeEstimateReport::new(inst.id.clone(), p, &cal, rho0, l.frequency.f, flags) {
                        Ok(r) => {
                            let slack = 1e-12 * r.area_true;
                            rep.push(Check::at_most(format!("{} L{level} lower bound", inst.id), r.lower, r.area_true + slack));
                            rep.push(Check::at_most(format!("{} L{level} upper bound", inst.id), r.area_true, r.upper + slack));
                            reports.push(r);
                        }
                        Err(e) => rep.push(Check::failure(format!("{} L{level}: {e}", inst.id))),
                    }
                }
                levels.push(FamilyLevel { level, calibration: cal, reports });
            }
            if let [.., a, b] = levels.as_slice() {
                let (ca, cb) = (a.calibration, b.calibration);
                rep.push(Check::at_most("calibration stability upper", relative_change(ca.upper, cb.upper), CALIBRATION_STABILITY));
                rep.push(Check::at_most("calibration stability lower", relative_change(ca.lower, cb.lower), CALIBRATION_STABILITY));
            }
            out.push(FamilyResult { family: fam.name.clone(), load: name, kind: fam.kind, rho0, levels, verification: rep });
        }
    }
    out
}

/// Inequality constants on the configured plate and on an annulus for the trace inequality.
pub fn run_constants(cfg: &ExperimentConfig, rep: &mut VerificationReport) -> Result<Vec<ConstantEstimate>> {
    let Some(cc) = &cfg.constants else { return Ok(Vec::new()) };
    let plate = mesh_levels(&cfg.domain, None, cfg.target_h, cfg.levels)?;
    let [outer, inner, h] = cc.annulus;
    let annulus = DomainSpec::disc(outer);
    let hole = DefectShape::Disc { center: Point2::new(0.0, 0.0), radius: inner };
    let mut out = Vec::new();
    for &name in &cc.names {
        let meshes = if name == ConstantName::TracePoincareC3 {
            mesh_levels(&annulus, Some(&hole), h, cfg.levels)?
        } else {
            plate.clone()
        };
        let series: Vec<ConstantEstimate> = meshes
            .par_iter()
            .enumerate()
            .map(|(level, m)| estimate_inequality_constant(name, m, cc.rho, cfg.shear_rule(), level))
            .collect::<Result<_>>()?;
        let label = name.label();
        for c in &series {
            rep.push(Check::at_least(format!("{label} L{} positive", c.level), c.value, f64::MIN_POSITIVE));
        }
        match name {
            ConstantName::Korn2 => {
                for w in series.windows(2) {
                    rep.push(Check::at_least(format!("Korn2 L{} non-decreasing", w[1].level), w[1].value, w[0].value * (1.0 - 1e-9)));
                }
                for c in &series {
                    rep.push(Check::at_least(format!("Korn2 L{} at least one", c.level), c.value, 1.0));
                }
            }
            ConstantName::GeneralizedKorn => {
                if let [.., a, b] = series.as_slice() {
                    rep.push(Check::at_most("GeneralizedKorn stability", relative_change(a.value, b.value), GENERALIZED_KORN_STABILITY));
                }
            }
            _ => {}
        }
        out.extend(series);
    }
    Ok(out)
}

/// LPS probe of the reference solution on the plain plate for every load.
pub fn run_lps(cfg: &ExperimentConfig, rep: &mut VerificationReport) -> Result<Vec<LpsRow>> {
    let Some(lc) = &cfg.lps else { return Ok(Vec::new()) };
    let meshes = mesh_levels(&cfg.domain, None, cfg.target_h, cfg.levels)?;
    let material = cfg.material.material();
    let centers = lc.centers();
    let rho0 = cfg.domain.rho0;
    let jobs: Vec<(LoadPreset, usize)> = cfg.loads.iter().flat_map(|&l| (0..meshes.len()).map(move |k| (l, k))).collect();
    let rows: Vec<LpsRow> = jobs
        .par_iter()
        .map(|&(load, level)| -> Result<LpsRow> {
            let mesh = &meshes[level];
            let model = PlateModel::new(mesh.clone(), material.clone(), cfg.shear_rule())?;
            let bl = preset_load(mesh, &material, load)?;
            let reference = solve_reference(&model, &bl, &cfg.solver.options)?;
            let probe = lps_probe(&model, &reference, rho0, lc.rho, &centers, lc.theta)?;
            Ok(LpsRow {
                load: load.name(),
                level,
                h: mesh.characteristic_size(),
                frequency: frequency(mesh, &bl, rho0)?.f,
                min_ratio: probe.min_ratio,
                admissible: probe.admissible,
                rejected: probe.rejected,
            })
        })
        .collect::<Result<_>>()?;
    for load in &cfg.loads {
        let name = load.name();
        let series: Vec<&LpsRow> = rows.iter().filter(|r| r.load == name).collect();
        for r in &series {
            rep.push(Check::at_least(format!("LPS {name} L{} positive", r.level), r.min_ratio, LPS_FLOOR));
        }
        if let [.., a, b] = series.as_slice() {
            rep.push(Check::at_most(format!("LPS {name} stability"), relative_change(a.min_ratio, b.min_ratio), LPS_STABILITY));
        }
    }
    Ok(rows)
}

/// Runs every instance, calibrates the families and, with `suite`, the
/// inequality constants and the LPS probe.
pub fn run_experiment(cfg: &ExperimentConfig, config_hash: String, suite: bool) -> Result<RunResult> {
    let specs = instance_specs(cfg)?;
    let instances: Vec<InstanceResult> = specs.par_iter().map(|s| run_instance(cfg, s)).collect();
    if !instances.is_empty() && instances.iter().all(|i| i.error.is_some()) {
        let code = instances[0].error_code.unwrap_or(2);
        let msg = instances[0].error.clone().unwrap_or_default();
        return Err(if code == 3 { Error::Factorization(msg) } else { Error::Config(format!("every instance failed: {msg}")) });
    }
    let mut suite_rep = VerificationReport::new("suite", cfg.levels - 1);
    for i in &instances {
        match &i.error {
            None => suite_rep.push(Check::at_most(format!("{} completed", i.id), 0.0, 0.0)),
            Some(e) => suite_rep.push(Check::failure(format!("{} failed: {e}", i.id))),
        }
    }
    let families = calibrate_families(cfg, &instances);
    let convergence = instances.iter().filter(|i| i.error.is_none()).map(convergence_table).collect();
    let (constants, lps) = if suite {
        (run_constants(cfg, &mut suite_rep)?, run_lps(cfg, &mut suite_rep)?)
    } else {
        (Vec::new(), Vec::new())
    };
    Ok(RunResult { name: cfg.name.clone(), config_hash, instances, families, convergence, constants, lps, suite: suite_rep })
}
