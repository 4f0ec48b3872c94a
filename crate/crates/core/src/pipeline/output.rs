use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::plot::bounds_svg;
use super::run::RunResult;
use super::Stage;
use crate::error::{Error, Result};

/// Canonical hash of a parsed config: formatting and key order do not matter.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let canonical = serde_json::to_string(cfg).expect("config serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Relative paths written, and the same paths grouped by instance id.
pub type Written = (Vec<PathBuf>, BTreeMap<String, Vec<PathBuf>>);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub name: String,
    pub config_hash: String,
    pub tool_version: String,
    pub stage: Stage,
    pub files: Vec<PathBuf>,
    /// Output files per instance id.
    pub instance_outputs: BTreeMap<String, Vec<PathBuf>>,
    /// Wall-clock seconds per instance, and `total`.
    pub timings: BTreeMap<String, f64>,
    pub checks: usize,
    pub failed_checks: usize,
    pub exit_code: i32,
}

#[derive(Serialize)]
struct SolveRow<'a> {
    id: &'a str,
    level: usize,
    h: f64,
    n_triangles: usize,
    solve: &'a str,
    residual: f64,
}

#[derive(Serialize)]
struct WorkRow<'a> {
    id: &'a str,
    level: usize,
    kind: String,
    load: &'a str,
    h: f64,
    w0_boundary: f64,
    w0_energy: f64,
    w_def_boundary: Option<f64>,
    w_def_energy: Option<f64>,
    delta_w: Option<f64>,
    t: Option<f64>,
    duality_reference: f64,
    duality_defect: Option<f64>,
    identity_residual: Option<f64>,
    traction_ratio: Option<f64>,
}

#[derive(Serialize)]
struct EstimateRow<'a> {
    id: &'a str,
    level: usize,
    kind: String,
    area_true: f64,
    t: f64,
    #[serde(rename = "F")]
    f: f64,
    #[serde(rename = "K_hat")]
    k_upper: f64,
    #[serde(rename = "k_hat")]
    k_lower: f64,
    upper: f64,
    lower: f64,
    flags: String,
}

fn kind_name(k: crate::solvers::ProblemKind) -> String {
    format!("{k:?}").to_lowercase()
}

fn write_csv<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::Io(e.into()))?;
    for r in rows {
        w.serialize(r).map_err(|e| Error::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.into()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

#[derive(Serialize)]
struct VerificationFile<'a> {
    name: &'a str,
    passed: bool,
    checks: usize,
    failed: usize,
    failures: Vec<(&'a str, usize, &'a str)>,
    reports: Vec<&'a crate::verify::VerificationReport>,
}

/// Writes every table and plot the stage produces; returns the relative paths.
pub fn write_outputs(result: &RunResult, out: &Path, stage: Stage) -> Result<Written> {
    std::fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut per_instance: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();

    let solves = result.instances.iter().flat_map(|i| {
        i.levels.iter().flat_map(move |l| {
            l.solver_residuals.iter().map(move |(s, r)| SolveRow {
                id: &i.id,
                level: l.level,
                h: l.h,
                n_triangles: l.n_triangles,
                solve: s,
                residual: *r,
            })
        })
    });
    write_csv(&out.join("solutions.csv"), solves)?;
    files.push(PathBuf::from("solutions.csv"));

    if stage >= Stage::Works {
        let rows = result.instances.iter().flat_map(|i| {
            i.levels.iter().map(move |l| WorkRow {
                id: &i.id,
                level: l.level,
                kind: kind_name(i.kind),
                load: &i.load,
                h: l.h,
                w0_boundary: l.reference.w_boundary,
                w0_energy: l.reference.w_energy,
                w_def_boundary: l.defected.map(|d| d.w_boundary),
                w_def_energy: l.defected.map(|d| d.w_energy),
                delta_w: l.gap.map(|g| g.delta_w),
                t: l.gap.map(|g| g.t),
                duality_reference: l.reference.duality_gap,
                duality_defect: l.defected.map(|d| d.duality_gap),
                identity_residual: l.identity_residual,
                traction_ratio: l.traction_ratio,
            })
        });
        write_csv(&out.join("works.csv"), rows)?;
        files.push(PathBuf::from("works.csv"));
    }

    if stage >= Stage::Estimate {
        let rows = result.families.iter().flat_map(|f| {
            f.levels.iter().flat_map(move |fl| {
                fl.reports.iter().map(move |r| EstimateRow {
                    id: &r.id,
                    level: fl.level,
                    kind: kind_name(r.kind),
                    area_true: r.area_true,
                    t: r.t,
                    f: r.frequency,
                    k_upper: r.k_upper,
                    k_lower: r.k_lower,
                    upper: r.upper,
                    lower: r.lower,
                    flags: r.flags.summary(),
                })
            })
        });
        write_csv(&out.join("estimates.csv"), rows)?;
        files.push(PathBuf::from("estimates.csv"));
    }

    if stage >= Stage::Verify {
        let mut failures = Vec::new();
        for r in result.reports() {
            for c in r.failures() {
                failures.push((r.instance.as_str(), r.level, c.name.as_str()));
            }
        }
        let (checks, failed) = result.n_checks();
        let file = VerificationFile {
            name: &result.name,
            passed: result.passed(),
            checks,
            failed,
            failures,
            reports: result.reports().collect(),
        };
        write_json(&out.join("verification.json"), &file)?;
        write_json(&out.join("convergence.json"), &result.convergence)?;
        write_csv(&out.join("constants.csv"), &result.constants)?;
        write_csv(&out.join("lps.csv"), &result.lps)?;
        files.extend(["verification.json", "convergence.json", "constants.csv", "lps.csv"].map(PathBuf::from));
    }

    if stage >= Stage::Sweep {
        write_json(&out.join("results.json"), result)?;
        files.push(PathBuf::from("results.json"));
        files.extend(write_plots(result, out, &mut per_instance)?);
    }
    Ok((files, per_instance))
}

/// Field plots held by the instances and one bounds scatter per family and load
/// at the finest calibrated level.
pub fn write_plots(result: &RunResult, out: &Path, per_instance: &mut BTreeMap<String, Vec<PathBuf>>) -> Result<Vec<PathBuf>> {
    let dir = out.join("plots");
    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    for i in &result.instances {
        if let Some(svg) = &i.field_plot {
            let rel = PathBuf::from("plots").join(format!("{}_fields.svg", i.id));
            std::fs::write(out.join(&rel), svg)?;
            per_instance.entry(i.id.clone()).or_default().push(rel.clone());
            files.push(rel);
        }
    }
    for f in &result.families {
        let Some(fl) = f.levels.last() else { continue };
        let points: Vec<(f64, f64)> = fl.reports.iter().map(|r| (r.t, r.area_true)).collect();
        let title = format!("{} / {} / level {}", f.family, f.load, fl.level);
        let svg = bounds_svg(&points, &fl.calibration, f.rho0, &title)?;
        let rel = PathBuf::from("plots").join(format!("bounds_{}_{}.svg", f.family, f.load));
        std::fs::write(out.join(&rel), svg)?;
        files.push(rel);
    }
    Ok(files)
}

pub fn read_results(out: &Path) -> Result<RunResult> {
    let text = std::fs::read_to_string(out.join("results.json"))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("results.json: {e}")))
}

pub fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<()> {
    write_json(&out.join("manifest.json"), manifest)
}
