//! Config-driven experiment runner and its CSV, JSON and SVG outputs.

mod config;
mod output;
mod plot;
mod run;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{
    ConstantsConfig, ExperimentConfig, FamilyConfig, HypothesisConfig, Ladder, LpsConfig, MaterialConfig, SolverConfig,
    OUT_ENV,
};
pub use output::{config_hash, read_results, write_manifest, write_outputs, write_plots, RunManifest, Written};
pub use plot::{bounds_svg, fields_svg, plot_fields};
pub use run::{
    calibrate_families, convergence_table, family_domain, instance_specs, mesh_levels, run_experiment, run_instance,
    FamilyLevel, FamilyResult, InstanceResult, InstanceSpec, LevelResult, LpsRow, RunResult,
};

use crate::error::Result;
use crate::geometry::export_mesh;

/// How far a run goes; each stage includes the ones before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Mesh,
    Solve,
    Works,
    Estimate,
    Verify,
    Sweep,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

/// Runs `f` on a pool of `workers` threads (0 = all cores) with sequential
/// sparse kernels, so results do not depend on the worker count.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    faer::set_global_parallelism(faer::Par::Seq);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::Error::Config(format!("workers: {e}")))?;
    Ok(pool.install(f))
}

fn export_meshes(cfg: &ExperimentConfig, out: &Path) -> Result<Written> {
    let dir = out.join("meshes");
    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let mut per = BTreeMap::new();
    for fam in &cfg.families {
        let domain = family_domain(cfg, fam);
        for (m, defect) in fam.members()?.iter().enumerate() {
            let id = format!("{}-{m}", fam.name);
            let meshes = mesh_levels(&domain, defect.as_ref(), fam.target_h, cfg.levels)?;
            let mut paths = Vec::new();
            for (k, mesh) in meshes.iter().enumerate() {
                let rel = PathBuf::from("meshes").join(format!("{id}_L{k}.rmmesh"));
                std::fs::write(out.join(&rel), export_mesh(mesh))?;
                paths.push(rel);
            }
            files.extend(paths.iter().cloned());
            per.insert(id, paths);
        }
    }
    Ok((files, per))
}

/// Runs the config up to `stage`, writes the outputs and the manifest.
pub fn execute(cfg: &ExperimentConfig, out: &Path, stage: Stage) -> Result<RunManifest> {
    let start = Instant::now();
    let hash = config_hash(cfg);
    std::fs::create_dir_all(out)?;
    let mut timings = BTreeMap::new();
    let (files, instance_outputs, checks, failed, exit_code) = if stage == Stage::Mesh {
        let (f, p) = export_meshes(cfg, out)?;
        (f, p, 0, 0, EXIT_OK)
    } else {
        let result = with_workers(cfg.workers, || run_experiment(cfg, hash.clone(), stage >= Stage::Verify))??;
        for i in &result.instances {
            timings.insert(i.id.clone(), i.seconds);
        }
        let (f, p) = write_outputs(&result, out, stage)?;
        let (checks, failed) = result.n_checks();
        let code = if stage >= Stage::Verify && failed > 0 {
            EXIT_VERIFICATION
        } else if let Some(i) = result.instances.iter().find(|i| i.error.is_some()) {
            if stage >= Stage::Verify {
                EXIT_VERIFICATION
            } else {
                i.error_code.unwrap_or(EXIT_INPUT)
            }
        } else {
            EXIT_OK
        };
        (f, p, checks, failed, code)
    };
    timings.insert("total".into(), start.elapsed().as_secs_f64());
    let manifest = RunManifest {
        name: cfg.name.clone(),
        config_hash: hash,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        stage,
        files,
        instance_outputs,
        timings,
        checks,
        failed_checks: failed,
        exit_code,
    };
    write_manifest(out, &manifest)?;
    Ok(manifest)
}

/// Re-renders the tables and bounds plots of an earlier sweep from `results.json`.
pub fn report(out: &Path) -> Result<RunManifest> {
    let result = read_results(out)?;
    let (mut files, mut per) = write_outputs(&result, out, Stage::Verify)?;
    files.extend(write_plots(&result, out, &mut per)?);
    let (checks, failed) = result.n_checks();
    let manifest = RunManifest {
        name: result.name.clone(),
        config_hash: result.config_hash.clone(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        stage: Stage::Sweep,
        files,
        instance_outputs: per,
        timings: result.instances.iter().map(|i| (i.id.clone(), i.seconds)).collect(),
        checks,
        failed_checks: failed,
        exit_code: if failed > 0 { EXIT_VERIFICATION } else { EXIT_OK },
    };
    Ok(manifest)
}
