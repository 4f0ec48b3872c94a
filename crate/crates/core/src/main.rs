use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mindlin_size::pipeline::{execute, report, ExperimentConfig, RunManifest, Stage, EXIT_INPUT};
use mindlin_size::Error;

#[derive(Parser)]
#[command(name = "mindlin-size", version, about = "Work gaps and defect size estimates for Reissner-Mindlin plates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides MINDLIN_SIZE_OUT and the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of mesh levels.
    #[arg(long)]
    levels: Option<usize>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Build and export the meshes of every instance.
    Mesh(RunArgs),
    /// Solve every instance and record solver residuals.
    Solve(RunArgs),
    /// Solve and tabulate boundary and energy works.
    Works(RunArgs),
    /// Add calibrated size estimates.
    Estimate(RunArgs),
    /// Run every verification check; exit code 1 on failure.
    Verify(RunArgs),
    /// Everything, plus plots and the full results file.
    Sweep(RunArgs),
    /// Re-render tables and bound plots from an earlier sweep.
    Report {
        /// Directory holding results.json.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Config whose output directory to use when --out is absent.
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load(args: &RunArgs) -> Result<(ExperimentConfig, PathBuf), Error> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(l) = args.levels {
        cfg.levels = l;
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    let out = cfg.output_dir(args.out.as_deref());
    Ok((cfg, out))
}

fn summarize(m: &RunManifest, out: &std::path::Path) {
    println!("{} [{:?}] -> {}", m.name, m.stage, out.display());
    println!("config sha256 {}", m.config_hash);
    if m.checks > 0 {
        println!("checks: {} total, {} failed", m.checks, m.failed_checks);
    }
    println!("files: {}", m.files.len());
    if let Some(t) = m.timings.get("total") {
        println!("time: {t:.2} s");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (stage, args) = match cli.command {
        Command::Mesh(a) => (Stage::Mesh, a),
        Command::Solve(a) => (Stage::Solve, a),
        Command::Works(a) => (Stage::Works, a),
        Command::Estimate(a) => (Stage::Estimate, a),
        Command::Verify(a) => (Stage::Verify, a),
        Command::Sweep(a) => (Stage::Sweep, a),
        Command::Report { out, config } => {
            let dir = match (out, config) {
                (Some(o), _) => o,
                (None, Some(c)) => match ExperimentConfig::load(&c) {
                    Ok(cfg) => cfg.output_dir(None),
                    Err(e) => return fail(e),
                },
                (None, None) => {
                    eprintln!("error: report needs --out or --config");
                    return ExitCode::from(EXIT_INPUT as u8);
                }
            };
            return match report(&dir) {
                Ok(m) => {
                    summarize(&m, &dir);
                    ExitCode::from(m.exit_code as u8)
                }
                Err(e) => fail(e),
            };
        }
    };
    let (cfg, out) = match load(&args) {
        Ok(v) => v,
        Err(e) => return fail(e),
    };
    match execute(&cfg, &out, stage) {
        Ok(m) => {
            summarize(&m, &out);
            ExitCode::from(m.exit_code as u8)
        }
        Err(e) => fail(e),
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}
