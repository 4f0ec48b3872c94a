use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mindlin_size::pipeline::{execute, read_results, ExperimentConfig, Stage, OUT_ENV};
use mindlin_size::solvers::ProblemKind;
use mindlin_size::Error;

const MINI: &str = r#"
name = "mini"
levels = 2
workers = 1

[domain]
shape = "rectangle"
width = 1.0
height = 1.0
rho0 = 1.0
q0 = 2.0

[material]
lambda = 1.0
mu = 1.0
h = 0.1

[[loads]]
preset = "fourier_mode"
k = 2

[[families]]
name = "cav"
kind = "cavity"
target_h = 0.1
ladder = { shape = "rectangle", center = [0.5, 0.5], sizes = [0.2, 0.3, 0.4, 0.5, 0.6] }
"#;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_mindlin-size"));
    c.env_remove(OUT_ENV);
    c
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn run(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    if !out.status.success() {
        eprintln!("{}", String::from_utf8_lossy(&out.stderr));
    }
    out
}

#[test]
fn malformed_configs_are_diagnosed() {
    let cases = [
        ("name = \"x\"\nlevels = \"two\"\n", "levels"),
        (&MINI.replace("lambda = 1.0", "lambda = 1.0\nlamda = 2.0"), "lamda"),
        (&MINI.replace("h = 0.1", "h = -0.1"), "material"),
        (&MINI.replace("levels = 2", "levels = 0"), "levels"),
    ];
    for (text, key) in cases {
        let err = ExperimentConfig::from_toml(text).and_then(|c| c.validate().map(|_| c)).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
        assert!(err.to_string().contains(key), "{key}: {err}");
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "name = 3");
    let out = run(bin().args(["solve", "--config"]).arg(&cfg).arg("--out").arg(dir.path()));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid config"));
    let out = run(bin().args(["solve", "--config", "/nonexistent/cfg.toml"]));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn quick_config_solves_one_reference() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(bin().args(["works", "--levels", "3", "--config"]).arg(repo_config("quick.toml")).arg("--out").arg(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    let works = std::fs::read_to_string(dir.path().join("works.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(works.as_bytes());
    let header = rdr.headers().unwrap().clone();
    let col = header.iter().position(|h| h == "w0_energy").unwrap();
    let w: Vec<f64> = rdr.records().map(|r| r.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(w.len(), 3);
    // B κ² |Ω| with B = h³μ/6 + h³μλ/(6(2μ+λ)) at λ = μ = 1, h = 0.1
    let exact = 1e-3 / 6.0 * (1.0 + 1.0 / 3.0);
    let err: Vec<f64> = w.iter().map(|v| (v - exact).abs() / exact).collect();
    // second order once past the coarsest level, about 1% at h = 1/32
    assert!(err.windows(2).all(|e| e[1] < e[0] / 2.5), "{err:?}");
    assert!(err[2] < 0.015, "{err:?}");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["stage"], "works");
    assert!(manifest["timings"]["total"].as_f64().unwrap() >= 0.0);
}

#[test]
fn mesh_stage_exports_every_level() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINI);
    let out = run(bin().args(["mesh", "--config"]).arg(&cfg).arg("--out").arg(dir.path()));
    assert_eq!(out.status.code(), Some(0));
    for m in 0..5 {
        for k in 0..2 {
            let p = dir.path().join(format!("meshes/cav-{m}_L{k}.rmmesh"));
            let mesh = mindlin_size::geometry::import_mesh(&std::fs::read_to_string(&p).unwrap()).unwrap();
            assert!(mesh.has_defect());
        }
    }
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINI);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, w) in [(&a, "1"), (&b, "2")] {
        let o = run(bin().args(["estimate", "--workers", w, "--config"]).arg(&cfg).arg("--out").arg(out));
        assert_eq!(o.status.code(), Some(0));
    }
    for f in ["solutions.csv", "works.csv", "estimates.csv"] {
        let (x, y) = (std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap());
        assert!(x == y, "{f} differs");
    }
}

#[test]
fn nested_cavities_have_increasing_gaps_and_brackets() {
    let cfg = ExperimentConfig::from_toml(MINI).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let manifest = execute(&cfg, dir.path(), Stage::Sweep).unwrap();
    let res = read_results(dir.path()).unwrap();
    assert_eq!(res.instances.len(), 5);
    for level in 0..2 {
        let mut pts: Vec<(f64, f64)> = res
            .instances
            .iter()
            .map(|i| {
                let l = &i.levels[level];
                (l.area_true, l.gap.unwrap().t)
            })
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pts.windows(2).all(|w| w[1].1 >= w[0].1), "level {level}: {pts:?}");
    }
    let fam = &res.families[0];
    assert_eq!(fam.kind, ProblemKind::Cavity);
    for fl in &fam.levels {
        assert!(fl.reports.iter().all(|r| r.bracketed()));
    }
    assert!(manifest.files.iter().any(|f| f.ends_with("results.json")));
    assert!(dir.path().join("plots/bounds_cav_fourier_mode_2.svg").exists());
}

#[test]
fn out_env_overrides_config_but_not_flag() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("out = \"{}\"\n{}", dir.path().join("cfg_out").display(), MINI));
    let env_out = dir.path().join("env_out");
    let o = run(bin().args(["solve", "--levels", "1", "--config"]).arg(&cfg).env(OUT_ENV, &env_out));
    assert_eq!(o.status.code(), Some(0));
    assert!(env_out.join("solutions.csv").exists());
    assert!(!dir.path().join("cfg_out").exists());

    let flag_out = dir.path().join("flag_out");
    let o = run(bin().args(["solve", "--levels", "1", "--config"]).arg(&cfg).arg("--out").arg(&flag_out).env(OUT_ENV, &env_out));
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_out.join("solutions.csv").exists());
}

#[test]
fn report_regenerates_tables_from_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), MINI);
    let o = run(bin().args(["sweep", "--config"]).arg(&cfg).arg("--out").arg(dir.path()));
    let code = o.status.code().unwrap();
    assert!(code == 0 || code == 1, "{code}");
    let est = dir.path().join("estimates.csv");
    let before = std::fs::read(&est).unwrap();
    std::fs::remove_file(&est).unwrap();
    std::fs::remove_dir_all(dir.path().join("plots")).unwrap();
    let o = run(bin().args(["report", "--out"]).arg(dir.path()));
    assert_eq!(o.status.code(), Some(code));
    assert_eq!(std::fs::read(&est).unwrap(), before);
    assert!(dir.path().join("plots/bounds_cav_fourier_mode_2.svg").exists());
    assert_eq!(run(bin().args(["report", "--out"]).arg(dir.path().join("missing"))).status.code(), Some(2));
}

#[test]
fn solver_failure_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = MINI.replace("[[loads]]", "[solver]\ntype = \"cg\"\nmax_iter = 2\n\n[[loads]]").replace("levels = 2", "levels = 1");
    let cfg = write_config(dir.path(), &text);
    let o = run(bin().args(["solve", "--config"]).arg(&cfg).arg("--out").arg(dir.path()));
    assert_eq!(o.status.code(), Some(3));
}
