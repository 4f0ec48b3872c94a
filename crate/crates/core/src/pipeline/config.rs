use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::{LoadPreset, ShearRule};
use crate::error::{Error, Result};
use crate::estimates::HypothesisParams;
use crate::geometry::{DefectShape, DomainSpec, Point2};
use crate::material::PlateMaterial;
use crate::solvers::{ProblemKind, SolverOptions};
use crate::verify::ConstantName;

/// Environment variable that overrides the configured output directory.
pub const OUT_ENV: &str = "MINDLIN_SIZE_OUT";

fn default_levels() -> usize {
    1
}

fn default_target_h() -> f64 {
    0.05
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    /// Number of mesh levels; level k is the base mesh refined k times.
    #[serde(default = "default_levels")]
    pub levels: usize,
    /// Worker threads for independent instances; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Base mesh size for the plain plate (LPS probe and constants).
    #[serde(default = "default_target_h")]
    pub target_h: f64,
    /// Level at which field plots are drawn; `None` disables them.
    #[serde(default)]
    pub plot_level: Option<usize>,
    pub domain: DomainSpec,
    pub material: MaterialConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub hypotheses: HypothesisConfig,
    pub loads: Vec<LoadPreset>,
    #[serde(default)]
    pub families: Vec<FamilyConfig>,
    #[serde(default)]
    pub constants: Option<ConstantsConfig>,
    #[serde(default)]
    pub lps: Option<LpsConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub lambda: f64,
    pub mu: f64,
    pub h: f64,
    #[serde(default)]
    pub alpha0: Option<f64>,
    #[serde(default)]
    pub gamma0: Option<f64>,
    #[serde(default)]
    pub alpha1: Option<f64>,
}

impl MaterialConfig {
    pub fn material(&self) -> PlateMaterial {
        let m = PlateMaterial::uniform(self.lambda, self.mu, self.h);
        let (a0, g0, a1) = (m.lame.alpha0, m.lame.gamma0, m.lame.alpha1);
        m.with_bounds(self.alpha0.unwrap_or(a0), self.gamma0.unwrap_or(g0), self.alpha1.unwrap_or(a1))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    #[serde(flatten)]
    pub options: SolverOptions,
    #[serde(default)]
    pub shear_rule: ShearRule,
}


#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisConfig {
    pub h1: f64,
    pub q_d_max: f64,
    #[serde(default)]
    pub f_max: Option<f64>,
    pub d0: f64,
}

impl Default for HypothesisConfig {
    fn default() -> Self {
        HypothesisConfig { h1: 0.05, q_d_max: 4.0, f_max: None, d0: 0.1 }
    }
}

impl HypothesisConfig {
    pub fn params(&self) -> HypothesisParams {
        HypothesisParams { h1: self.h1, q_d_max: self.q_d_max, f_max: self.f_max }
    }
}

/// Concentric defects of one shape with growing size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    /// `rectangle` (squares of the given sides) or `disc` (the given radii).
    pub shape: String,
    pub center: Point2,
    pub sizes: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub name: String,
    /// `reference`, `cavity` or `rigid`.
    pub kind: ProblemKind,
    pub target_h: f64,
    /// Replaces the top-level domain for this family.
    #[serde(default)]
    pub domain: Option<DomainSpec>,
    #[serde(default)]
    pub defects: Vec<DefectShape>,
    #[serde(default)]
    pub ladder: Option<Ladder>,
}

impl FamilyConfig {
    pub fn members(&self) -> Result<Vec<Option<DefectShape>>> {
        let mut out: Vec<Option<DefectShape>> = self.defects.iter().cloned().map(Some).collect();
        if let Some(l) = &self.ladder {
            for &s in &l.sizes {
                out.push(Some(match l.shape.as_str() {
                    "rectangle" => DefectShape::Rectangle { center: l.center, a: s, b: s },
                    "disc" => DefectShape::Disc { center: l.center, radius: s },
                    other => return Err(Error::Config(format!("families.{}.ladder.shape: unknown shape '{other}'", self.name))),
                }));
            }
        }
        match self.kind {
            ProblemKind::Reference if out.is_empty() => Ok(vec![None]),
            ProblemKind::Reference => Err(Error::Config(format!("families.{}: reference families take no defects", self.name))),
            ProblemKind::DirichletExtension => Err(Error::Config(format!("families.{}.kind: not a runnable family", self.name))),
            _ if out.is_empty() => Err(Error::Config(format!("families.{}: no defects", self.name))),
            _ => Ok(out),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsConfig {
    pub names: Vec<ConstantName>,
    #[serde(default = "one")]
    pub rho: f64,
    /// Annulus used for the trace inequality: outer and inner radius and mesh size.
    #[serde(default = "default_annulus")]
    pub annulus: [f64; 3],
}

fn one() -> f64 {
    1.0
}

fn default_annulus() -> [f64; 3] {
    [1.0, 0.3, 0.1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpsConfig {
    pub rho: f64,
    #[serde(default = "half")]
    pub theta: f64,
    /// Corners of the center grid and the points per side.
    pub min: Point2,
    pub max: Point2,
    pub n: usize,
}

fn half() -> f64 {
    0.5
}

impl LpsConfig {
    pub fn centers(&self) -> Vec<Point2> {
        let step = |a: f64, b: f64, i: usize| if self.n > 1 { a + (b - a) * i as f64 / (self.n - 1) as f64 } else { 0.5 * (a + b) };
        (0..self.n)
            .flat_map(|j| (0..self.n).map(move |i| Point2::new(step(self.min.x, self.max.x, i), step(self.min.y, self.max.y, j))))
            .collect()
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            e => e,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |k: &str, m: &str| Err(Error::Config(format!("{k}: {m}")));
        if self.levels == 0 {
            return bad("levels", "must be at least 1");
        }
        if !(self.target_h > 0.0) {
            return bad("target_h", "must be positive");
        }
        if self.loads.is_empty() {
            return bad("loads", "at least one load preset is required");
        }
        if !(self.material.h > 0.0) {
            return bad("material.h", "must be positive");
        }
        self.domain.validate().map_err(|e| Error::Config(format!("domain: {e}")))?;
        let mut names = std::collections::BTreeSet::new();
        for f in &self.families {
            if !names.insert(f.name.as_str()) {
                return bad("families.name", &format!("duplicate family '{}'", f.name));
            }
            if !(f.target_h > 0.0) {
                return bad(&format!("families.{}.target_h", f.name), "must be positive");
            }
            f.members()?;
        }
        if let Some(l) = &self.lps {
            if l.n == 0 || !(l.rho > 0.0) {
                return bad("lps", "needs n >= 1 and rho > 0");
            }
        }
        Ok(())
    }

    /// Flag beats environment beats config; the default is `out/<name>`.
    pub fn output_dir(&self, flag: Option<&Path>) -> PathBuf {
        if let Some(p) = flag {
            return p.to_path_buf();
        }
        if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
            return PathBuf::from(p);
        }
        self.out.clone().unwrap_or_else(|| Path::new("out").join(&self.name))
    }

    pub fn shear_rule(&self) -> ShearRule {
        self.solver.shear_rule
    }
}
