//! TOML problem configuration and run manifests.

use std::path::{Path as FsPath, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use equicontrol::verify::SuiteOptions;
use equicontrol::{
    CoefficientSet, DiscreteLaw, FourierDensity, ObjectiveSpec, Path, Penalty, SolverKind,
    SolverOptions, TimeGrid,
};

fn default_grid() -> usize {
    512
}

fn default_kappa() -> f64 {
    1.0
}

fn zero_path() -> PathConfig {
    PathConfig::Constant(0.0)
}

fn is_default<T: Default + PartialEq>(v: &T) -> bool {
    *v == T::default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub horizon: f64,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub solver: SolverKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_min: Option<f64>,
    pub coefficients: CoefficientConfig,
    pub objective: ObjectiveConfig,
    #[serde(default)]
    pub solver_options: SolverOptions,
    #[serde(default)]
    pub verification: SuiteOptions,
    #[serde(default, skip_serializing_if = "is_default")]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    #[serde(default = "zero_path")]
    pub a: PathConfig,
    pub b: PathConfig,
    #[serde(default = "zero_path")]
    pub c: PathConfig,
    pub d: PathConfig,
    #[serde(default = "zero_path")]
    pub f: PathConfig,
}

/// A bare number is a constant path; otherwise a one-key table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PathConfig {
    Constant(f64),
    Shaped(ShapedPath),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapedPath {
    /// Coefficients in increasing powers of `t`.
    Polynomial(Vec<f64>),
    Exponential {
        scale: f64,
        rate: f64,
        #[serde(default)]
        shift: f64,
    },
    /// Uniform samples over `[0, horizon]`.
    Sampled(Vec<f64>),
}

impl PathConfig {
    fn to_path(&self, horizon: f64) -> Path {
        match self {
            PathConfig::Constant(v) => Path::Constant(*v),
            PathConfig::Shaped(ShapedPath::Polynomial(c)) => Path::Polynomial(c.clone()),
            PathConfig::Shaped(ShapedPath::Exponential { scale, rate, shift }) => {
                Path::Exponential { scale: *scale, rate: *rate, shift: *shift }
            }
            PathConfig::Shaped(ShapedPath::Sampled(values)) => {
                Path::Sampled { horizon, values: values.clone() }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    /// `weights[i]` is the weight on the central moment of order `i + 2`.
    MomentCombo {
        #[serde(default = "default_kappa")]
        kappa: f64,
        weights: Vec<f64>,
    },
    Standardized {
        #[serde(default = "default_kappa")]
        kappa: f64,
        weights: Vec<f64>,
    },
    Exp {
        #[serde(default = "default_kappa")]
        kappa: f64,
        c: f64,
    },
    Cosh {
        #[serde(default = "default_kappa")]
        kappa: f64,
        c: f64,
    },
    Cos {
        #[serde(default = "default_kappa")]
        kappa: f64,
        c: f64,
    },
    /// `support` lists `[h, p]` pairs.
    AmbiguousCos {
        #[serde(default = "default_kappa")]
        kappa: f64,
        support: Vec<(f64, f64)>,
    },
    Fourier {
        #[serde(default = "default_kappa")]
        kappa: f64,
        h_max: f64,
        values: Vec<f64>,
        #[serde(default)]
        atom: f64,
    },
}

impl ObjectiveConfig {
    pub fn to_spec(&self) -> Result<ObjectiveSpec> {
        let spec = match self {
            ObjectiveConfig::MomentCombo { kappa, weights } => {
                ObjectiveSpec::moment_combo(*kappa, weights.clone())
            }
            ObjectiveConfig::Standardized { kappa, weights } => {
                ObjectiveSpec::standardized(*kappa, weights.clone())
            }
            ObjectiveConfig::Exp { kappa, c } => {
                ObjectiveSpec::penalty(*kappa, Penalty::Exp { c: *c })
            }
            ObjectiveConfig::Cosh { kappa, c } => {
                ObjectiveSpec::penalty(*kappa, Penalty::Cosh { c: *c })
            }
            ObjectiveConfig::Cos { kappa, c } => {
                ObjectiveSpec::penalty(*kappa, Penalty::Cos { c: *c })
            }
            ObjectiveConfig::AmbiguousCos { kappa, support } => {
                let law = DiscreteLaw::new(support.clone())?;
                ObjectiveSpec::penalty(*kappa, Penalty::AmbiguousCos(law))
            }
            ObjectiveConfig::Fourier { kappa, h_max, values, atom } => {
                let density = FourierDensity { h_max: *h_max, values: values.clone(), atom: *atom };
                ObjectiveSpec::penalty(*kappa, Penalty::Fourier(density))
            }
        };
        spec.context("invalid objective")
    }

    fn kappa_mut(&mut self) -> &mut f64 {
        match self {
            ObjectiveConfig::MomentCombo { kappa, .. }
            | ObjectiveConfig::Standardized { kappa, .. }
            | ObjectiveConfig::Exp { kappa, .. }
            | ObjectiveConfig::Cosh { kappa, .. }
            | ObjectiveConfig::Cos { kappa, .. }
            | ObjectiveConfig::AmbiguousCos { kappa, .. }
            | ObjectiveConfig::Fourier { kappa, .. } => kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

/// Parameters `sweep` can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepParam {
    Kappa,
    C,
    #[value(name = "kappa_2")]
    Kappa2,
    #[value(name = "kappa_4")]
    Kappa4,
    #[value(name = "T")]
    Horizon,
}

impl SweepParam {
    pub fn name(self) -> &'static str {
        match self {
            SweepParam::Kappa => "kappa",
            SweepParam::C => "c",
            SweepParam::Kappa2 => "kappa_2",
            SweepParam::Kappa4 => "kappa_4",
            SweepParam::Horizon => "T",
        }
    }
}

impl ProblemConfig {
    pub fn coefficients(&self) -> Result<CoefficientSet> {
        let grid = TimeGrid::new(self.horizon, self.grid).context("invalid time grid")?;
        let h = self.horizon;
        let c = &self.coefficients;
        let paths = [&c.a, &c.b, &c.c, &c.d, &c.f].map(|p| p.to_path(h));
        let [a, b, cc, d, f] = paths;
        let set = match self.d_min {
            Some(d_min) => CoefficientSet::with_d_min(grid, a, b, cc, d, f, d_min),
            None => CoefficientSet::new(grid, a, b, cc, d, f),
        };
        set.context("invalid coefficients")
    }

    /// A copy with one parameter replaced.
    pub fn with_param(&self, param: SweepParam, value: f64) -> Result<Self> {
        let mut out = self.clone();
        let set_weight = |objective: &mut ObjectiveConfig, slot: usize| -> Result<()> {
            match objective {
                ObjectiveConfig::MomentCombo { weights, .. }
                | ObjectiveConfig::Standardized { weights, .. } => {
                    if weights.len() <= slot {
                        weights.resize(slot + 1, 0.0);
                    }
                    weights[slot] = value;
                    Ok(())
                }
                _ => bail!(
                    "parameter {} needs a moment_combo or standardized objective",
                    param.name()
                ),
            }
        };
        match param {
            SweepParam::Kappa => *out.objective.kappa_mut() = value,
            SweepParam::C => match &mut out.objective {
                ObjectiveConfig::Exp { c, .. }
                | ObjectiveConfig::Cosh { c, .. }
                | ObjectiveConfig::Cos { c, .. } => *c = value,
                _ => bail!("parameter c needs an exp, cosh or cos objective"),
            },
            SweepParam::Kappa2 => set_weight(&mut out.objective, 0)?,
            SweepParam::Kappa4 => set_weight(&mut out.objective, 2)?,
            SweepParam::Horizon => out.horizon = value,
        }
        Ok(out)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).context("serializing config")
    }

    /// SHA-256 of the canonical TOML form.
    pub fn digest(&self) -> Result<String> {
        Ok(sha256_hex(self.to_toml()?.as_bytes()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunInfo {
    pub command: String,
    pub version: String,
    /// SHA-256 of the file the run was started from.
    pub source_sha256: String,
    /// SHA-256 of the effective config embedded below.
    pub config_sha256: String,
    pub solver_used: SolverKind,
    pub artifacts: Vec<String>,
}

/// Written next to the artifacts; accepted anywhere a config is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub run: RunInfo,
    pub config: ProblemConfig,
}

/// Loads a config file or a manifest. Returns the config and the SHA-256 of
/// the file bytes.
pub fn load(path: &FsPath) -> Result<(ProblemConfig, String)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let text =
        std::str::from_utf8(&bytes).with_context(|| format!("{} is not UTF-8", path.display()))?;
    let table: toml::Table =
        toml::from_str(text).with_context(|| format!("parsing {}", path.display()))?;
    let config = if table.contains_key("run") && table.contains_key("config") {
        let manifest: Manifest =
            toml::from_str(text).with_context(|| format!("parsing manifest {}", path.display()))?;
        manifest.config
    } else {
        toml::from_str(text).with_context(|| format!("parsing config {}", path.display()))?
    };
    Ok((config, sha256_hex(&bytes)))
}
