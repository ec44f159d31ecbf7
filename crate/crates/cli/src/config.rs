use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "CONE_MT_OUT";
pub const DEFAULT_OUT: &str = "cone-mt-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    MellinCheck,
    MtSharpness,
    MtSubcritical,
    OneDReduction,
    ScaleInvariance,
    PolyaSzego,
    Eigen,
    MpSolve,
    F5Constant,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::MellinCheck,
        Experiment::MtSharpness,
        Experiment::MtSubcritical,
        Experiment::OneDReduction,
        Experiment::ScaleInvariance,
        Experiment::PolyaSzego,
        Experiment::Eigen,
        Experiment::MpSolve,
        Experiment::F5Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::MellinCheck => "mellin-check",
            Experiment::MtSharpness => "mt-sharpness",
            Experiment::MtSubcritical => "mt-subcritical",
            Experiment::OneDReduction => "one-d-reduction",
            Experiment::ScaleInvariance => "scale-invariance",
            Experiment::PolyaSzego => "polya-szego",
            Experiment::Eigen => "eigen",
            Experiment::MpSolve => "mp-solve",
            Experiment::F5Constant => "f5-constant",
        }
    }

    /// Grid used when the config gives none; `None` for experiments that
    /// work on one-dimensional data only.
    pub fn default_grid(self) -> Option<GridConfig> {
        let g = |r_max| Some(GridConfig { nr: 257, ny: 257, r_max });
        match self {
            Experiment::MellinCheck | Experiment::MtSharpness | Experiment::F5Constant => None,
            Experiment::MtSubcritical
            | Experiment::OneDReduction
            | Experiment::ScaleInvariance
            | Experiment::PolyaSzego => g(1.0),
            Experiment::Eigen | Experiment::MpSolve => g(4.0),
        }
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub nr: usize,
    pub ny: usize,
    pub r_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub params: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
}

impl ExperimentConfig {
    /// Defaults for `experiment`: its standard grid, no parameter overrides, seed 0.
    pub fn new(experiment: Experiment) -> Self {
        Self {
            experiment,
            grid: experiment.default_grid(),
            params: Map::new(),
            output_dir: None,
            seed: 0,
        }
    }

    pub fn with_param(mut self, key: &str, value: Value) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_grid(mut self, nr: usize, ny: usize, r_max: f64) -> Self {
        self.grid = Some(GridConfig { nr, ny, r_max });
        self
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CliError::Usage(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Fills the default grid and checks every field; the experiment's typed
    /// parameters are checked when it runs.
    pub fn resolved(mut self) -> Result<Self> {
        match (self.grid, self.experiment.default_grid()) {
            (Some(_), None) => {
                return Err(CliError::Usage(format!("{} takes no grid", self.experiment)));
            }
            (None, d) => self.grid = d,
            (Some(g), Some(_)) => {
                if g.nr < 5 || g.ny < 5 {
                    return Err(CliError::Usage(format!("grid needs nr, ny >= 5, got {} x {}", g.nr, g.ny)));
                }
                if !(g.r_max > 0.0 && g.r_max.is_finite()) {
                    return Err(CliError::Usage(format!("grid r_max must be positive, got {}", g.r_max)));
                }
            }
        }
        Ok(self)
    }

    pub fn grid(&self) -> Result<GridConfig> {
        self.grid
            .or(self.experiment.default_grid())
            .ok_or_else(|| CliError::Usage(format!("{} takes no grid", self.experiment)))
    }

    /// Parses `params` into the experiment's parameter type, unknown keys rejected.
    pub fn params<T: DeserializeOwned>(&self) -> Result<T> {
        serde_json::from_value(Value::Object(self.params.clone()))
            .map_err(|e| CliError::Usage(format!("{} params: {e}", self.experiment)))
    }

    /// Output directory: explicit field, else `$CONE_MT_OUT`, else `cone-mt-out`.
    pub fn output_root(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}

/// Parses a `key=value` override; the value is read as JSON and falls back
/// to a plain string.
pub fn parse_override(text: &str) -> Result<(String, Value)> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("override `{text}` is not key=value")))?;
    if k.is_empty() {
        return Err(CliError::Usage(format!("override `{text}` has an empty key")));
    }
    let value = serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.to_string()));
    Ok((k.to_string(), value))
}
