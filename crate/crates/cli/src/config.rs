//! Experiment configuration: a versioned TOML document whose defaults
//! mirror the synthetic sparse-bias benchmark scenario.

use anyhow::{bail, Context, Result};
use proxyreg::estimators::{EstimatorKind, EstimatorSpec};
use proxyreg::solvers::LossFamily;
use proxyreg::synthgen::ScenarioConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Synthetic,
    Csv,
}

/// Proxy-response rescaling: off, a fixed factor, or estimated from a
/// hold-out slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProxyScale {
    Off,
    Auto,
    Factor(f64),
}

impl FromStr for ProxyScale {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(ProxyScale::Off),
            "auto" => Ok(ProxyScale::Auto),
            other => other
                .parse::<f64>()
                .map(ProxyScale::Factor)
                .map_err(|_| format!("expected 'auto', 'off', or a number, got '{other}'")),
        }
    }
}

impl Serialize for ProxyScale {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            ProxyScale::Off => ser.serialize_str("off"),
            ProxyScale::Auto => ser.serialize_str("auto"),
            ProxyScale::Factor(f) => ser.serialize_f64(*f),
        }
    }
}

impl<'de> Deserialize<'de> for ProxyScale {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(f) => Ok(ProxyScale::Factor(f)),
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlotFormat {
    Off,
    Svg,
}

impl FromStr for PlotFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "off" => Ok(PlotFormat::Off),
            "svg" => Ok(PlotFormat::Svg),
            other => Err(format!("expected 'off' or 'svg', got '{other}'")),
        }
    }
}

/// λ grid for cross-validation.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CvGrid {
    #[serde(default = "default_grid_min")]
    pub grid_min: f64,
    #[serde(default = "default_grid_max")]
    pub grid_max: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_true")]
    pub log_spaced: bool,
}

fn default_grid_min() -> f64 {
    1e-4
}
fn default_grid_max() -> f64 {
    10.0
}
fn default_grid_points() -> usize {
    30
}
fn default_true() -> bool {
    true
}

impl Default for CvGrid {
    fn default() -> Self {
        Self {
            grid_min: default_grid_min(),
            grid_max: default_grid_max(),
            grid_points: default_grid_points(),
            log_spaced: true,
        }
    }
}

impl CvGrid {
    pub fn values(&self) -> Vec<f64> {
        if self.log_spaced {
            proxyreg::estimators::log_spaced_grid(self.grid_min, self.grid_max, self.grid_points)
        } else {
            proxyreg::estimators::linear_grid(self.grid_min, self.grid_max, self.grid_points)
        }
    }

    /// The averaging estimator's λ lives in [0,1]; the configured range is
    /// replaced by a linear [0,1] grid with the same point count.
    pub fn averaging_values(&self) -> Vec<f64> {
        proxyreg::estimators::linear_grid(0.0, 1.0, self.grid_points.max(2))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.grid_min.is_finite() && self.grid_max.is_finite()) {
            bail!("grid bounds must be finite");
        }
        if self.grid_min >= self.grid_max {
            bail!("grid_min must be below grid_max");
        }
        if self.log_spaced && self.grid_min <= 0.0 {
            bail!("log-spaced grid needs grid_min > 0");
        }
        if self.grid_points < 2 {
            bail!("grid needs at least 2 points");
        }
        Ok(())
    }
}

/// One estimator entry: either a bare name (λ selected by CV) or a table
/// with an explicit λ and/or truncation bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EstimatorEntry {
    Name(String),
    Detailed {
        kind: String,
        #[serde(default)]
        lambda: Option<f64>,
        #[serde(default)]
        truncation_bound: Option<f64>,
    },
}

impl EstimatorEntry {
    pub fn to_spec(&self, loss: LossFamily) -> Result<EstimatorSpec> {
        let (kind_name, lambda, trunc) = match self {
            EstimatorEntry::Name(n) => (n.as_str(), None, None),
            EstimatorEntry::Detailed { kind, lambda, truncation_bound } => {
                (kind.as_str(), *lambda, *truncation_bound)
            }
        };
        let kind = EstimatorKind::from_str(kind_name).map_err(anyhow::Error::msg)?;
        let spec = EstimatorSpec { kind, loss, lambda, truncation_bound: trunc };
        spec.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CsvInputs {
    pub gold_path: PathBuf,
    pub proxy_path: PathBuf,
    pub target: String,
}

/// Full experiment description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    pub mode: Mode,
    #[serde(default)]
    pub loss: LossFamily,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_estimators")]
    pub estimators: Vec<EstimatorEntry>,
    #[serde(default)]
    pub standardize: bool,
    #[serde(default = "default_scale_proxy")]
    pub scale_proxy: ProxyScale,
    #[serde(default = "default_test_frac")]
    pub test_frac: f64,
    #[serde(default = "default_plot")]
    pub plot: PlotFormat,
    #[serde(default)]
    pub scenario: Option<ScenarioConfig>,
    #[serde(default)]
    pub cv: CvGrid,
    #[serde(default)]
    pub csv: Option<CsvInputs>,
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}
fn default_trials() -> usize {
    100
}
fn default_jobs() -> usize {
    1
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_scale_proxy() -> ProxyScale {
    ProxyScale::Off
}
fn default_test_frac() -> f64 {
    0.3
}
fn default_plot() -> PlotFormat {
    PlotFormat::Off
}
fn default_estimators() -> Vec<EstimatorEntry> {
    ["gold_ols", "proxy_ols", "averaging", "weighted", "joint", "oracle"]
        .iter()
        .map(|s| EstimatorEntry::Name(s.to_string()))
        .collect()
}

impl ExperimentConfig {
    pub fn synthetic_default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            mode: Mode::Synthetic,
            loss: LossFamily::Squared,
            trials: default_trials(),
            base_seed: 0,
            jobs: default_jobs(),
            output_dir: default_output_dir(),
            estimators: default_estimators(),
            standardize: false,
            scale_proxy: ProxyScale::Off,
            test_frac: default_test_frac(),
            plot: PlotFormat::Off,
            scenario: Some(ScenarioConfig::sparse_default(0)),
            cv: CvGrid::default(),
            csv: None,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn specs(&self) -> Result<Vec<EstimatorSpec>> {
        self.estimators.iter().map(|e| e.to_spec(self.loss)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            bail!(
                "unsupported schema_version {} (this build reads version {SCHEMA_VERSION})",
                self.schema_version
            );
        }
        if self.trials < 1 {
            bail!("trials must be >= 1");
        }
        if self.jobs < 1 {
            bail!("jobs must be >= 1");
        }
        if !(0.0 < self.test_frac && self.test_frac < 1.0) {
            bail!("test_frac must lie strictly between 0 and 1");
        }
        self.cv.validate()?;
        match self.mode {
            Mode::Synthetic => {
                let sc = self
                    .scenario
                    .as_ref()
                    .context("synthetic mode needs a [scenario] section")?;
                sc.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
            }
            Mode::Csv => {
                self.csv.as_ref().context("csv mode needs a [csv] section")?;
            }
        }
        self.specs()?;
        if let ProxyScale::Factor(f) = self.scale_proxy {
            if !(f.is_finite() && f != 0.0) {
                bail!("scale_proxy factor must be finite and nonzero");
            }
        }
        Ok(())
    }
}
