use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::sensitivity::{CurveSettings, Kernel};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelName {
    Epanechnikov,
    Box,
}

/// Analysis settings, read from a flat TOML file.
///
/// ```toml
/// dataset = "lottery.csv"      # relative to the config file
/// treatment = "prize"
/// outcomes = ["earn0", "earn1"]
/// covariates = ["age", "educ"]
/// draws = 2000
/// alpha = 0.05
/// seed = 1
/// ```
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub dataset: PathBuf,
    pub treatment: String,
    /// Optional 0/1 winner column, audited against the treatment.
    #[serde(default)]
    pub winner: Option<String>,
    pub outcomes: Vec<String>,
    #[serde(default)]
    pub covariates: Vec<String>,
    #[serde(default = "default_draws")]
    pub draws: usize,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_zeta_lo")]
    pub zeta_lo: f64,
    #[serde(default = "default_zeta_hi")]
    pub zeta_hi: f64,
    /// Absent: `(zeta_hi − zeta_lo) · grid_points^(−1/3)`.
    #[serde(default)]
    pub bandwidth: Option<f64>,
    #[serde(default = "default_kernel")]
    pub kernel: KernelName,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Row count expected after dropping incomplete records.
    #[serde(default)]
    pub expected_rows: Option<usize>,
}

fn default_draws() -> usize {
    2000
}
fn default_alpha() -> f64 {
    0.05
}
fn default_grid_points() -> usize {
    4000
}
fn default_zeta_lo() -> f64 {
    -0.99
}
fn default_zeta_hi() -> f64 {
    0.99
}
fn default_kernel() -> KernelName {
    KernelName::Epanechnikov
}
fn default_seed() -> u64 {
    1
}

impl AnalysisConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: AnalysisConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads and validates a config file; a relative `dataset` is resolved
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::from_toml_str(&text)?;
        if config.dataset.is_relative() {
            if let Some(dir) = path.parent() {
                config.dataset = dir.join(&config.dataset);
            }
        }
        Ok(config)
    }

    /// Default settings for a file written by
    /// [`dataset_csv`](super::ingest::dataset_csv).
    pub fn for_columns(dataset: PathBuf, years: usize, covariates: usize) -> Self {
        Self {
            dataset,
            treatment: "prize".into(),
            winner: None,
            outcomes: (0..years).map(|j| format!("y{j}")).collect(),
            covariates: (0..covariates).map(|k| format!("x{k}")).collect(),
            draws: default_draws(),
            alpha: default_alpha(),
            grid_points: default_grid_points(),
            zeta_lo: default_zeta_lo(),
            zeta_hi: default_zeta_hi(),
            bandwidth: None,
            kernel: default_kernel(),
            seed: default_seed(),
            expected_rows: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.draws < 1 {
            return Err(Error::Config("draws must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if self.outcomes.is_empty() {
            return Err(Error::Config("no outcome columns".into()));
        }
        self.curve_settings()
            .validate()
            .map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies command-line overrides and re-validates.
    pub fn with_overrides(mut self, seed: Option<u64>, draws: Option<usize>, alpha: Option<f64>) -> Result<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(r) = draws {
            self.draws = r;
        }
        if let Some(a) = alpha {
            self.alpha = a;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn curve_settings(&self) -> CurveSettings {
        CurveSettings {
            grid_points: self.grid_points,
            lo: self.zeta_lo,
            hi: self.zeta_hi,
            bandwidth: self.bandwidth,
            kernel: match self.kernel {
                KernelName::Epanechnikov => Kernel::Epanechnikov,
                KernelName::Box => Kernel::Box,
            },
        }
    }
}
