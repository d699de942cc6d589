//! JSON run configuration. Every section is optional and defaults to the
//! reference setting: Beta(3, 3) prior, P = 2, σ² = 0.5, BPSK.

use std::fs;
use std::path::{Path, PathBuf};

use isac_core::{Estimator, Modulation, SimConfig, Sweep, TwoBandModel};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    TwoBandGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub family: Family,
    pub a: f64,
    pub b: f64,
    #[serde(rename = "P")]
    pub power: f64,
    pub sigma2: f64,
    pub modulation: Modulation,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            family: Family::TwoBandGaussian,
            a: 3.0,
            b: 3.0,
            power: 2.0,
            sigma2: 0.5,
            modulation: Modulation::Bpsk,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub steps: usize,
    /// Append the `t1 = 0` and `t1 = 1` limit rows to the region output.
    pub include_endpoints: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { t_min: 0.01, t_max: 0.99, steps: 99, include_endpoints: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    pub n_list: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    pub estimator: Estimator,
    pub fast_path: bool,
    pub workers: Option<usize>,
}

impl Default for SimSection {
    fn default() -> Self {
        Self {
            n_list: vec![100, 1_000, 10_000, 100_000],
            trials: 20_000,
            seed: 1,
            estimator: Estimator::Map,
            fast_path: true,
            workers: None,
        }
    }
}

/// The single design evaluated by `fisher`, `bounds` and `simulate`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub t1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub format: Format,
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub sweep: SweepConfig,
    pub sim: SimSection,
    pub design: DesignConfig,
    pub output: OutputConfig,
}

fn field(path: &str, msg: impl Into<String>) -> CliError {
    CliError::Config { path: path.to_string(), msg: msg.into() }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            field(if path == "." { "<root>" } else { &path }, e.inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| field("<file>", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let m = &self.model;
        if !(m.a > 2.0 && m.a.is_finite()) {
            return Err(field("model.a", format!("must be finite and exceed 2, got {}", m.a)));
        }
        if m.b != m.a {
            return Err(field("model.b", format!("must equal model.a for the two-band model, got {}", m.b)));
        }
        if !(m.power > 0.0 && m.power.is_finite()) {
            return Err(field("model.P", format!("must be positive, got {}", m.power)));
        }
        if !(m.sigma2 > 0.0 && m.sigma2.is_finite()) {
            return Err(field("model.sigma2", format!("must be positive, got {}", m.sigma2)));
        }
        let s = &self.sweep;
        if !(0.0 < s.t_min && s.t_min < 1.0) {
            return Err(field("sweep.t_min", format!("must lie in (0, 1), got {}", s.t_min)));
        }
        if !(s.t_min < s.t_max && s.t_max < 1.0) {
            return Err(field("sweep.t_max", format!("must lie in (t_min, 1), got {}", s.t_max)));
        }
        if s.steps < 2 {
            return Err(field("sweep.steps", format!("must be at least 2, got {}", s.steps)));
        }
        let sim = &self.sim;
        if sim.n_list.is_empty() {
            return Err(field("sim.n_list", "must not be empty"));
        }
        if let Some(i) = sim.n_list.iter().position(|&n| n == 0) {
            return Err(field(&format!("sim.n_list[{i}]"), "block length must be at least 1"));
        }
        if !sim.n_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(field("sim.n_list", "must be strictly increasing"));
        }
        if sim.trials < 2 {
            return Err(field("sim.trials", format!("must be at least 2, got {}", sim.trials)));
        }
        if sim.workers == Some(0) {
            return Err(field("sim.workers", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.design.t1) {
            return Err(field("design.t1", format!("must lie in [0, 1], got {}", self.design.t1)));
        }
        Ok(())
    }

    pub fn model(&self) -> Result<TwoBandModel, CliError> {
        let m = &self.model;
        TwoBandModel::symmetric(m.a, m.power, m.sigma2, m.modulation).map_err(|e| field("model", e.to_string()))
    }

    pub fn sweep(&self) -> Sweep {
        Sweep { t_min: self.sweep.t_min, t_max: self.sweep.t_max, steps: self.sweep.steps }
    }

    pub fn sim_config(&self) -> Result<SimConfig, CliError> {
        Ok(SimConfig {
            model: self.model()?,
            t1: self.design.t1,
            estimator: self.sim.estimator,
            n_list: self.sim.n_list.clone(),
            trials: self.sim.trials,
            seed: self.sim.seed,
            fast_path: self.sim.fast_path,
            workers: self.sim.workers,
        })
    }
}
