//! Experiment configuration: one JSON document naming the catalog, the
//! scenario and a list of named runs, each selecting an adaptation
//! algorithm and a routing policy.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hassim_core::{AdaptationParams, AlgorithmConfig, ControllerParams, PolicyKind, SaraParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Catalog JSON, relative to the config file.
    pub catalog: PathBuf,
    /// Scenario JSON, relative to the config file.
    pub scenario: PathBuf,
    pub runs: Vec<RunSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSpec {
    pub name: String,
    pub algorithm: AlgorithmSpec,
    pub policy: PolicySpec,
    #[serde(default)]
    pub start_version: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum AlgorithmSpec {
    Vasr {
        #[serde(flatten)]
        params: AdaptationParams,
    },
    Aggressive {
        #[serde(default = "default_buffer_cap_s")]
        buffer_cap_s: f64,
    },
    Sara {
        #[serde(flatten)]
        params: SaraParams,
    },
}

fn default_buffer_cap_s() -> f64 {
    50.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum PolicySpec {
    Fixed,
    Spr {
        #[serde(default = "default_switch_period_s")]
        switch_period_s: f64,
        #[serde(default = "default_steady_multiplier")]
        steady_multiplier: u32,
    },
    Sar {
        #[serde(default = "default_switch_period_s")]
        switch_period_s: f64,
    },
    Sarm {
        #[serde(default = "default_switch_period_s")]
        switch_period_s: f64,
        #[serde(default = "default_monitor_threshold_kbps")]
        monitor_threshold_kbps: f64,
        #[serde(default = "default_monitor_interval_s")]
        monitor_interval_s: f64,
    },
}

fn default_switch_period_s() -> f64 {
    2.0
}

fn default_steady_multiplier() -> u32 {
    1
}

fn default_monitor_threshold_kbps() -> f64 {
    1000.0
}

fn default_monitor_interval_s() -> f64 {
    1.0
}

impl AlgorithmSpec {
    pub fn to_algorithm(&self) -> Result<AlgorithmConfig> {
        let alg = match self {
            AlgorithmSpec::Vasr { params } => {
                params.validate()?;
                AlgorithmConfig::Vasr(*params)
            }
            AlgorithmSpec::Aggressive { buffer_cap_s } => {
                if !buffer_cap_s.is_finite() || *buffer_cap_s <= 0.0 {
                    bail!("aggressive buffer_cap_s must be positive, got {buffer_cap_s}");
                }
                AlgorithmConfig::Aggressive {
                    buffer_cap_s: *buffer_cap_s,
                }
            }
            AlgorithmSpec::Sara { params } => {
                params.validate()?;
                AlgorithmConfig::Sara(*params)
            }
        };
        Ok(alg)
    }

    /// Buffer threshold used for the "time below low buffer" statistic.
    pub fn low_buffer_threshold_s(&self) -> f64 {
        match self {
            AlgorithmSpec::Vasr { params } => params.b_low_s,
            AlgorithmSpec::Sara { params } => params.b_alpha_s,
            AlgorithmSpec::Aggressive { .. } => 15.0,
        }
    }
}

impl PolicySpec {
    pub fn to_controller_params(&self) -> Result<ControllerParams> {
        let mut params = ControllerParams::fixed();
        match *self {
            PolicySpec::Fixed => {}
            PolicySpec::Spr {
                switch_period_s,
                steady_multiplier,
            } => {
                params.policy = PolicyKind::Spr;
                params.switch_period_s = switch_period_s;
                params.steady_multiplier = steady_multiplier;
            }
            PolicySpec::Sar { switch_period_s } => {
                params.policy = PolicyKind::Sar;
                params.switch_period_s = switch_period_s;
            }
            PolicySpec::Sarm {
                switch_period_s,
                monitor_threshold_kbps,
                monitor_interval_s,
            } => {
                params.policy = PolicyKind::Sarm;
                params.switch_period_s = switch_period_s;
                params.monitor_threshold_kbps = monitor_threshold_kbps;
                params.monitor_interval_s = monitor_interval_s;
            }
        }
        params.validate()?;
        Ok(params)
    }
}

impl ExperimentConfig {
    /// Parses the config and validates every run's parameters. Paths stay
    /// relative; resolve them against the config directory when loading.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let config: ExperimentConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs.is_empty() {
            bail!("config declares no runs");
        }
        for run in &self.runs {
            if run.name.is_empty()
                || !run
                    .name
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
            {
                bail!(
                    "run name {:?} must be non-empty and use only \
                     [A-Za-z0-9_-] (it names an output directory)",
                    run.name
                );
            }
            run.algorithm
                .to_algorithm()
                .with_context(|| format!("run {:?}: algorithm", run.name))?;
            run.policy
                .to_controller_params()
                .with_context(|| format!("run {:?}: policy", run.name))?;
        }
        let mut names: Vec<&str> = self.runs.iter().map(|r| r.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        if names.len() != self.runs.len() {
            bail!("run names must be unique");
        }
        Ok(())
    }
}
