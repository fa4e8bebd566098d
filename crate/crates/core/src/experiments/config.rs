use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::initial_data::InitialData;
use crate::solvers::StepPolicy;
use crate::spectral::GridSpec;
use crate::state::ParamSet;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    ConvergenceLambda,
    PreparednessSweep,
    BenchmarkCost,
    ToyDemo,
    SingleRun,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::ConvergenceLambda => "convergence_lambda",
            Self::PreparednessSweep => "preparedness_sweep",
            Self::BenchmarkCost => "benchmark_cost",
            Self::ToyDemo => "toy_demo",
            Self::SingleRun => "single_run",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "default_n_points")]
    pub n_points: usize,
    #[serde(default = "default_domain_length")]
    pub domain_length: f64,
}

fn default_n_points() -> usize {
    256
}

fn default_domain_length() -> f64 {
    2.0 * PI
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { n_points: default_n_points(), domain_length: default_domain_length() }
    }
}

impl GridConfig {
    pub fn spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.domain_length, self.n_points)
    }
}

/// Physical parameters; `lambda` is a sweep list (a single entry for `single_run`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(default = "default_lambdas")]
    pub lambda: Vec<f64>,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_h_star")]
    pub h_star: f64,
}

fn default_lambdas() -> Vec<f64> {
    vec![1e3, 1e4, 1e5]
}

fn default_mu() -> f64 {
    0.1
}

fn default_nu() -> f64 {
    10.0
}

fn default_h_star() -> f64 {
    0.5
}

impl Default for ParamsConfig {
    fn default() -> Self {
        Self { lambda: default_lambdas(), mu: default_mu(), nu: default_nu(), h_star: default_h_star() }
    }
}

impl ParamsConfig {
    pub fn param_set(&self, lambda: f64) -> Result<ParamSet> {
        ParamSet::new(lambda, self.mu, self.nu, self.h_star)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Amplitude of the depth profile `1 + delta cos x`; the combined model
    /// is followed up to `t = 1/delta`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_toy_mu")]
    pub mu: Vec<f64>,
    #[serde(default = "default_orders")]
    pub orders: Vec<u32>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_delta() -> f64 {
    0.1
}

fn default_toy_mu() -> Vec<f64> {
    vec![1.0, 0.1, 0.01]
}

fn default_orders() -> Vec<u32> {
    vec![1, 2]
}

fn default_samples() -> usize {
    401
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            delta: default_delta(),
            mu: default_toy_mu(),
            orders: default_orders(),
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    /// Steps timed per repeat.
    #[serde(default = "default_steps")]
    pub steps: usize,
}

fn default_repeats() -> usize {
    5
}

fn default_steps() -> usize {
    20
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        Self { repeats: default_repeats(), steps: default_steps() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// May be omitted when the experiment is chosen on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experiment: Option<ExperimentKind>,
    /// Preparation orders swept by `preparedness_sweep`; `single_run` uses the first.
    #[serde(default = "default_prep_orders")]
    pub prep_orders: Vec<u32>,
    /// Sobolev index of the reported norms.
    #[serde(default = "default_norm_index")]
    pub norm_index: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub initial_data: InitialData,
    #[serde(default)]
    pub policy: StepPolicy,
    #[serde(default)]
    pub toy: ToyConfig,
    #[serde(default)]
    pub benchmark: BenchmarkConfig,
}

fn default_prep_orders() -> Vec<u32> {
    vec![0, 1, 2]
}

fn default_norm_index() -> f64 {
    1.0
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: None,
            prep_orders: default_prep_orders(),
            norm_index: default_norm_index(),
            output_dir: None,
            grid: GridConfig::default(),
            params: ParamsConfig::default(),
            initial_data: InitialData::default(),
            policy: StepPolicy::default(),
            toy: ToyConfig::default(),
            benchmark: BenchmarkConfig::default(),
        }
    }
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config { path: path.to_string(), message: message.into() }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.spec().map_err(|e| config_error("grid", e.to_string()))?;
        if self.params.lambda.is_empty() {
            return Err(config_error("params.lambda", "sweep list is empty"));
        }
        for &lambda in &self.params.lambda {
            self.params.param_set(lambda).map_err(|e| config_error("params", e.to_string()))?;
        }
        if self.prep_orders.is_empty() {
            return Err(config_error("prep_orders", "sweep list is empty"));
        }
        if let Some(&m) = self.prep_orders.iter().find(|&&m| m > 2) {
            return Err(config_error("prep_orders", format!("order {m} is not available (m <= 2)")));
        }
        if !(self.norm_index >= 0.0 && self.norm_index.is_finite()) {
            return Err(config_error("norm_index", "must be non-negative"));
        }
        self.policy.validate().map_err(|e| config_error("policy", e.to_string()))?;

        let d = &self.initial_data;
        if !d.amplitude.is_finite() || d.amplitude < 0.0 {
            return Err(config_error("initial_data.amplitude", "must be finite and non-negative"));
        }
        if !(d.width > 0.0 && d.width.is_finite()) {
            return Err(config_error("initial_data.width", "must be positive"));
        }
        let (zeta0, _) = d.fields(grid);
        let min_depth = 1.0 + zeta0.min();
        if min_depth < self.params.h_star {
            return Err(config_error(
                "initial_data.amplitude",
                format!("initial minimum depth {min_depth} is below the floor h_star = {}", self.params.h_star),
            ));
        }

        let t = &self.toy;
        if !(t.epsilon > 0.0 && t.epsilon.is_finite()) {
            return Err(config_error("toy.epsilon", "must be positive"));
        }
        if !(t.delta > 0.0 && t.delta < 1.0) {
            return Err(config_error("toy.delta", "must lie in (0, 1)"));
        }
        if t.mu.is_empty() {
            return Err(config_error("toy.mu", "sweep list is empty"));
        }
        if t.mu.iter().any(|&m| !(m >= 0.0 && m.is_finite())) {
            return Err(config_error("toy.mu", "entries must be non-negative"));
        }
        if t.orders.is_empty() {
            return Err(config_error("toy.orders", "sweep list is empty"));
        }
        if t.samples < 2 {
            return Err(config_error("toy.samples", "need at least 2 samples"));
        }
        if self.benchmark.repeats == 0 || self.benchmark.steps == 0 {
            return Err(config_error("benchmark", "repeats and steps must be positive"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Output(e.to_string()))
    }

    /// Hex SHA-256 of the canonical TOML form, written next to every row.
    pub fn hash(&self) -> String {
        let text = self.to_toml().unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_error(&path.display().to_string(), format!("cannot read: {e}")))?;
    parse_config_str(&text, &[])
}

/// Parses TOML text, applying `key=value` overrides (dotted keys, TOML values;
/// bare words are taken as strings) before deserializing.
pub fn parse_config_str(text: &str, overrides: &[String]) -> Result<ExperimentConfig> {
    let mut value: toml::Value = text.parse::<toml::Table>().map(toml::Value::Table).map_err(|e| {
        let message = e.message().to_string();
        config_error("<document>", message)
    })?;
    for o in overrides {
        apply_override(&mut value, o)?;
    }
    let cfg: ExperimentConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let path = e.path().to_string();
        config_error(&path, e.into_inner().to_string())
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config file and applies overrides.
pub fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<ExperimentConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| config_error(&p.display().to_string(), format!("cannot read: {e}")))?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}

fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| config_error(spec, "override must have the form key=value"))?;
    let key = key.trim();
    if key.is_empty() {
        return Err(config_error(spec, "empty override key"));
    }
    let raw = raw.trim();
    let parsed = format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut node = root;
    for (i, part) in parts.iter().enumerate() {
        let table = node
            .as_table_mut()
            .ok_or_else(|| config_error(&parts[..i].join("."), "is not a table"))?;
        if i + 1 == parts.len() {
            table.insert(part.to_string(), parsed);
            return Ok(());
        }
        node = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    Ok(())
}
