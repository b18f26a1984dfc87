//! Run configuration: defaults, `key = value` config files, and flag
//! overrides (flags win).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use slicecal_core::curves::{BinMode, BinningScheme, TEMPERATURE_GRID};
use slicecal_core::recalibrator::TrainConfig;

/// Everything a pipeline run needs, with defaults matching the toolkit's
/// standard experiment setup.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub seed: u64,
    /// Records per synthesized slice.
    pub n: usize,
    /// Few-shot examples per task.
    pub k: usize,
    pub train_count: usize,
    pub test_count: usize,
    /// Asymmetry coefficient of the training loss.
    pub beta: f64,
    pub bins: usize,
    pub bin_mode: BinMode,
    /// Target precisions evaluated by `eval-precision`.
    pub targets: Vec<f64>,
    /// Abstention costs evaluated by `eval-utility`.
    pub costs: Vec<f64>,
    /// Grid searched when fitting temperature-scaling baselines.
    pub temperature_grid: Vec<f64>,
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub hidden_dim: usize,
    /// Domains held out entirely for unseen-domain evaluation.
    pub holdout_domains: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            n: 1_000,
            k: 20,
            train_count: 20_000,
            test_count: 2_000,
            beta: 5.0,
            bins: 10,
            bin_mode: BinMode::EqualMass,
            targets: vec![0.85, 0.9, 0.95],
            costs: vec![0.4, 0.6],
            temperature_grid: TEMPERATURE_GRID.to_vec(),
            steps: 4_000,
            batch_size: 16,
            learning_rate: 2e-3,
            hidden_dim: 64,
            holdout_domains: Vec::new(),
        }
    }
}

/// A config-file or flag value that failed to parse or validate.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

impl RunConfig {
    pub fn scheme(&self) -> BinningScheme {
        BinningScheme {
            mode: self.bin_mode,
            num_bins: self.bins,
        }
    }

    /// The configured scheme with the bin count capped at the sample size,
    /// so equal-mass binning stays valid on very small sets (e.g. fitting a
    /// temperature on a few-shot set smaller than the bin count).
    pub fn scheme_for(&self, samples: usize) -> BinningScheme {
        BinningScheme {
            mode: self.bin_mode,
            num_bins: match self.bin_mode {
                BinMode::EqualMass => self.bins.min(samples.max(1)),
                BinMode::EqualWidth => self.bins,
            },
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            beta: self.beta,
            batch_size: self.batch_size,
            steps: self.steps,
            learning_rate: self.learning_rate,
            hidden_dim: self.hidden_dim,
            seed: self.seed,
        }
    }

    /// Loads a `key = value` file (one pair per line, `#` comments) and
    /// applies it over the current values.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        for (index, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!(
                    "{}:{}: expected `key = value`, got `{raw}`",
                    path.display(),
                    index + 1
                ))
            })?;
            self.apply_kv(key.trim(), value.trim())
                .map_err(|e| ConfigError(format!("{}:{}: {}", path.display(), index + 1, e.0)))?;
        }
        Ok(())
    }

    /// Applies one configuration key.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            value
                .parse()
                .map_err(|e| ConfigError(format!("{key}: {e}")))
        }
        fn parse_list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(|s| parse(key, s))
                .collect()
        }
        match key {
            "seed" => self.seed = parse(key, value)?,
            "n" => self.n = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "train_count" => self.train_count = parse(key, value)?,
            "test_count" => self.test_count = parse(key, value)?,
            "beta" => self.beta = parse(key, value)?,
            "bins" => self.bins = parse(key, value)?,
            "bin_mode" => {
                self.bin_mode = match value {
                    "equal-mass" => BinMode::EqualMass,
                    "equal-width" => BinMode::EqualWidth,
                    other => {
                        return Err(ConfigError(format!(
                            "bin_mode: expected equal-mass or equal-width, got {other}"
                        )))
                    }
                }
            }
            "targets" => self.targets = parse_list(key, value)?,
            "costs" => self.costs = parse_list(key, value)?,
            "temperature_grid" => self.temperature_grid = parse_list(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "hidden_dim" => self.hidden_dim = parse(key, value)?,
            "holdout_domains" => {
                self.holdout_domains = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect()
            }
            other => return Err(ConfigError(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Checks the config invariants shared by all subcommands.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("n", self.n),
            ("k", self.k),
            ("train_count", self.train_count),
            ("test_count", self.test_count),
            ("bins", self.bins),
            ("steps", self.steps),
            ("batch_size", self.batch_size),
            ("hidden_dim", self.hidden_dim),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(ConfigError(format!("{name} must be positive")));
            }
        }
        if self.k > self.n {
            return Err(ConfigError(format!(
                "k ({}) must not exceed n ({})",
                self.k, self.n
            )));
        }
        if self.beta < 1.0 {
            return Err(ConfigError(format!("beta must be >= 1, got {}", self.beta)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(ConfigError(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.targets.is_empty() {
            return Err(ConfigError("targets must be non-empty".into()));
        }
        for &t in &self.targets {
            if !(t > 0.0 && t <= 1.0) {
                return Err(ConfigError(format!("target {t} outside (0, 1]")));
            }
        }
        for &c in &self.costs {
            if !(0.0..=1.0).contains(&c) {
                return Err(ConfigError(format!("cost {c} outside [0, 1]")));
            }
        }
        for &t in &self.temperature_grid {
            if !(t > 0.0 && t.is_finite()) {
                return Err(ConfigError(format!("temperature {t} must be positive")));
            }
        }
        Ok(())
    }

    /// The effective configuration as a JSON value, for manifests.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes infallibly")
    }
}

/// Raw flag overrides collected from the command line; applied after any
/// config file so flags win.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub entries: BTreeMap<&'static str, String>,
}

impl Overrides {
    pub fn set<T: ToString>(&mut self, key: &'static str, value: &Option<T>) {
        if let Some(v) = value {
            self.entries.insert(key, v.to_string());
        }
    }

    pub fn set_list<T: ToString>(&mut self, key: &'static str, value: &Option<Vec<T>>) {
        if let Some(vs) = value {
            let joined = vs
                .iter()
                .map(ToString::to_string)
                .collect::<Vec<_>>()
                .join(",");
            self.entries.insert(key, joined);
        }
    }

    pub fn apply(&self, config: &mut RunConfig) -> Result<(), ConfigError> {
        for (key, value) in &self.entries {
            config.apply_kv(key, value)?;
        }
        Ok(())
    }
}
