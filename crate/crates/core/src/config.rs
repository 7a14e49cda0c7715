//! Experiment configuration: a small TOML dialect with strict validation.
//! Unknown keys, unknown names, and out-of-range values are all hard errors;
//! a config that parses is a config that runs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{DoorsSpec, Env};
use crate::error::{Error, Result};
use crate::merge::StrategyKind;
use crate::nn::{MlpSpec, NetPreset, OptimKind};
use crate::ppo::LossConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvName {
    Cartpole,
    Doors,
}

impl EnvName {
    pub fn name(self) -> &'static str {
        match self {
            EnvName::Cartpole => "cartpole",
            EnvName::Doors => "doors",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "cartpole" => Ok(EnvName::Cartpole),
            "doors" => Ok(EnvName::Doors),
            other => Err(Error::config(format!("unknown environment '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub kind: OptimKind,
    pub learning_rate: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            kind: OptimKind::Adam,
            learning_rate: 3e-4,
        }
    }
}

/// Fully resolved single-strategy experiment. Every field has a concrete
/// value; defaults were applied at parse time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub env: EnvName,
    pub strategy: StrategyKind,
    /// Number of workers.
    pub k: usize,
    /// Weight floor divisor; defaults to k.
    pub h: f64,
    pub net: NetPreset,
    pub rounds: usize,
    pub steps_per_round: usize,
    pub runs: usize,
    pub seed_base: u64,
    pub loss: LossConfig,
    pub optimizer: OptimizerConfig,
    /// EMA level that counts as having learned the task.
    pub env_threshold: f64,
    /// EMA level that opens the end-of-training comparison window.
    pub end_threshold: f64,
    pub fedavg_local_epochs: usize,
    pub fedavg_frozen_batch: bool,
    pub normalize_advantages: bool,
    /// Loss weighting uses |loss| shares when true, min-shifted shares
    /// otherwise.
    pub l_weights_use_magnitude: bool,
    pub doors: DoorsSpec,
}

impl ExperimentConfig {
    pub fn make_env(&self, seed: u64) -> Result<Env> {
        match self.env {
            EnvName::Cartpole => Ok(Env::cartpole(seed)),
            EnvName::Doors => Env::doors(self.doors.clone()),
        }
    }

    pub fn obs_dim(&self) -> usize {
        match self.env {
            EnvName::Cartpole => 4,
            EnvName::Doors => 1,
        }
    }

    pub fn action_dim(&self) -> usize {
        match self.env {
            EnvName::Cartpole => 2,
            EnvName::Doors => self.doors.num_doors,
        }
    }

    pub fn net_spec(&self) -> Result<MlpSpec> {
        MlpSpec::preset(self.net, self.obs_dim(), self.action_dim())
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(Error::config("h must be finite and positive"));
        }
        if self.rounds == 0 {
            return Err(Error::config("rounds must be at least 1"));
        }
        if self.steps_per_round == 0 {
            return Err(Error::config("steps_per_round must be at least 1"));
        }
        if self.runs == 0 {
            return Err(Error::config("runs must be at least 1"));
        }
        if self.fedavg_local_epochs == 0 {
            return Err(Error::config("fedavg_local_epochs must be at least 1"));
        }
        if !(self.optimizer.learning_rate.is_finite() && self.optimizer.learning_rate > 0.0) {
            return Err(Error::config("learning_rate must be finite and positive"));
        }
        if !(self.env_threshold.is_finite() && self.end_threshold.is_finite()) {
            return Err(Error::config("thresholds must be finite"));
        }
        self.loss
            .validate()
            .map_err(|e| Error::config(e.to_string()))?;
        if self.env == EnvName::Doors {
            self.doors
                .validate()
                .map_err(|e| Error::config(e.to_string()))?;
        }
        Ok(())
    }
}

/// Multi-strategy comparison sharing one base setup.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub strategies: Vec<StrategyKind>,
    pub base: ExperimentConfig,
}

impl SuiteConfig {
    pub fn config_for(&self, kind: StrategyKind) -> ExperimentConfig {
        let mut cfg = self.base.clone();
        cfg.strategy = kind;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedConfig {
    Single(ExperimentConfig),
    Suite(SuiteConfig),
}

impl LoadedConfig {
    pub fn base(&self) -> &ExperimentConfig {
        match self {
            LoadedConfig::Single(c) => c,
            LoadedConfig::Suite(s) => &s.base,
        }
    }

    fn base_mut(&mut self) -> &mut ExperimentConfig {
        match self {
            LoadedConfig::Single(c) => c,
            LoadedConfig::Suite(s) => &mut s.base,
        }
    }

    /// Command-line overrides applied on top of the file.
    pub fn apply_overrides(&mut self, seed: Option<u64>, runs: Option<usize>) -> Result<()> {
        let base = self.base_mut();
        if let Some(s) = seed {
            base.seed_base = s;
        }
        if let Some(r) = runs {
            base.runs = r;
        }
        self.base().validate()
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    env: EnvName,
    strategy: Option<StrategyKind>,
    strategies: Option<Vec<StrategyKind>>,
    rounds: usize,
    k: Option<usize>,
    h: Option<f64>,
    net: Option<NetPreset>,
    steps_per_round: Option<usize>,
    runs: Option<usize>,
    seed_base: Option<u64>,
    env_threshold: Option<f64>,
    end_threshold: Option<f64>,
    fedavg_local_epochs: Option<usize>,
    fedavg_frozen_batch: Option<bool>,
    normalize_advantages: Option<bool>,
    l_weights_use_magnitude: Option<bool>,
    loss: Option<LossConfig>,
    optimizer: Option<OptimizerConfig>,
    doors: Option<DoorsSpec>,
}

pub fn parse_config(text: &str) -> Result<LoadedConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| Error::TomlParse(e.to_string()))?;

    let doors = raw.doors.unwrap_or_default();
    let k = raw.k.unwrap_or(8);
    let default_thresholds = match raw.env {
        EnvName::Cartpole => (400.0, 400.0),
        EnvName::Doors => {
            // Learned means a near-pure jackpot policy: 90% of the jackpot
            // payout accumulated over a full episode.
            let t = 0.9 * doors.jackpot_reward * doors.episode_length as f64;
            (t, t)
        }
    };

    let base = |strategy: StrategyKind| ExperimentConfig {
        env: raw.env,
        strategy,
        k,
        h: raw.h.unwrap_or(k as f64),
        net: raw.net.unwrap_or(NetPreset::Small),
        rounds: raw.rounds,
        steps_per_round: raw.steps_per_round.unwrap_or(4000),
        runs: raw.runs.unwrap_or(10),
        seed_base: raw.seed_base.unwrap_or(0),
        loss: raw.loss.unwrap_or_default(),
        optimizer: raw.optimizer.unwrap_or_default(),
        env_threshold: raw.env_threshold.unwrap_or(default_thresholds.0),
        end_threshold: raw.end_threshold.unwrap_or(default_thresholds.1),
        fedavg_local_epochs: raw.fedavg_local_epochs.unwrap_or(4),
        fedavg_frozen_batch: raw.fedavg_frozen_batch.unwrap_or(false),
        normalize_advantages: raw.normalize_advantages.unwrap_or(true),
        l_weights_use_magnitude: raw.l_weights_use_magnitude.unwrap_or(true),
        doors: doors.clone(),
    };

    let loaded = match (raw.strategy, raw.strategies) {
        (Some(_), Some(_)) => {
            return Err(Error::config(
                "set either 'strategy' or 'strategies', not both",
            ));
        }
        (None, None) => {
            return Err(Error::config(
                "config needs a 'strategy' (train) or 'strategies' (suite) entry",
            ));
        }
        (Some(s), None) => LoadedConfig::Single(base(s)),
        (None, Some(list)) => {
            if list.is_empty() {
                return Err(Error::config("'strategies' must not be empty"));
            }
            for (i, s) in list.iter().enumerate() {
                if list[..i].contains(s) {
                    return Err(Error::config(format!(
                        "duplicate strategy '{}' in suite",
                        s.name()
                    )));
                }
            }
            LoadedConfig::Suite(SuiteConfig {
                base: base(list[0]),
                strategies: list,
            })
        }
    };

    loaded.base().validate()?;
    Ok(loaded)
}

pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}
