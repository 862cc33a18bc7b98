use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A constraint violation, reported with the dotted key path of the
/// offending field (e.g. `env.kappa`).
#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid `{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            message: message.into(),
        }
    }

    /// Prefix the key path with a parent section name.
    pub fn within(mut self, section: &str) -> Self {
        self.key = format!("{section}.{}", self.key);
        self
    }
}

/// Kind of the next event an episode will emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChainState {
    Organic,
    Bandit,
    Stop,
}

/// Transition probabilities of the event-type Markov chain. Each row is
/// `[p(organic), p(bandit), p(stop)]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventChain {
    pub organic: [f64; 3],
    pub bandit: [f64; 3],
}

impl Default for EventChain {
    fn default() -> Self {
        Self {
            organic: [0.70, 0.25, 0.05],
            bandit: [0.30, 0.60, 0.10],
        }
    }
}

impl EventChain {
    pub fn row(&self, from: ChainState) -> Option<&[f64; 3]> {
        match from {
            ChainState::Organic => Some(&self.organic),
            ChainState::Bandit => Some(&self.bandit),
            ChainState::Stop => None,
        }
    }

    /// Next state for a uniform draw `u` in `[0, 1)`.
    pub fn next(&self, from: ChainState, u: f64) -> ChainState {
        let Some(row) = self.row(from) else {
            return ChainState::Stop;
        };
        if u < row[0] {
            ChainState::Organic
        } else if u < row[0] + row[1] {
            ChainState::Bandit
        } else {
            ChainState::Stop
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for (name, row) in [("organic", &self.organic), ("bandit", &self.bandit)] {
            if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
                return Err(ConfigError::new(
                    format!("event_chain.{name}"),
                    "transition probabilities must lie in [0, 1]",
                ));
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(ConfigError::new(
                    format!("event_chain.{name}"),
                    format!("row sums to {total}, expected 1"),
                ));
            }
        }
        Ok(())
    }
}

/// Parameters of the generative model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub num_products: usize,
    pub embed_dim: usize,
    /// Step size of the click update of the conversion features.
    pub kappa: f64,
    /// Log-odds shift of the click model.
    pub ctr_offset: f64,
    /// Log-odds shift of the sale model.
    pub sale_offset: f64,
    /// Ceiling of the per-product, per-step sale probability.
    pub sale_scale: f64,
    /// Correlation between conversion and organic embedding rows.
    pub lambda_corr: f64,
    pub event_chain: EventChain,
    pub max_steps: u32,
    pub master_seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            num_products: 10,
            embed_dim: 5,
            kappa: 0.3,
            ctr_offset: -3.0,
            sale_offset: -4.0,
            sale_scale: 0.05,
            lambda_corr: 0.0,
            event_chain: EventChain::default(),
            max_steps: 200,
            master_seed: 0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.num_products < 2 {
            return Err(ConfigError::new("num_products", "must be at least 2"));
        }
        if self.embed_dim < 1 {
            return Err(ConfigError::new("embed_dim", "must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(ConfigError::new(
                "kappa",
                format!("{} is outside [0, 1]", self.kappa),
            ));
        }
        if !(0.0..=1.0).contains(&self.sale_scale) {
            return Err(ConfigError::new(
                "sale_scale",
                format!("{} is outside [0, 1]", self.sale_scale),
            ));
        }
        if !(-1.0..=1.0).contains(&self.lambda_corr) {
            return Err(ConfigError::new(
                "lambda_corr",
                format!("{} is outside [-1, 1]", self.lambda_corr),
            ));
        }
        if !self.ctr_offset.is_finite() {
            return Err(ConfigError::new("ctr_offset", "must be finite"));
        }
        if !self.sale_offset.is_finite() {
            return Err(ConfigError::new("sale_offset", "must be finite"));
        }
        self.event_chain.validate()
    }
}
