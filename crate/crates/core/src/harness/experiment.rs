use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use super::scenario::{bias_scenario_catalog, BiasScenario};
use crate::agents::{AgentKind, AgentSpec, Hyperparameters};
use crate::attribution::AttributionConfig;
use crate::env::{sample_catalog, ConfigError, EnvConfig, ProductCatalog};
use crate::rng::{mix_seed, substream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CatalogKind {
    /// Every row drawn by `sample_catalog`.
    #[default]
    Sampled,
    /// Sampled catalog with a planted decoy and an incremental product.
    BiasScenario,
}

/// Master seeds of the two simulation phases. Unset seeds are derived from
/// the environment's master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedLayout {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeTarget {
    /// Per user, the product maximizing post-click alignment `δ' · Λ_a`.
    MaxAlignment,
    Product(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSettings {
    pub n_users: usize,
    pub horizon: u32,
    pub target: ProbeTarget,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        Self {
            n_users: 2000,
            horizon: 50,
            target: ProbeTarget::MaxAlignment,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankSettings {
    /// Decision points sampled from held-out episodes.
    pub n_contexts: usize,
}

impl Default for RankSettings {
    fn default() -> Self {
        Self { n_contexts: 1000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub env: EnvConfig,
    pub catalog: CatalogKind,
    pub scenario: BiasScenario,
    pub logging_policy: AgentSpec,
    pub n_train_users: usize,
    pub n_eval_users: usize,
    pub agents: Vec<AgentSpec>,
    pub attribution: AttributionConfig,
    /// Replace `attribution.baseline` with an estimate from the training
    /// logs before training or ranking.
    pub estimate_baseline: bool,
    pub training: Hyperparameters,
    pub n_bootstrap: usize,
    /// Share per-user random streams across A/B arms.
    pub common_random_numbers: bool,
    pub probe: ProbeSettings,
    pub rank: RankSettings,
    pub output_dir: PathBuf,
    pub seeds: SeedLayout,
}

pub fn default_agents() -> Vec<AgentSpec> {
    [
        AgentKind::Random,
        AgentKind::Popularity,
        AgentKind::ClickBandit,
        AgentKind::LastClickSales,
        AgentKind::DiscountedSales,
        AgentKind::BaselineSubtractedSales,
    ]
    .into_iter()
    .map(AgentSpec::new)
    .collect()
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            env: EnvConfig::default(),
            catalog: CatalogKind::Sampled,
            scenario: BiasScenario::default(),
            logging_policy: AgentSpec::new(AgentKind::Random),
            n_train_users: 5000,
            n_eval_users: 2000,
            agents: default_agents(),
            attribution: AttributionConfig::default(),
            estimate_baseline: true,
            training: Hyperparameters::default(),
            n_bootstrap: 1000,
            common_random_numbers: false,
            probe: ProbeSettings::default(),
            rank: RankSettings::default(),
            output_dir: PathBuf::from("out"),
            seeds: SeedLayout::default(),
        }
    }
}

impl ExperimentSpec {
    /// The decoy/incremental catalog with a short credit horizon
    /// (`γ = 0.7`, about three steps of discount mass), which keeps
    /// credit close to the one-step effect the oracle measures.
    pub fn bias_scenario() -> Self {
        let mut spec = Self {
            catalog: CatalogKind::BiasScenario,
            ..Self::default()
        };
        spec.attribution.gamma = 0.7;
        spec
    }

    pub fn train_seed(&self) -> u64 {
        self.seeds.train.unwrap_or_else(|| mix_seed(self.env.master_seed, 1))
    }

    pub fn eval_seed(&self) -> u64 {
        self.seeds.eval.unwrap_or_else(|| mix_seed(self.env.master_seed, 2))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.env.validate().map_err(|e| e.within("env"))?;
        self.attribution.validate().map_err(|e| e.within("attribution"))?;
        self.logging_policy.validate().map_err(|e| e.within("logging_policy"))?;
        if self.logging_policy.kind == AgentKind::OracleIncremental || self.logging_policy.kind.uses_linear_model() {
            return Err(ConfigError::new(
                "logging_policy.kind",
                "the logging policy must not need training (random or popularity)",
            ));
        }
        for (i, agent) in self.agents.iter().enumerate() {
            agent.validate().map_err(|e| e.within(&format!("agents[{i}]")))?;
        }
        if self.n_eval_users < 1 {
            return Err(ConfigError::new("n_eval_users", "must be at least 1"));
        }
        if self.n_bootstrap < 100 {
            return Err(ConfigError::new("n_bootstrap", "must be at least 100"));
        }
        if self.training.epochs == 0 || self.training.batch_size == 0 {
            return Err(ConfigError::new("training", "epochs and batch_size must be positive"));
        }
        if !self.training.learning_rate.is_finite() || self.training.learning_rate <= 0.0 {
            return Err(ConfigError::new("training.learning_rate", "must be positive"));
        }
        if self.probe.horizon > self.env.max_steps {
            return Err(ConfigError::new("probe.horizon", "must not exceed env.max_steps"));
        }
        if let ProbeTarget::Product(a) = self.probe.target {
            if a >= self.env.num_products {
                return Err(ConfigError::new("probe.target", format!("product {a} is out of range")));
            }
        }
        if self.train_seed() == self.eval_seed() {
            return Err(ConfigError::new("seeds", "train and eval seeds must differ"));
        }
        if self.catalog == CatalogKind::BiasScenario {
            self.scenario.validate(&self.env).map_err(|e| e.within("scenario"))?;
        }
        Ok(())
    }

    pub fn build_catalog(&self) -> ProductCatalog {
        match self.catalog {
            CatalogKind::Sampled => sample_catalog(&self.env, &mut substream(self.env.master_seed, Purpose::Catalog, 0)),
            CatalogKind::BiasScenario => bias_scenario_catalog(&self.env, &self.scenario, self.env.master_seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_spec_is_valid() {
        let spec = ExperimentSpec::default();
        spec.validate().unwrap();
        assert_ne!(spec.train_seed(), spec.eval_seed());
    }

    #[test]
    fn bias_preset_is_valid() {
        let spec = ExperimentSpec::bias_scenario();
        spec.validate().unwrap();
        assert_eq!(spec.catalog, CatalogKind::BiasScenario);
    }

    #[test]
    fn equal_phase_seeds_rejected() {
        let spec = ExperimentSpec {
            seeds: SeedLayout { train: Some(4), eval: Some(4) },
            ..Default::default()
        };
        assert_eq!(spec.validate().unwrap_err().key, "seeds");
    }

    #[test]
    fn nested_errors_carry_paths() {
        let mut spec = ExperimentSpec::default();
        spec.env.kappa = 1.5;
        assert_eq!(spec.validate().unwrap_err().key, "env.kappa");
        let mut spec = ExperimentSpec::default();
        spec.agents[2].epsilon = -0.5;
        assert_eq!(spec.validate().unwrap_err().key, "agents[2].epsilon");
    }
}
