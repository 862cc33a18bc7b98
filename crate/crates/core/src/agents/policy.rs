use rand::Rng;
use serde::{Deserialize, Serialize};

use super::features::{featurize, FeatureVector};
use super::logistic::{train_logistic, Hyperparameters, PolicyModel, TrainOutcome};
use super::oracle::oracle_scores;
use crate::attribution::{build_training_set, AttributionConfig, Scheme};
use crate::env::{sample_index, ConfigError, Decision, EventKind, Policy, PolicyError, ProductId, Timeline};
use crate::rng::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Random,
    Popularity,
    ClickBandit,
    LastClickSales,
    DiscountedSales,
    BaselineSubtractedSales,
    OracleIncremental,
}

impl AgentKind {
    pub fn name(self) -> &'static str {
        match self {
            AgentKind::Random => "random",
            AgentKind::Popularity => "popularity",
            AgentKind::ClickBandit => "click_bandit",
            AgentKind::LastClickSales => "last_click_sales",
            AgentKind::DiscountedSales => "discounted_sales",
            AgentKind::BaselineSubtractedSales => "baseline_subtracted_sales",
            AgentKind::OracleIncremental => "oracle_incremental",
        }
    }

    /// Attribution scheme behind a sales agent.
    pub fn scheme(self) -> Option<Scheme> {
        match self {
            AgentKind::LastClickSales => Some(Scheme::LastClick),
            AgentKind::DiscountedSales => Some(Scheme::DiscountedLastClick),
            AgentKind::BaselineSubtractedSales => Some(Scheme::BaselineSubtracted),
            _ => None,
        }
    }

    pub fn uses_linear_model(self) -> bool {
        self == AgentKind::ClickBandit || self.scheme().is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub kind: AgentKind,
    /// Report label; defaults to the kind's name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub epsilon: f64,
    /// Attribution knobs for sales agents. The scheme always follows `kind`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribution: Option<AttributionConfig>,
}

impl AgentSpec {
    pub fn new(kind: AgentKind) -> Self {
        Self {
            kind,
            name: None,
            epsilon: 0.0,
            attribution: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_attribution(mut self, attribution: AttributionConfig) -> Self {
        self.attribution = Some(attribution);
        self
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.kind.name().to_string())
    }

    /// Attribution used to build this agent's training set, with the scheme
    /// forced to match the agent kind.
    pub fn effective_attribution(&self, fallback: &AttributionConfig) -> Option<AttributionConfig> {
        let scheme = self.kind.scheme()?;
        let mut cfg = self.attribution.clone().unwrap_or_else(|| fallback.clone());
        cfg.scheme = scheme;
        Some(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(ConfigError::new("epsilon", format!("{} is outside [0, 1]", self.epsilon)));
        }
        if let Some(a) = &self.attribution {
            a.validate().map_err(|e| e.within("attribution"))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AgentModel {
    None,
    /// Organic view frequency per product.
    Popularity(Vec<f64>),
    Linear(PolicyModel),
}

/// A ready-to-act agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Agent {
    pub spec: AgentSpec,
    pub num_products: usize,
    pub model: AgentModel,
}

impl Agent {
    pub fn untrained(spec: AgentSpec, num_products: usize) -> Self {
        let model = match spec.kind {
            AgentKind::Popularity => AgentModel::Popularity(vec![1.0; num_products]),
            k if k.uses_linear_model() => AgentModel::Linear(PolicyModel::zeros(num_products, num_products + 1)),
            _ => AgentModel::None,
        };
        Self { spec, num_products, model }
    }

    pub fn label(&self) -> String {
        self.spec.label()
    }
}

/// Lowest index among the maxima.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate().skip(1) {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Picks a product. `decision` is only read by the ground-truth oracle.
pub fn act(agent: &Agent, features: &FeatureVector, decision: Option<&Decision<'_>>, rng: &mut SimRng) -> ProductId {
    let p = agent.num_products;
    if agent.spec.epsilon > 0.0 && rng.random::<f64>() < agent.spec.epsilon {
        return rng.random_range(0..p);
    }
    match (&agent.spec.kind, &agent.model) {
        (AgentKind::Random, _) => rng.random_range(0..p),
        (AgentKind::Popularity, AgentModel::Popularity(freq)) => {
            if freq.iter().sum::<f64>() > 0.0 {
                sample_index(freq, rng.random())
            } else {
                rng.random_range(0..p)
            }
        }
        (AgentKind::OracleIncremental, _) => {
            let d = decision.expect("the oracle agent needs the simulator state");
            argmax(&oracle_scores(d.catalog, d.user, d.config))
        }
        (_, AgentModel::Linear(model)) => argmax(&model.scores(features.as_slice())),
        (kind, model) => panic!("agent {kind:?} has incompatible model {model:?}"),
    }
}

impl Policy for Agent {
    fn recommend(&self, decision: &Decision<'_>, rng: &mut SimRng) -> Result<ProductId, PolicyError> {
        let features = featurize(decision.history, self.num_products);
        Ok(act(self, &features, Some(decision), rng))
    }
}

/// Organic view frequencies over a corpus.
pub fn popularity(timelines: &[Timeline], num_products: usize) -> Vec<f64> {
    let mut counts = vec![0.0; num_products];
    for e in timelines.iter().flat_map(|t| &t.events) {
        if let EventKind::Organic { product } = e.kind {
            counts[product] += 1.0;
        }
    }
    let total: f64 = counts.iter().sum();
    if total > 0.0 {
        counts.iter_mut().for_each(|c| *c /= total);
    }
    counts
}

/// Fits an agent on logged timelines. `attribution` supplies the knobs for
/// sales agents that do not carry their own.
pub fn train_agent(
    spec: &AgentSpec,
    timelines: &[Timeline],
    num_products: usize,
    attribution: &AttributionConfig,
    hyper: &Hyperparameters,
) -> (Agent, Option<TrainOutcome>) {
    let dim = num_products + 1;
    match spec.kind {
        AgentKind::Random | AgentKind::OracleIncremental => (Agent::untrained(spec.clone(), num_products), None),
        AgentKind::Popularity => (
            Agent {
                spec: spec.clone(),
                num_products,
                model: AgentModel::Popularity(popularity(timelines, num_products)),
            },
            None,
        ),
        kind => {
            let cfg = spec.effective_attribution(attribution).unwrap_or_else(|| attribution.clone());
            let set = build_training_set(timelines, &cfg, featurize, num_products);
            let examples = if kind == AgentKind::ClickBandit { &set.clicks } else { &set.sales };
            let outcome = train_logistic(examples, num_products, dim, hyper);
            (
                Agent {
                    spec: spec.clone(),
                    num_products,
                    model: AgentModel::Linear(outcome.model.clone()),
                },
                Some(outcome),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};

    fn linear(weights: Vec<f64>, p: usize) -> Agent {
        Agent {
            spec: AgentSpec::new(AgentKind::ClickBandit),
            num_products: p,
            model: AgentModel::Linear(PolicyModel::from_weights(p, p + 1, weights)),
        }
    }

    #[test]
    fn argmax_picks_best() {
        // Bias-only rows give scores (0.1, 0.9, 0.3).
        let agent = linear(vec![0.0, 0.0, 0.0, 0.1, 0.0, 0.0, 0.0, 0.9, 0.0, 0.0, 0.0, 0.3], 3);
        let x = featurize(&[], 3);
        let mut rng = substream(0, Purpose::Policy, 0);
        assert_eq!(act(&agent, &x, None, &mut rng), 1);
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let agent = linear(vec![0.2, 0.5, 0.1, 0.2, 0.5, 0.1], 2);
        let x = FeatureVector::from_vec(vec![0.3, 0.7, 1.0]);
        let mut rng = substream(0, Purpose::Policy, 0);
        assert_eq!(act(&agent, &x, None, &mut rng), 0);
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let mut agent = linear(vec![0.0, 0.0, 5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0], 4);
        agent.spec.epsilon = 1.0;
        let x = featurize(&[], 4);
        let mut rng = substream(3, Purpose::Policy, 0);
        let n = 100_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[act(&agent, &x, None, &mut rng)] += 1;
        }
        let expected = n as f64 / 4.0;
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - expected).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn popularity_follows_views() {
        let tl = Timeline {
            user_id: 0,
            events: vec![
                crate::env::Event::organic(0, 0, 2),
                crate::env::Event::organic(1, 0, 2),
                crate::env::Event::organic(2, 0, 2),
                crate::env::Event::organic(3, 0, 0),
            ],
        };
        let freq = popularity(std::slice::from_ref(&tl), 3);
        assert_eq!(freq, vec![0.25, 0.0, 0.75]);
        let (agent, _) = train_agent(
            &AgentSpec::new(AgentKind::Popularity),
            &[tl],
            3,
            &AttributionConfig::default(),
            &Hyperparameters::default(),
        );
        let mut rng = substream(1, Purpose::Policy, 0);
        let x = featurize(&[], 3);
        for _ in 0..200 {
            assert_ne!(act(&agent, &x, None, &mut rng), 1);
        }
    }

    #[test]
    fn scheme_follows_kind() {
        let spec = AgentSpec::new(AgentKind::DiscountedSales)
            .with_attribution(AttributionConfig::with_scheme(Scheme::LastClick));
        let cfg = spec.effective_attribution(&AttributionConfig::default()).unwrap();
        assert_eq!(cfg.scheme, Scheme::DiscountedLastClick);
        assert!(AgentSpec::new(AgentKind::Random)
            .effective_attribution(&AttributionConfig::default())
            .is_none());
    }

    #[test]
    fn epsilon_is_validated() {
        assert_eq!(
            AgentSpec::new(AgentKind::Random).with_epsilon(1.5).validate().unwrap_err().key,
            "epsilon"
        );
    }
}
