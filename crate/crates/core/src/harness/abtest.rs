//! Online evaluation of trained agents on fresh users.

use serde::{Deserialize, Serialize};

use super::simulate::simulate_users;
use super::stats::{bootstrap_ci, mean, Interval, StatsError};
use crate::agents::Agent;
use crate::attribution::{attribute_last_click, AttributionConfig};
use crate::env::{EnvConfig, EnvError, ProductCatalog, Timeline};
use crate::rng::mix_seed;

/// Per-user totals of one evaluation episode.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UserOutcome {
    pub impressions: f64,
    pub clicks: f64,
    pub sales: f64,
    /// Sales matched to a click under the experiment's attribution window.
    pub attributed_sales: f64,
}

impl UserOutcome {
    pub fn from_timeline(timeline: &Timeline, attribution: &AttributionConfig) -> Self {
        let credit = attribute_last_click(timeline, attribution);
        Self {
            impressions: timeline.bandit_events() as f64,
            clicks: timeline.clicks() as f64,
            sales: timeline.conversions() as f64,
            attributed_sales: credit.total_credit(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmResult {
    pub label: String,
    pub master_seed: u64,
    pub outcomes: Vec<UserOutcome>,
}

/// Master seed of arm `index`: shared by every arm under common random
/// numbers, distinct otherwise.
pub fn arm_seed(eval_seed: u64, index: usize, common_random_numbers: bool) -> u64 {
    if common_random_numbers {
        eval_seed
    } else {
        mix_seed(eval_seed, index as u64 + 1)
    }
}

#[allow(clippy::too_many_arguments)]
pub fn run_arms(
    catalog: &ProductCatalog,
    config: &EnvConfig,
    agents: &[Agent],
    eval_seed: u64,
    n_users: usize,
    common_random_numbers: bool,
    attribution: &AttributionConfig,
    threads: usize,
) -> Result<Vec<ArmResult>, EnvError> {
    agents
        .iter()
        .enumerate()
        .map(|(i, agent)| {
            let seed = arm_seed(eval_seed, i, common_random_numbers);
            let timelines = simulate_users(catalog, config, agent, seed, n_users, threads)?;
            Ok(ArmResult {
                label: agent.label(),
                master_seed: seed,
                outcomes: timelines
                    .iter()
                    .map(|t| UserOutcome::from_timeline(t, attribution))
                    .collect(),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentMetrics {
    pub agent: String,
    pub users: usize,
    pub clicks_per_user: f64,
    pub ctr: f64,
    pub sales_per_user: f64,
    pub attributed_sales_per_user: f64,
    pub sales_ci: Interval,
}

/// Mean per-user difference `treatment - control` of sales.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedDifference {
    pub treatment: String,
    pub control: String,
    pub mean: f64,
    pub ci: Interval,
    /// Whether both arms shared per-user random streams.
    pub paired: bool,
}

pub fn agent_metrics(arm: &ArmResult, n_boot: usize, seed: u64) -> Result<AgentMetrics, StatsError> {
    let sales: Vec<f64> = arm.outcomes.iter().map(|o| o.sales).collect();
    let total = |f: fn(&UserOutcome) -> f64| arm.outcomes.iter().map(f).sum::<f64>();
    let users = arm.outcomes.len();
    let impressions = total(|o| o.impressions);
    Ok(AgentMetrics {
        agent: arm.label.clone(),
        users,
        clicks_per_user: total(|o| o.clicks) / users as f64,
        ctr: if impressions > 0.0 { total(|o| o.clicks) / impressions } else { 0.0 },
        sales_per_user: mean(&sales),
        attributed_sales_per_user: total(|o| o.attributed_sales) / users as f64,
        sales_ci: bootstrap_ci(&sales, n_boot, 0.95, seed)?,
    })
}

/// Per-user sales differences. Under common random numbers the users are
/// paired by id; otherwise users are still matched by id but the
/// difference is between independent draws.
pub fn paired_difference(
    treatment: &ArmResult,
    control: &ArmResult,
    n_boot: usize,
    seed: u64,
) -> Result<PairedDifference, StatsError> {
    assert_eq!(treatment.outcomes.len(), control.outcomes.len(), "arms differ in size");
    let diffs: Vec<f64> = treatment
        .outcomes
        .iter()
        .zip(&control.outcomes)
        .map(|(t, c)| t.sales - c.sales)
        .collect();
    Ok(PairedDifference {
        treatment: treatment.label.clone(),
        control: control.label.clone(),
        mean: mean(&diffs),
        ci: bootstrap_ci(&diffs, n_boot, 0.95, seed)?,
        paired: treatment.master_seed == control.master_seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{AgentKind, AgentSpec};
    use crate::env::sample_catalog;
    use crate::rng::{substream, Purpose};

    fn setup(cfg: &EnvConfig) -> ProductCatalog {
        sample_catalog(cfg, &mut substream(cfg.master_seed, Purpose::Catalog, 0))
    }

    #[test]
    fn identical_agents_under_crn_are_identical() {
        let cfg = EnvConfig::default();
        let cat = setup(&cfg);
        let agent = Agent::untrained(AgentSpec::new(AgentKind::Random), cfg.num_products);
        let arms = run_arms(&cat, &cfg, &[agent.clone(), agent], 8, 500, true, &AttributionConfig::default(), 2).unwrap();
        assert_eq!(arms[0].outcomes, arms[1].outcomes);
        let diff = paired_difference(&arms[0], &arms[1], 200, 1).unwrap();
        assert_eq!(diff.mean, 0.0);
        assert_eq!(diff.ci.width(), 0.0);
        assert!(diff.paired);
    }

    #[test]
    fn without_crn_arms_use_distinct_streams() {
        assert_ne!(arm_seed(3, 0, false), arm_seed(3, 1, false));
        assert_eq!(arm_seed(3, 0, true), arm_seed(3, 1, true));
    }

    #[test]
    fn zero_sale_scale_zero_sales() {
        let cfg = EnvConfig { sale_scale: 0.0, ..Default::default() };
        let cat = setup(&cfg);
        let agents: Vec<Agent> = [AgentKind::Random, AgentKind::Popularity]
            .into_iter()
            .map(|k| Agent::untrained(AgentSpec::new(k), cfg.num_products))
            .collect();
        let arms = run_arms(&cat, &cfg, &agents, 2, 300, false, &AttributionConfig::default(), 1).unwrap();
        for arm in &arms {
            let m = agent_metrics(arm, 100, 0).unwrap();
            assert_eq!(m.sales_per_user, 0.0);
            assert_eq!((m.sales_ci.lo, m.sales_ci.hi), (0.0, 0.0));
        }
    }

    #[test]
    fn metrics_are_consistent() {
        let cfg = EnvConfig::default();
        let cat = setup(&cfg);
        let agent = Agent::untrained(AgentSpec::new(AgentKind::Random), cfg.num_products);
        let arms = run_arms(&cat, &cfg, &[agent], 5, 400, false, &AttributionConfig::default(), 1).unwrap();
        let m = agent_metrics(&arms[0], 200, 0).unwrap();
        assert!(m.sales_ci.contains(m.sales_per_user));
        assert!((0.0..=1.0).contains(&m.ctr));
        assert!(m.attributed_sales_per_user <= m.sales_per_user);
    }
}
