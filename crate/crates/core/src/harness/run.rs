//! End-to-end experiment phases: log generation, training, online A/B
//! evaluation, ranking of attribution schemes and probes.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::abtest::{agent_metrics, paired_difference, run_arms};
use super::experiment::ExperimentSpec;
use super::probe::{probe_many, ProbeError, ProbeSummary};
use super::ranking::{credit_per_impression, rank_with_scores, sample_contexts, SchemeRanking};
use super::report::{MetricsReport, RunMetadata, REPORT_SCHEMA_VERSION};
use super::simulate::{map_users, simulate_users};
use super::stats::StatsError;
use crate::agents::{train_agent, Agent, TrainOutcome};
use crate::attribution::{estimate_organic_baseline, AttributionConfig, Scheme};
use crate::env::{ConfigError, EnvError, ProductCatalog, Timeline};
use crate::logio::{write_log, ConfigFileError, LogError, ModelFileError};
use crate::rng::mix_seed;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    ConfigFile(#[from] ConfigFileError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error(transparent)]
    Probe(#[from] ProbeError),
    #[error(transparent)]
    Log(#[from] LogError),
    #[error(transparent)]
    Model(#[from] ModelFileError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// SHA-256 of the spec's canonical JSON form, in hex.
pub fn config_hash(spec: &ExperimentSpec) -> String {
    let json = serde_json::to_string(spec).expect("specs always serialize");
    Sha256::digest(json.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// Simulates `n_train_users` episodes under the logging policy and, when
/// `log_path` is given, writes them there.
pub fn generate_logs(
    spec: &ExperimentSpec,
    catalog: &ProductCatalog,
    threads: usize,
    log_path: Option<&Path>,
) -> Result<Vec<Timeline>, HarnessError> {
    let logging = Agent::untrained(spec.logging_policy.clone(), spec.env.num_products);
    let timelines = simulate_users(catalog, &spec.env, &logging, spec.train_seed(), spec.n_train_users, threads)?;
    if let Some(path) = log_path {
        write_log(&timelines, path)?;
    }
    Ok(timelines)
}

/// The experiment's attribution settings, with the per-click baseline
/// estimated from `logs` when the spec asks for it: the pre-click
/// per-step conversion rate times the discount mass of one window.
pub fn training_attribution(spec: &ExperimentSpec, logs: &[Timeline]) -> AttributionConfig {
    let mut cfg = spec.attribution.clone();
    if spec.estimate_baseline {
        cfg.baseline = estimate_organic_baseline(logs, 1).value * cfg.discounted_window_mass();
    }
    cfg
}

/// Trains every agent of the spec on `logs`, possibly in parallel. Order
/// follows `spec.agents`.
pub fn train_agents(
    spec: &ExperimentSpec,
    logs: &[Timeline],
    attribution: &AttributionConfig,
    threads: usize,
) -> Vec<(Agent, Option<TrainOutcome>)> {
    map_users(spec.agents.len(), threads, |i| {
        train_agent(&spec.agents[i as usize], logs, spec.env.num_products, attribution, &spec.training)
    })
}

/// Evaluates trained agents on `n_eval_users` fresh users each.
///
/// Per-agent metrics come from arms that share random streams only if
/// `spec.common_random_numbers` is set. Pairwise differences (every later
/// agent minus every earlier one) always use paired arms, rerunning them
/// if the headline arms were independent.
pub fn run_ab_test(
    spec: &ExperimentSpec,
    catalog: &ProductCatalog,
    agents: &[Agent],
    attribution: &AttributionConfig,
    threads: usize,
) -> Result<MetricsReport, HarnessError> {
    let eval = spec.eval_seed();
    let run = |crn| run_arms(catalog, &spec.env, agents, eval, spec.n_eval_users, crn, attribution, threads);
    let arms = run(spec.common_random_numbers)?;
    let metrics = arms
        .iter()
        .enumerate()
        .map(|(i, arm)| agent_metrics(arm, spec.n_bootstrap, mix_seed(eval, 100 + i as u64)))
        .collect::<Result<Vec<_>, _>>()?;

    let paired_arms = if spec.common_random_numbers { arms } else { run(true)? };
    let mut paired = Vec::new();
    for j in 0..paired_arms.len() {
        for i in 0..j {
            let seed = mix_seed(eval, 10_000 + (j * paired_arms.len() + i) as u64);
            paired.push(paired_difference(&paired_arms[j], &paired_arms[i], spec.n_bootstrap, seed)?);
        }
    }
    Ok(MetricsReport {
        schema_version: REPORT_SCHEMA_VERSION,
        metadata: RunMetadata::new(spec, attribution.baseline),
        agents: metrics,
        paired,
        rankings: Vec::new(),
    })
}

/// Scores each attribution scheme by how well its per-impression credit,
/// computed on `logs`, ranks actions against the oracle in contexts drawn
/// from fresh episodes under the logging policy.
pub fn rank_schemes(
    spec: &ExperimentSpec,
    catalog: &ProductCatalog,
    logs: &[Timeline],
    attribution: &AttributionConfig,
) -> Result<Vec<SchemeRanking>, HarnessError> {
    let (logging, _) = train_agent(&spec.logging_policy, logs, spec.env.num_products, attribution, &spec.training);
    let contexts = sample_contexts(catalog, &spec.env, &logging, spec.eval_seed(), spec.rank.n_contexts)?;
    Ok(Scheme::ALL
        .iter()
        .map(|&scheme| {
            let cfg = AttributionConfig {
                scheme,
                ..attribution.clone()
            };
            let scores = credit_per_impression(logs, &cfg, spec.env.num_products);
            rank_with_scores(scheme, &scores, &contexts, catalog, &spec.env)
        })
        .collect())
}

pub fn run_probe(spec: &ExperimentSpec, catalog: &ProductCatalog, threads: usize) -> Result<ProbeSummary, HarnessError> {
    Ok(probe_many(
        catalog,
        &spec.env,
        spec.eval_seed(),
        spec.probe.n_users,
        spec.probe.target,
        spec.probe.horizon,
        spec.n_bootstrap,
        threads,
    )?)
}
