//! How well a credit-trained scorer ranks actions by true incrementality.

use serde::{Deserialize, Serialize};

use super::stats::kendall_tau_b;
use crate::agents::{featurize, oracle_scores, Agent, FeatureVector, PolicyModel};
use crate::attribution::{attribute, AttributionConfig, Scheme};
use crate::env::{ChainState, EnvConfig, EnvError, Episode, EventKind, ProductCatalog, Timeline, UserState};

/// Kendall tau-b between credit-derived and oracle scores for one context.
/// `None` when either list is constant.
pub fn ranking_quality(credit_scores: &[f64], oracle: &[f64]) -> Option<f64> {
    kendall_tau_b(credit_scores, oracle)
}

/// A decision point: what an agent sees and the hidden state behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Context {
    pub features: FeatureVector,
    pub user: UserState,
}

/// Collects the first `n` bandit decision points of episodes run under
/// `logging`, visiting users `0, 1, 2, ...` of `master_seed` in order.
pub fn sample_contexts(
    catalog: &ProductCatalog,
    config: &EnvConfig,
    logging: &Agent,
    master_seed: u64,
    n: usize,
) -> Result<Vec<Context>, EnvError> {
    let mut contexts = Vec::with_capacity(n);
    let mut user_id = 0u64;
    // Guards against configurations that never reach a bandit state.
    let max_users = (n as u64).saturating_mul(1000).max(1000);
    while contexts.len() < n && user_id < max_users {
        let mut episode = Episode::new(catalog, config, master_seed, user_id);
        let mut history = Vec::new();
        while !episode.is_done() && contexts.len() < n {
            let action = if episode.pending() == ChainState::Bandit {
                contexts.push(Context {
                    features: featurize(&history, catalog.num_products()),
                    user: episode.user().clone(),
                });
                let (decision, rng) = episode.decision(&history);
                Some(crate::env::Policy::recommend(logging, &decision, rng).map_err(EnvError::Policy)?)
            } else {
                None
            };
            history.extend(episode.step(action)?.events);
        }
        user_id += 1;
    }
    Ok(contexts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeRanking {
    pub scheme: Scheme,
    /// Mean tau over contexts where it is defined.
    pub mean_tau: Option<f64>,
    pub contexts_used: usize,
    pub contexts_flagged: usize,
}

/// Credit earned per recommendation of each action over a corpus: total
/// credit of `a`'s clicks divided by the number of times `a` was shown.
/// Actions never shown score 0.
pub fn credit_per_impression(timelines: &[Timeline], attribution: &AttributionConfig, num_products: usize) -> Vec<f64> {
    let mut shown = vec![0usize; num_products];
    let mut credit = vec![0.0; num_products];
    for timeline in timelines {
        let credits = attribute(timeline, attribution);
        for (pos, event) in timeline.events.iter().enumerate() {
            if let EventKind::Bandit { recommended, clicked } = event.kind {
                shown[recommended] += 1;
                if clicked {
                    credit[recommended] += credits.credit_at(pos).unwrap_or(0.0);
                }
            }
        }
    }
    credit
        .iter()
        .zip(&shown)
        .map(|(c, &n)| if n > 0 { c / n as f64 } else { 0.0 })
        .collect()
}

/// Mean tau between `scorer`'s scores and the oracle over `contexts`.
pub fn rank_contexts<F>(scheme: Scheme, contexts: &[Context], catalog: &ProductCatalog, config: &EnvConfig, scorer: F) -> SchemeRanking
where
    F: Fn(&Context) -> Vec<f64>,
{
    let taus: Vec<f64> = contexts
        .iter()
        .filter_map(|c| ranking_quality(&scorer(c), &oracle_scores(catalog, &c.user, config)))
        .collect();
    SchemeRanking {
        scheme,
        mean_tau: (!taus.is_empty()).then(|| taus.iter().sum::<f64>() / taus.len() as f64),
        contexts_used: taus.len(),
        contexts_flagged: contexts.len() - taus.len(),
    }
}

/// Ranks with a scorer that ignores context, such as [`credit_per_impression`].
pub fn rank_with_scores(
    scheme: Scheme,
    scores: &[f64],
    contexts: &[Context],
    catalog: &ProductCatalog,
    config: &EnvConfig,
) -> SchemeRanking {
    rank_contexts(scheme, contexts, catalog, config, |_| scores.to_vec())
}

/// Ranks with a trained linear model's per-context scores.
pub fn rank_with_model(
    scheme: Scheme,
    model: &PolicyModel,
    contexts: &[Context],
    catalog: &ProductCatalog,
    config: &EnvConfig,
) -> SchemeRanking {
    rank_contexts(scheme, contexts, catalog, config, |c| model.scores(c.features.as_slice()))
}
