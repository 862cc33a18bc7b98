//! Counterfactual incrementality probes.
//!
//! A probe runs the same user twice with identical random streams. The
//! treated rollout gets a forced click at step 0, the control rollout none,
//! and neither shows recommendations afterwards. Any difference in sales is
//! caused by the click.

use serde::{Deserialize, Serialize};

use super::experiment::ProbeTarget;
use super::simulate::map_users;
use super::stats::{bootstrap_ci, mean, Interval, StatsError};
use crate::env::{dot, EnvConfig, EnvError, Episode, ProductCatalog, UserState};

/// Product whose click leaves the user best aligned with it: `argmax_a
/// δ'·Λ_a` with `δ' = (1-κ)δ + κΛ_a` (lowest id on ties).
pub fn alignment_target(catalog: &ProductCatalog, user: &UserState, kappa: f64) -> usize {
    let alignment: Vec<f64> = catalog
        .conversion_embed
        .iter_rows()
        .map(|lambda| (1.0 - kappa) * dot(&user.delta, lambda) + kappa * dot(lambda, lambda))
        .collect();
    crate::agents::argmax(&alignment)
}

/// Treated minus control sales over `horizon` steps for one user.
pub fn counterfactual_probe(
    catalog: &ProductCatalog,
    config: &EnvConfig,
    master_seed: u64,
    user_id: u64,
    target: ProbeTarget,
    horizon: u32,
) -> Result<f64, EnvError> {
    let mut treated = Episode::new(catalog, config, master_seed, user_id);
    let mut control = Episode::new(catalog, config, master_seed, user_id);
    if horizon == 0 || treated.is_done() {
        return Ok(0.0);
    }
    let a = match target {
        ProbeTarget::MaxAlignment => alignment_target(catalog, treated.user(), config.kappa),
        ProbeTarget::Product(a) => a,
    };
    treated.force_click(a)?;

    let mut delta = 0i64;
    for _ in 0..horizon {
        if treated.is_done() {
            break;
        }
        let t = treated.step_idle()?;
        let c = control.step_idle()?;
        debug_assert_eq!(t.done, c.done, "paired rollouts must stay aligned");
        let sales = |events: &[crate::env::Event]| events.iter().filter(|e| e.is_conversion()).count() as i64;
        delta += sales(&t.events) - sales(&c.events);
    }
    Ok(delta as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSummary {
    pub n_users: usize,
    pub horizon: u32,
    pub mean_delta: f64,
    pub ci: Interval,
    pub deltas: Vec<f64>,
}

#[derive(Debug, thiserror::Error)]
pub enum ProbeError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[allow(clippy::too_many_arguments)]
pub fn probe_many(
    catalog: &ProductCatalog,
    config: &EnvConfig,
    master_seed: u64,
    n_users: usize,
    target: ProbeTarget,
    horizon: u32,
    n_boot: usize,
    threads: usize,
) -> Result<ProbeSummary, ProbeError> {
    let deltas = map_users(n_users, threads, |u| {
        counterfactual_probe(catalog, config, master_seed, u, target, horizon)
    })
    .into_iter()
    .collect::<Result<Vec<f64>, EnvError>>()?;
    let ci = bootstrap_ci(&deltas, n_boot, 0.95, master_seed)?;
    Ok(ProbeSummary {
        n_users,
        horizon,
        mean_delta: mean(&deltas),
        ci,
        deltas,
    })
}
