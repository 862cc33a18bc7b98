//! Episode dynamics: the event-type chain, per-step emission of organic,
//! bandit and conversion events, and full-episode rollouts.

use std::error::Error as StdError;

use rand::Rng;

use super::behavior::{apply_click_update, click_prob, organic_view_probs, sale_prob};
use super::catalog::ProductCatalog;
use super::config::{ChainState, EnvConfig};
use super::user::{init_user, UserState};
use super::EnvError;
use crate::rng::{SimRng, UserStreams};

pub type ProductId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Organic { product: ProductId },
    Bandit { recommended: ProductId, clicked: bool },
    Conversion { product: ProductId },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Event {
    pub t: u32,
    pub user_id: u64,
    pub kind: EventKind,
}

impl Event {
    pub fn organic(t: u32, user_id: u64, product: ProductId) -> Self {
        Self { t, user_id, kind: EventKind::Organic { product } }
    }

    pub fn bandit(t: u32, user_id: u64, recommended: ProductId, clicked: bool) -> Self {
        Self { t, user_id, kind: EventKind::Bandit { recommended, clicked } }
    }

    pub fn conversion(t: u32, user_id: u64, product: ProductId) -> Self {
        Self { t, user_id, kind: EventKind::Conversion { product } }
    }

    /// Recommended product if this is a clicked bandit event.
    pub fn clicked_product(&self) -> Option<ProductId> {
        match self.kind {
            EventKind::Bandit { recommended, clicked: true } => Some(recommended),
            _ => None,
        }
    }

    pub fn is_conversion(&self) -> bool {
        matches!(self.kind, EventKind::Conversion { .. })
    }
}

/// One user's events, ordered by `(t, emission order)`. The episode end is
/// implicit after the last event.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Timeline {
    pub user_id: u64,
    pub events: Vec<Event>,
}

impl Timeline {
    pub fn new(user_id: u64) -> Self {
        Self { user_id, events: Vec::new() }
    }

    pub fn conversions(&self) -> usize {
        self.events.iter().filter(|e| e.is_conversion()).count()
    }

    pub fn clicks(&self) -> usize {
        self.events.iter().filter(|e| e.clicked_product().is_some()).count()
    }

    pub fn bandit_events(&self) -> usize {
        self.events
            .iter()
            .filter(|e| matches!(e.kind, EventKind::Bandit { .. }))
            .count()
    }

    /// Checks ordering, user ids and product ranges.
    pub fn validate(&self, num_products: usize) -> Result<(), EnvError> {
        let mut last_t = 0;
        for (pos, e) in self.events.iter().enumerate() {
            if e.user_id != self.user_id {
                return Err(EnvError::MalformedTimeline {
                    position: pos,
                    reason: format!("user id {} in timeline of user {}", e.user_id, self.user_id),
                });
            }
            if e.t < last_t {
                return Err(EnvError::MalformedTimeline {
                    position: pos,
                    reason: format!("step {} after step {}", e.t, last_t),
                });
            }
            last_t = e.t;
            let product = match e.kind {
                EventKind::Organic { product } | EventKind::Conversion { product } => product,
                EventKind::Bandit { recommended, .. } => recommended,
            };
            if product >= num_products {
                return Err(EnvError::InvalidProduct { product, num_products });
            }
        }
        Ok(())
    }
}

/// Everything a policy may look at when asked for a recommendation.
/// Ordinary agents only read `history`; the ground-truth oracle also reads
/// the hidden user state.
#[derive(Debug, Clone, Copy)]
pub struct Decision<'a> {
    pub history: &'a [Event],
    pub user: &'a UserState,
    pub catalog: &'a ProductCatalog,
    pub config: &'a EnvConfig,
}

pub type PolicyError = Box<dyn StdError + Send + Sync>;

pub trait Policy {
    fn recommend(&self, decision: &Decision<'_>, rng: &mut SimRng) -> Result<ProductId, PolicyError>;
}

impl<F> Policy for F
where
    F: Fn(&Decision<'_>, &mut SimRng) -> Result<ProductId, PolicyError>,
{
    fn recommend(&self, decision: &Decision<'_>, rng: &mut SimRng) -> Result<ProductId, PolicyError> {
        self(decision, rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub events: Vec<Event>,
    pub done: bool,
}

/// A running episode for a single user.
#[derive(Debug, Clone)]
pub struct Episode<'a> {
    catalog: &'a ProductCatalog,
    config: &'a EnvConfig,
    user_id: u64,
    user: UserState,
    state: ChainState,
    streams: UserStreams,
}

impl<'a> Episode<'a> {
    /// Starts an episode whose draws come from the user's substreams of
    /// `master_seed`. The chain starts in the organic state.
    pub fn new(catalog: &'a ProductCatalog, config: &'a EnvConfig, master_seed: u64, user_id: u64) -> Self {
        let mut streams = UserStreams::new(master_seed, user_id);
        let mut user = init_user(config, &mut streams.init);
        if config.max_steps == 0 {
            user.alive = false;
        }
        Self {
            catalog,
            config,
            user_id,
            user,
            state: ChainState::Organic,
            streams,
        }
    }

    pub fn user(&self) -> &UserState {
        &self.user
    }

    pub fn user_id(&self) -> u64 {
        self.user_id
    }

    pub fn catalog(&self) -> &'a ProductCatalog {
        self.catalog
    }

    pub fn config(&self) -> &'a EnvConfig {
        self.config
    }

    pub fn is_done(&self) -> bool {
        !self.user.alive
    }

    /// Kind of event the next `step` will emit.
    pub fn pending(&self) -> ChainState {
        if self.user.alive {
            self.state
        } else {
            ChainState::Stop
        }
    }

    /// Builds the decision view together with the policy's random stream.
    pub fn decision<'h>(&'h mut self, history: &'h [Event]) -> (Decision<'h>, &'h mut SimRng) {
        (
            Decision {
                history,
                user: &self.user,
                catalog: self.catalog,
                config: self.config,
            },
            &mut self.streams.policy,
        )
    }

    /// Advances one step. `action` must be given exactly when the pending
    /// state is `Bandit`.
    pub fn step(&mut self, action: Option<ProductId>) -> Result<StepOutcome, EnvError> {
        if !self.user.alive {
            return Err(EnvError::EpisodeFinished);
        }
        match (self.state, action) {
            (ChainState::Bandit, None) => Err(EnvError::MissingAction { t: self.user.step }),
            (ChainState::Organic, Some(a)) => Err(EnvError::UnexpectedAction { t: self.user.step, action: a }),
            (_, action) => self.advance(action, true),
        }
    }

    /// Advances one step without showing any recommendation: a bandit slot
    /// emits nothing and consumes no click draw.
    pub fn step_idle(&mut self) -> Result<StepOutcome, EnvError> {
        if !self.user.alive {
            return Err(EnvError::EpisodeFinished);
        }
        self.advance(None, false)
    }

    /// Applies a click on `a` at the current step without drawing from the
    /// click stream. Used by counterfactual probes.
    pub fn force_click(&mut self, a: ProductId) -> Result<Event, EnvError> {
        if !self.user.alive {
            return Err(EnvError::EpisodeFinished);
        }
        apply_click_update(&mut self.user, self.catalog, a, self.config.kappa)?;
        Ok(Event::bandit(self.user.step, self.user_id, a, true))
    }

    fn advance(&mut self, action: Option<ProductId>, strict: bool) -> Result<StepOutcome, EnvError> {
        let t = self.user.step;
        let p = self.catalog.num_products();
        let mut events = Vec::new();

        match self.state {
            ChainState::Organic => {
                let probs = organic_view_probs(self.catalog, &self.user);
                let u: f64 = self.streams.organic.random();
                events.push(Event::organic(t, self.user_id, sample_index(&probs, u)));
            }
            ChainState::Bandit => {
                if let Some(a) = action {
                    if a >= p {
                        return Err(EnvError::InvalidProduct { product: a, num_products: p });
                    }
                    let u: f64 = self.streams.click.random();
                    let clicked = u < click_prob(self.catalog, &self.user, a, self.config);
                    if clicked {
                        apply_click_update(&mut self.user, self.catalog, a, self.config.kappa)?;
                    }
                    events.push(Event::bandit(t, self.user_id, a, clicked));
                } else if strict {
                    return Err(EnvError::MissingAction { t });
                }
            }
            ChainState::Stop => unreachable!("a live episode is never in the stop state"),
        }

        // One sale draw per product per step, always consumed in product
        // order so that paired rollouts stay aligned.
        for b in 0..p {
            let u: f64 = self.streams.sale.random();
            if u < sale_prob(self.catalog, &self.user, b, self.config) {
                events.push(Event::conversion(t, self.user_id, b));
            }
        }

        let u: f64 = self.streams.chain.random();
        self.state = self.config.event_chain.next(self.state, u);
        self.user.step = t + 1;
        let done = self.state == ChainState::Stop || self.user.step >= self.config.max_steps;
        if done {
            self.user.alive = false;
        }
        Ok(StepOutcome { events, done })
    }
}

/// Inverse-CDF sample of an index from a probability vector.
pub fn sample_index(probs: &[f64], u: f64) -> usize {
    let total: f64 = probs.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if target < acc {
            return i;
        }
    }
    // Rounding can leave `target` just above the final partial sum.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}

/// Runs one full episode for `user_id`, asking `policy` for an action at
/// every bandit state.
pub fn simulate_episode<P: Policy + ?Sized>(
    catalog: &ProductCatalog,
    config: &EnvConfig,
    policy: &P,
    master_seed: u64,
    user_id: u64,
) -> Result<Timeline, EnvError> {
    let mut episode = Episode::new(catalog, config, master_seed, user_id);
    let mut timeline = Timeline::new(user_id);
    while !episode.is_done() {
        let action = if episode.pending() == ChainState::Bandit {
            let (decision, rng) = episode.decision(&timeline.events);
            Some(policy.recommend(&decision, rng).map_err(EnvError::Policy)?)
        } else {
            None
        };
        let outcome = episode.step(action)?;
        timeline.events.extend(outcome.events);
    }
    Ok(timeline)
}
