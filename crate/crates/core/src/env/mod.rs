//! Generative model of users, products and events.

pub mod behavior;
pub mod catalog;
pub mod config;
pub mod dynamics;
pub mod user;

use thiserror::Error;

pub use behavior::{
    apply_click_update, click_prob, organic_view_probs, sale_prob, sale_prob_for, sigmoid,
};
pub use catalog::{dot, sample_catalog, Embeddings, ProductCatalog};
pub use config::{ChainState, ConfigError, EnvConfig, EventChain};
pub use dynamics::{
    sample_index,
    simulate_episode, Decision, Episode, Event, EventKind, Policy, PolicyError, ProductId,
    StepOutcome, Timeline,
};
pub use user::{init_user, UserState};

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("kappa {0} is outside [0, 1]")]
    InvalidKappa(f64),
    #[error("product {product} is out of range for a catalog of {num_products}")]
    InvalidProduct { product: usize, num_products: usize },
    #[error("bandit state at step {t} requires an action")]
    MissingAction { t: u32 },
    #[error("organic state at step {t} got action {action}")]
    UnexpectedAction { t: u32, action: usize },
    #[error("episode already finished")]
    EpisodeFinished,
    #[error("malformed timeline at event {position}: {reason}")]
    MalformedTimeline { position: usize, reason: String },
    #[error("policy failed: {0}")]
    Policy(#[source] PolicyError),
}
