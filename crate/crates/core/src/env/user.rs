use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::EnvConfig;

/// Hidden state of one simulated user.
///
/// `omega` drives organic views and clicks and never changes within an
/// episode. `delta` drives sales; it starts as an exact copy of `omega` and
/// only moves when the user clicks a recommendation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserState {
    pub omega: Vec<f64>,
    pub delta: Vec<f64>,
    pub step: u32,
    pub alive: bool,
}

impl UserState {
    pub fn from_omega(omega: Vec<f64>) -> Self {
        Self {
            delta: omega.clone(),
            omega,
            step: 0,
            alive: true,
        }
    }
}

pub fn init_user<R: Rng + ?Sized>(config: &EnvConfig, rng: &mut R) -> UserState {
    let omega = (0..config.embed_dim)
        .map(|_| rng.sample(StandardNormal))
        .collect();
    UserState::from_omega(omega)
}
