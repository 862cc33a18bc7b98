//! A catalog in which clicks on one product are correlated with sales
//! without causing them.
//!
//! Two products are planted on top of a sampled catalog, using the first
//! two embedding axes `u = e_0` and `v = e_1`:
//!
//! * the decoy is viewed and clicked mostly by users with large `ω·u`, and
//!   its conversion row is the mean organic vector of its clickers,
//!   `Λ_d = m u` with `m = E[ω·u | click on d]`. Its clickers buy a lot,
//!   but a click barely moves `δ` because `δ ≈ Λ_d` already;
//! * the incremental product has a long conversion row `Λ_i = L v`
//!   orthogonal to the decoy axis and a flat click row, so anyone may click
//!   it and a click shifts `δ` strongly towards a product they rarely buy.

use serde::{Deserialize, Serialize};

use crate::env::{sample_catalog, sigmoid, ConfigError, EnvConfig, ProductCatalog};
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BiasScenario {
    pub decoy: usize,
    pub incremental: usize,
    /// Length of the decoy's click row along `u`.
    pub decoy_click_strength: f64,
    /// Length of the decoy's organic row along `u`.
    pub decoy_organic_strength: f64,
    /// Length `L` of the incremental product's conversion row.
    pub incremental_norm: f64,
}

impl Default for BiasScenario {
    fn default() -> Self {
        Self {
            decoy: 0,
            incremental: 1,
            decoy_click_strength: 2.5,
            decoy_organic_strength: 2.0,
            incremental_norm: 3.0,
        }
    }
}

impl BiasScenario {
    pub fn validate(&self, env: &EnvConfig) -> Result<(), ConfigError> {
        if self.decoy >= env.num_products || self.incremental >= env.num_products {
            return Err(ConfigError::new("decoy", "planted products must exist in the catalog"));
        }
        if self.decoy == self.incremental {
            return Err(ConfigError::new("incremental", "must differ from the decoy"));
        }
        if env.embed_dim < 2 {
            return Err(ConfigError::new("embed_dim", "the scenario needs at least two dimensions"));
        }
        for (key, v) in [
            ("decoy_click_strength", self.decoy_click_strength),
            ("decoy_organic_strength", self.decoy_organic_strength),
            ("incremental_norm", self.incremental_norm),
        ] {
            if !v.is_finite() {
                return Err(ConfigError::new(key, "must be finite"));
            }
        }
        Ok(())
    }
}

/// `E[x | click]` for `x ~ N(0, 1)` clicking with probability
/// `σ(strength·x + offset)`, by trapezoidal quadrature on `[-12, 12]`.
pub fn mean_clicker_projection(strength: f64, offset: f64) -> f64 {
    let n = 24_000;
    let (lo, hi) = (-12.0f64, 12.0f64);
    let h = (hi - lo) / n as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..=n {
        let x = lo + h * i as f64;
        let w = if i == 0 || i == n { 0.5 } else { 1.0 };
        let mass = w * (-0.5 * x * x).exp() * sigmoid(strength * x + offset);
        num += x * mass;
        den += mass;
    }
    num / den
}

pub fn bias_scenario_catalog(config: &EnvConfig, scenario: &BiasScenario, seed: u64) -> ProductCatalog {
    let mut catalog = sample_catalog(config, &mut substream(seed, Purpose::Catalog, 0));
    let k = config.embed_dim;
    let axis = |i: usize, len: f64| -> Vec<f64> {
        let mut v = vec![0.0; k];
        v[i] = len;
        v
    };

    let m = mean_clicker_projection(scenario.decoy_click_strength, config.ctr_offset);
    let d = scenario.decoy;
    catalog.organic_embed.row_mut(d).copy_from_slice(&axis(0, scenario.decoy_organic_strength));
    catalog.click_embed.row_mut(d).copy_from_slice(&axis(0, scenario.decoy_click_strength));
    catalog.conversion_embed.row_mut(d).copy_from_slice(&axis(0, m));

    let i = scenario.incremental;
    catalog.click_embed.row_mut(i).copy_from_slice(&vec![0.0; k]);
    catalog.conversion_embed.row_mut(i).copy_from_slice(&axis(1, scenario.incremental_norm));
    catalog
}
