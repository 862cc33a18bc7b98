//! Credit assignment of conversions to clicked recommendations.
//!
//! Three schemes share one click-selection rule: a conversion is matched to
//! the most recent clicked bandit event that precedes it in the timeline
//! (same step counts, later emission wins), optionally restricted to the
//! same product and to a maximum step distance. They differ only in how
//! much each matched conversion is worth:
//!
//! * last click: 1 per conversion;
//! * discounted: `γ^(t_sale - t_click)` per conversion;
//! * baseline subtracted: the discounted credit minus a fixed per-click
//!   estimate `b` of conversions that would have happened anyway.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::agents::FeatureVector;
use crate::env::{ConfigError, Event, EventKind, ProductId, Timeline};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    LastClick,
    DiscountedLastClick,
    BaselineSubtracted,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [
        Scheme::LastClick,
        Scheme::DiscountedLastClick,
        Scheme::BaselineSubtracted,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::LastClick => "last_click",
            Scheme::DiscountedLastClick => "discounted_last_click",
            Scheme::BaselineSubtracted => "baseline_subtracted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AttributionConfig {
    pub scheme: Scheme,
    /// Per-step discount applied to a conversion's credit.
    pub gamma: f64,
    /// Maximum step distance between click and conversion; `None` is
    /// unbounded.
    pub window: Option<u32>,
    /// Only credit clicks on the converting product.
    pub match_product: bool,
    /// Expected conversions per click that would happen without it.
    pub baseline: f64,
}

impl Default for AttributionConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::LastClick,
            gamma: 0.9,
            window: None,
            match_product: false,
            baseline: 0.0,
        }
    }
}

impl AttributionConfig {
    pub fn with_scheme(scheme: Scheme) -> Self {
        Self { scheme, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(ConfigError::new("gamma", format!("{} is outside (0, 1]", self.gamma)));
        }
        if !(self.baseline >= 0.0 && self.baseline.is_finite()) {
            return Err(ConfigError::new("baseline", "must be finite and non-negative"));
        }
        if self.window == Some(0) {
            return Err(ConfigError::new("window", "must be at least 1 when set"));
        }
        Ok(())
    }

    /// Total discount mass of one window, `Σ_{d < W} γ^d` (or `1 / (1 - γ)`
    /// when the window is unbounded). Converts a per-step unmediated
    /// conversion rate into an expected per-click baseline.
    pub fn discounted_window_mass(&self) -> f64 {
        match self.window {
            Some(w) => (0..w).map(|d| self.gamma.powi(d as i32)).sum(),
            None if self.gamma < 1.0 => 1.0 / (1.0 - self.gamma),
            // γ = 1 with no window has no finite mass; fall back to one step.
            None => 1.0,
        }
    }
}

/// Credit per clicked bandit event, keyed by timeline position.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CreditMap {
    pub credits: BTreeMap<usize, f64>,
    pub unattributed: usize,
}

impl CreditMap {
    pub fn total_credit(&self) -> f64 {
        self.credits.values().sum()
    }

    pub fn credit_at(&self, position: usize) -> Option<f64> {
        self.credits.get(&position).copied()
    }
}

/// Timeline position of the click each conversion is matched to
/// (`None` when unattributed), in conversion order.
fn match_conversions(timeline: &Timeline, config: &AttributionConfig) -> Vec<(usize, Option<usize>)> {
    let mut last_click: Option<usize> = None;
    let mut last_click_of: HashMap<ProductId, usize> = HashMap::new();
    let mut matches = Vec::new();
    for (pos, event) in timeline.events.iter().enumerate() {
        match event.kind {
            EventKind::Bandit { recommended, clicked: true } => {
                last_click = Some(pos);
                last_click_of.insert(recommended, pos);
            }
            EventKind::Conversion { product } => {
                let candidate = if config.match_product {
                    last_click_of.get(&product).copied()
                } else {
                    last_click
                };
                let within = |c: usize| match config.window {
                    Some(w) => event.t - timeline.events[c].t <= w,
                    None => true,
                };
                matches.push((pos, candidate.filter(|&c| within(c))));
            }
            _ => {}
        }
    }
    matches
}

fn clicked_positions(timeline: &Timeline) -> BTreeMap<usize, f64> {
    timeline
        .events
        .iter()
        .enumerate()
        .filter(|(_, e)| e.clicked_product().is_some())
        .map(|(pos, _)| (pos, 0.0))
        .collect()
}

fn accumulate(timeline: &Timeline, config: &AttributionConfig, value: impl Fn(u32) -> f64) -> CreditMap {
    let mut map = CreditMap {
        credits: clicked_positions(timeline),
        unattributed: 0,
    };
    for (sale, click) in match_conversions(timeline, config) {
        match click {
            Some(c) => {
                let dt = timeline.events[sale].t - timeline.events[c].t;
                *map.credits.get_mut(&c).expect("matched click is a clicked event") += value(dt);
            }
            None => map.unattributed += 1,
        }
    }
    map
}

pub fn attribute_last_click(timeline: &Timeline, config: &AttributionConfig) -> CreditMap {
    accumulate(timeline, config, |_| 1.0)
}

pub fn attribute_discounted(timeline: &Timeline, config: &AttributionConfig) -> CreditMap {
    let gamma = config.gamma;
    accumulate(timeline, config, |dt| gamma.powi(dt as i32))
}

pub fn attribute_baseline_subtracted(timeline: &Timeline, config: &AttributionConfig) -> CreditMap {
    let mut map = attribute_discounted(timeline, config);
    for credit in map.credits.values_mut() {
        *credit -= config.baseline;
    }
    map
}

/// Dispatches on `config.scheme`.
pub fn attribute(timeline: &Timeline, config: &AttributionConfig) -> CreditMap {
    match config.scheme {
        Scheme::LastClick => attribute_last_click(timeline, config),
        Scheme::DiscountedLastClick => attribute_discounted(timeline, config),
        Scheme::BaselineSubtracted => attribute_baseline_subtracted(timeline, config),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineEstimate {
    /// Conversions per `window` steps of pre-click exposure.
    pub value: f64,
    /// Set when the corpus had no pre-click steps at all; `value` is then 0.
    pub no_pre_click_steps: bool,
    pub pre_click_steps: u64,
    pub pre_click_conversions: u64,
}

/// Mean number of conversions per `window` steps, counted over the steps
/// of each user that come strictly before that user's first click.
pub fn estimate_organic_baseline(timelines: &[Timeline], window: u32) -> BaselineEstimate {
    let mut steps = 0u64;
    let mut conversions = 0u64;
    for tl in timelines {
        let first_click_t = tl
            .events
            .iter()
            .find(|e| e.clicked_product().is_some())
            .map(|e| e.t);
        for e in &tl.events {
            if first_click_t.is_some_and(|fc| e.t >= fc) {
                break;
            }
            match e.kind {
                EventKind::Conversion { .. } => conversions += 1,
                // Each step emits exactly one organic or bandit event.
                _ => steps += 1,
            }
        }
    }
    if steps == 0 {
        return BaselineEstimate {
            value: 0.0,
            no_pre_click_steps: true,
            pre_click_steps: 0,
            pre_click_conversions: conversions,
        };
    }
    BaselineEstimate {
        value: conversions as f64 * f64::from(window) / steps as f64,
        no_pre_click_steps: false,
        pre_click_steps: steps,
        pre_click_conversions: conversions,
    }
}

/// One supervised example for an agent: the user's features just before
/// the recommendation, the recommended product, and its reward signal.
#[derive(Debug, Clone, PartialEq)]
pub struct CreditedExample {
    pub features: FeatureVector,
    pub action: ProductId,
    pub credit: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSet {
    /// One example per clicked bandit event, credited by the scheme.
    pub sales: Vec<CreditedExample>,
    /// One example per bandit event with credit 1 if clicked, else 0.
    pub clicks: Vec<CreditedExample>,
}

/// Events strictly before step `t`.
pub fn history_before(events: &[Event], t: u32) -> &[Event] {
    let end = events.partition_point(|e| e.t < t);
    &events[..end]
}

pub fn build_training_set<F>(
    timelines: &[Timeline],
    config: &AttributionConfig,
    featurizer: F,
    num_products: usize,
) -> TrainingSet
where
    F: Fn(&[Event], usize) -> FeatureVector,
{
    let mut set = TrainingSet::default();
    for tl in timelines {
        let credits = attribute(tl, config);
        for (pos, event) in tl.events.iter().enumerate() {
            let EventKind::Bandit { recommended, clicked } = event.kind else {
                continue;
            };
            let features = featurizer(history_before(&tl.events, event.t), num_products);
            if clicked {
                set.sales.push(CreditedExample {
                    features: features.clone(),
                    action: recommended,
                    credit: credits.credit_at(pos).unwrap_or(0.0),
                });
            }
            set.clicks.push(CreditedExample {
                features,
                action: recommended,
                credit: if clicked { 1.0 } else { 0.0 },
            });
        }
    }
    set
}


#[cfg(test)]
pub(crate) mod testing {
    use super::*;
    use rand::Rng;

    /// Random well-formed timeline with at most `max_events` events.
    pub fn random_timeline<R: Rng>(rng: &mut R, user_id: u64, max_events: usize, num_products: usize) -> Timeline {
        let n = rng.random_range(0..=max_events);
        let mut t = 0u32;
        let mut events = Vec::with_capacity(n);
        for _ in 0..n {
            if rng.random_bool(0.5) {
                t += rng.random_range(0..3);
            }
            let product = rng.random_range(0..num_products);
            let kind = match rng.random_range(0..3) {
                0 => EventKind::Organic { product },
                1 => EventKind::Bandit { recommended: product, clicked: rng.random_bool(0.6) },
                _ => EventKind::Conversion { product },
            };
            events.push(Event { t, user_id, kind });
        }
        Timeline { user_id, events }
    }
}
