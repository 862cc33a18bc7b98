use rand::Rng;
use thiserror::Error;

use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("bootstrap needs at least one sample")]
    EmptySample,
    #[error("bootstrap needs at least 100 resamples, got {0}")]
    TooFewResamples(usize),
    #[error("confidence level {0} is outside (0, 1)")]
    InvalidLevel(f64),
}

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn excludes_zero(&self) -> bool {
        self.lo > 0.0 || self.hi < 0.0
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Percentile bootstrap interval for the mean. The interval is widened to
/// include the sample mean if resampling noise leaves it outside.
pub fn bootstrap_ci(samples: &[f64], n_boot: usize, level: f64, seed: u64) -> Result<Interval, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if n_boot < 100 {
        return Err(StatsError::TooFewResamples(n_boot));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(StatsError::InvalidLevel(level));
    }
    let first = samples[0];
    if samples.iter().all(|s| *s == first) {
        return Ok(Interval { lo: first, hi: first });
    }

    let n = samples.len();
    let mut rng = substream(seed, Purpose::Bootstrap, n as u64);
    let mut means: Vec<f64> = (0..n_boot)
        .map(|_| {
            let total: f64 = (0..n).map(|_| samples[rng.random_range(0..n)]).sum();
            total / n as f64
        })
        .collect();
    means.sort_by(f64::total_cmp);
    let tail = (1.0 - level) / 2.0;
    let point = mean(samples);
    Ok(Interval {
        lo: quantile(&means, tail).min(point),
        hi: quantile(&means, 1.0 - tail).max(point),
    })
}

/// Kendall tau-b. `None` when either list is constant (or too short), in
/// which case the coefficient is undefined.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    assert_eq!(x.len(), y.len(), "rank lists differ in length");
    let (mut concordant, mut discordant) = (0i64, 0i64);
    let (mut tied_x, mut tied_y) = (0i64, 0i64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i].partial_cmp(&x[j])?;
            let dy = y[i].partial_cmp(&y[j])?;
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {}
                (Equal, _) => tied_x += 1,
                (_, Equal) => tied_y += 1,
                (a, b) if a == b => concordant += 1,
                _ => discordant += 1,
            }
        }
    }
    let denom = (((concordant + discordant + tied_x) * (concordant + discordant + tied_y)) as f64).sqrt();
    if denom == 0.0 || concordant + discordant + tied_x == 0 || concordant + discordant + tied_y == 0 {
        return None;
    }
    Some((concordant - discordant) as f64 / denom)
}
