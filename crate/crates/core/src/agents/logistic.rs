//! Per-action weighted logistic regression trained by mini-batch gradient
//! descent.
//!
//! Every action has its own weight row over the shared feature vector.
//! The objective minimized is
//!
//! ```text
//! J(W) = -(1/n) Σ_i w_i [y_i log p_i + (1 - y_i) log(1 - p_i)] + (λ/2) ‖W‖²
//! p_i  = σ(W_{a_i} · x_i)
//! ```
//!
//! Credits are mapped to `(y, w)` pairs by [`encode_credit`].

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::attribution::CreditedExample;
use crate::env::sigmoid;
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Hyperparameters {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            l2: 1e-4,
            epochs: 20,
            batch_size: 64,
            seed: 0,
        }
    }
}

/// Linear scorer, one row of weights per action.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyModel {
    num_actions: usize,
    dim: usize,
    weights: Vec<f64>,
}

impl PolicyModel {
    pub fn zeros(num_actions: usize, dim: usize) -> Self {
        Self {
            num_actions,
            dim,
            weights: vec![0.0; num_actions * dim],
        }
    }

    pub fn from_weights(num_actions: usize, dim: usize, weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), num_actions * dim, "weight matrix shape");
        Self { num_actions, dim, weights }
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.weights[a * self.dim..(a + 1) * self.dim]
    }

    pub fn score(&self, a: usize, x: &[f64]) -> f64 {
        self.row(a).iter().zip(x).map(|(w, v)| w * v).sum()
    }

    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_actions).map(|a| self.score(a, x)).collect()
    }
}

/// Credit → (label, weight): positive credit is a weighted positive,
/// zero credit a unit-weight negative, negative credit a negative weighted
/// by its magnitude.
pub fn encode_credit(credit: f64) -> (f64, f64) {
    if credit > 0.0 {
        (1.0, credit)
    } else if credit == 0.0 {
        (0.0, 1.0)
    } else {
        (0.0, -credit)
    }
}

/// `log σ(z)` without overflow.
fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

/// Objective value and its gradient with respect to the flattened weights.
pub fn objective(model: &PolicyModel, examples: &[CreditedExample], l2: f64) -> (f64, Vec<f64>) {
    let mut grad: Vec<f64> = model.weights.iter().map(|w| l2 * w).collect();
    let mut loss = 0.5 * l2 * model.weights.iter().map(|w| w * w).sum::<f64>();
    if examples.is_empty() {
        return (loss, grad);
    }
    let n = examples.len() as f64;
    for ex in examples {
        let x = ex.features.as_slice();
        let (y, w) = encode_credit(ex.credit);
        let z = model.score(ex.action, x);
        loss -= w * (y * log_sigmoid(z) + (1.0 - y) * log_sigmoid(-z)) / n;
        let coef = -w * (y - sigmoid(z)) / n;
        let row = &mut grad[ex.action * model.dim..(ex.action + 1) * model.dim];
        for (g, v) in row.iter_mut().zip(x) {
            *g += coef * v;
        }
    }
    (loss, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub model: PolicyModel,
    /// Full-data objective after each epoch.
    pub epoch_losses: Vec<f64>,
    /// Set when there was nothing to train on; the model is all zeros.
    pub empty_input: bool,
}

pub fn train_logistic(
    examples: &[CreditedExample],
    num_actions: usize,
    dim: usize,
    hyper: &Hyperparameters,
) -> TrainOutcome {
    let mut model = PolicyModel::zeros(num_actions, dim);
    if examples.is_empty() {
        return TrainOutcome {
            model,
            epoch_losses: Vec::new(),
            empty_input: true,
        };
    }
    for ex in examples {
        assert!(ex.action < num_actions, "action {} out of range", ex.action);
        assert_eq!(ex.features.len(), dim, "feature dimension");
        assert!(ex.credit.is_finite(), "non-finite credit");
    }

    let mut rng = substream(hyper.seed, Purpose::Training, 0);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let batch_size = hyper.batch_size.max(1);
    let mut epoch_losses = Vec::with_capacity(hyper.epochs);
    let mut batch = Vec::with_capacity(batch_size);

    for _ in 0..hyper.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| examples[i].clone()));
            let (_, grad) = objective(&model, &batch, hyper.l2);
            for (w, g) in model.weights.iter_mut().zip(&grad) {
                *w -= hyper.learning_rate * g;
            }
        }
        epoch_losses.push(objective(&model, examples, hyper.l2).0);
    }
    TrainOutcome {
        model,
        epoch_losses,
        empty_input: false,
    }
}
