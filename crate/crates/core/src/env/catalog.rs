use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::EnvConfig;

/// Dense row-major matrix with one embedding per row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embeddings {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Embeddings {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged embedding rows");
        Self {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.cols.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Per-product embeddings for the three behaviours: organic views,
/// clicks on recommendations, and conversions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductCatalog {
    pub organic_embed: Embeddings,
    pub click_embed: Embeddings,
    pub conversion_embed: Embeddings,
}

impl ProductCatalog {
    pub fn new(organic: Embeddings, click: Embeddings, conversion: Embeddings) -> Self {
        assert_eq!(organic.rows(), click.rows());
        assert_eq!(organic.rows(), conversion.rows());
        assert_eq!(organic.cols(), click.cols());
        assert_eq!(organic.cols(), conversion.cols());
        Self {
            organic_embed: organic,
            click_embed: click,
            conversion_embed: conversion,
        }
    }

    pub fn num_products(&self) -> usize {
        self.organic_embed.rows()
    }

    pub fn embed_dim(&self) -> usize {
        self.organic_embed.cols()
    }
}

/// Draws organic and click rows i.i.d. standard Gaussian; each conversion
/// row mixes its organic row with fresh noise,
/// `Λ_p = ρ Γ_p + sqrt(1 - ρ²) ε_p`.
pub fn sample_catalog<R: Rng + ?Sized>(config: &EnvConfig, rng: &mut R) -> ProductCatalog {
    let (p, k) = (config.num_products, config.embed_dim);
    let rho = config.lambda_corr;
    let noise_weight = (1.0 - rho * rho).max(0.0).sqrt();

    let mut organic = Embeddings::zeros(p, k);
    let mut click = Embeddings::zeros(p, k);
    let mut conversion = Embeddings::zeros(p, k);
    for prod in 0..p {
        for j in 0..k {
            organic.row_mut(prod)[j] = rng.sample(StandardNormal);
        }
        for j in 0..k {
            click.row_mut(prod)[j] = rng.sample(StandardNormal);
        }
        for j in 0..k {
            let eps: f64 = rng.sample(StandardNormal);
            // ρ = ±1 must reproduce Γ exactly, without a 0·ε term.
            conversion.row_mut(prod)[j] = if noise_weight == 0.0 {
                rho * organic.row(prod)[j]
            } else {
                rho * organic.row(prod)[j] + noise_weight * eps
            };
        }
    }
    ProductCatalog::new(organic, click, conversion)
}
