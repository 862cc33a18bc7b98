//! Response model: organic view distribution, click and sale probabilities,
//! and the click-driven update of the conversion features.

use super::catalog::{dot, ProductCatalog};
use super::config::EnvConfig;
use super::user::UserState;
use super::EnvError;

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `softmax(Γ ω)` over the catalog.
pub fn organic_view_probs(catalog: &ProductCatalog, user: &UserState) -> Vec<f64> {
    let logits: Vec<f64> = catalog
        .organic_embed
        .iter_rows()
        .map(|row| dot(row, &user.omega))
        .collect();
    softmax(&logits)
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// `σ(β_a · ω + μ)`. Clicking taste follows the organic features, not `δ`.
pub fn click_prob(catalog: &ProductCatalog, user: &UserState, a: usize, config: &EnvConfig) -> f64 {
    sigmoid(dot(catalog.click_embed.row(a), &user.omega) + config.ctr_offset)
}

/// `sale_scale · σ(δ · Λ_a + ν)`.
pub fn sale_prob(catalog: &ProductCatalog, user: &UserState, a: usize, config: &EnvConfig) -> f64 {
    sale_prob_for(&user.delta, catalog, a, config)
}

/// Sale probability for an arbitrary conversion-feature vector.
pub fn sale_prob_for(delta: &[f64], catalog: &ProductCatalog, a: usize, config: &EnvConfig) -> f64 {
    sale_prob_from_affinity(dot(delta, catalog.conversion_embed.row(a)), config)
}

pub fn sale_prob_from_affinity(affinity: f64, config: &EnvConfig) -> f64 {
    config.sale_scale * sigmoid(affinity + config.sale_offset)
}

/// `δ' = (1 - κ) δ + κ Λ_a`; `ω` is left untouched.
pub fn apply_click_update(
    user: &mut UserState,
    catalog: &ProductCatalog,
    a: usize,
    kappa: f64,
) -> Result<(), EnvError> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(EnvError::InvalidKappa(kappa));
    }
    if a >= catalog.num_products() {
        return Err(EnvError::InvalidProduct {
            product: a,
            num_products: catalog.num_products(),
        });
    }
    let lambda = catalog.conversion_embed.row(a);
    for (d, l) in user.delta.iter_mut().zip(lambda) {
        *d = (1.0 - kappa) * *d + kappa * l;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::catalog::Embeddings;

    fn two_product_catalog(gamma: [f64; 2]) -> ProductCatalog {
        let e = Embeddings::from_rows(&[vec![gamma[0]], vec![gamma[1]]]);
        ProductCatalog::new(e.clone(), e.clone(), e)
    }

    #[test]
    fn softmax_examples() {
        let cat = two_product_catalog([1.0, 0.0]);
        let probs = organic_view_probs(&cat, &UserState::from_omega(vec![0.0]));
        assert_eq!(probs, vec![0.5, 0.5]);

        let probs = organic_view_probs(&cat, &UserState::from_omega(vec![3f64.ln()]));
        assert!((probs[0] - 0.75).abs() < 1e-15);
        assert!((probs[1] - 0.25).abs() < 1e-15);

        let same = two_product_catalog([0.7, 0.7]);
        let probs = organic_view_probs(&same, &UserState::from_omega(vec![2.0]));
        assert_eq!(probs, vec![0.5, 0.5]);
    }

    #[test]
    fn softmax_survives_huge_logits() {
        let probs = softmax(&[1000.0, 999.0, -1000.0]);
        assert!(probs.iter().all(|p| p.is_finite()));
        assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn click_prob_examples() {
        // β_a·ω = 1 with β = [1], ω = [1].
        let cat = two_product_catalog([1.0, 0.0]);
        let user = UserState::from_omega(vec![1.0]);
        let mut cfg = EnvConfig {
            ctr_offset: 0.0,
            ..Default::default()
        };
        assert_eq!(click_prob(&cat, &user, 1, &cfg), 0.5);
        cfg.ctr_offset = -3.0;
        assert!((click_prob(&cat, &user, 0, &cfg) - 0.119_202_922_022_117_57).abs() < 1e-12);
        cfg.ctr_offset = -50.0;
        assert!(click_prob(&cat, &user, 0, &cfg) < 1e-20);
    }

    #[test]
    fn click_prob_ignores_delta() {
        let cat = two_product_catalog([1.0, -2.0]);
        let cfg = EnvConfig::default();
        let mut user = UserState::from_omega(vec![0.4]);
        let before = click_prob(&cat, &user, 1, &cfg);
        user.delta = vec![17.0];
        assert_eq!(click_prob(&cat, &user, 1, &cfg), before);
    }

    #[test]
    fn sale_prob_examples() {
        let mut cfg = EnvConfig {
            sale_offset: 0.0,
            sale_scale: 1.0,
            ..Default::default()
        };
        assert_eq!(sale_prob_from_affinity(0.0, &cfg), 0.5);
        cfg.sale_offset = -4.0;
        cfg.sale_scale = 0.1;
        assert!((sale_prob_from_affinity(2.0, &cfg) - 0.011_920_292_202_211_757).abs() < 1e-12);
        let mut prev = 0.0;
        for i in -40..40 {
            let p = sale_prob_from_affinity(f64::from(i) * 0.25, &cfg);
            assert!(p > prev);
            prev = p;
        }
    }

    #[test]
    fn click_update_examples() {
        let e = Embeddings::from_rows(&[vec![0.0, 1.0], vec![3.0, -1.0]]);
        let cat = ProductCatalog::new(e.clone(), e.clone(), e);

        let mut user = UserState::from_omega(vec![1.0, 0.0]);
        apply_click_update(&mut user, &cat, 0, 0.5).unwrap();
        assert_eq!(user.delta, vec![0.5, 0.5]);
        assert_eq!(user.omega, vec![1.0, 0.0]);

        let mut user = UserState::from_omega(vec![1.0, 0.0]);
        apply_click_update(&mut user, &cat, 1, 0.0).unwrap();
        assert_eq!(user.delta, vec![1.0, 0.0]);
        apply_click_update(&mut user, &cat, 1, 1.0).unwrap();
        assert_eq!(user.delta, vec![3.0, -1.0]);

        assert!(matches!(
            apply_click_update(&mut user, &cat, 0, 1.5),
            Err(EnvError::InvalidKappa(_))
        ));
        assert!(matches!(
            apply_click_update(&mut user, &cat, 2, 0.5),
            Err(EnvError::InvalidProduct { .. })
        ));
    }
}
