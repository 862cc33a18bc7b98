use crate::env::{click_prob, sale_prob_for, EnvConfig, ProductCatalog, UserState};

/// Expected one-step incremental sale mass of recommending `a`: the click
/// probability times the total change in per-product sale probabilities
/// that the click update would cause.
pub fn oracle_incremental_score(catalog: &ProductCatalog, user: &UserState, config: &EnvConfig, a: usize) -> f64 {
    let kappa = config.kappa;
    let lambda_a = catalog.conversion_embed.row(a);
    let shifted: Vec<f64> = user
        .delta
        .iter()
        .zip(lambda_a)
        .map(|(d, l)| (1.0 - kappa) * d + kappa * l)
        .collect();
    let lift: f64 = (0..catalog.num_products())
        .map(|b| sale_prob_for(&shifted, catalog, b, config) - sale_prob_for(&user.delta, catalog, b, config))
        .sum();
    click_prob(catalog, user, a, config) * lift
}

pub fn oracle_scores(catalog: &ProductCatalog, user: &UserState, config: &EnvConfig) -> Vec<f64> {
    (0..catalog.num_products())
        .map(|a| oracle_incremental_score(catalog, user, config, a))
        .collect()
}
