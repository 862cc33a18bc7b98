use crate::env::{Event, EventKind};

/// Normalized organic view counts per product followed by a constant 1.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn from_vec(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Summarizes a history prefix. Only organic views count; bandit and
/// conversion events are ignored.
pub fn featurize(history: &[Event], num_products: usize) -> FeatureVector {
    let mut values = vec![0.0; num_products + 1];
    let mut views = 0usize;
    for e in history {
        if let EventKind::Organic { product } = e.kind {
            values[product] += 1.0;
            views += 1;
        }
    }
    if views > 0 {
        let total = views as f64;
        for v in &mut values[..num_products] {
            *v /= total;
        }
    }
    values[num_products] = 1.0;
    FeatureVector(values)
}
