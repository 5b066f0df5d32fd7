//! Hashed text featurizer backing the toxicity regressor: word unigrams plus
//! character trigrams, feature-hashed into a fixed-dimension sparse vector
//! and l2-normalized.

use serde::{Deserialize, Serialize};
use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturizerConfig {
    pub dim: usize,
    /// Inputs longer than this many whitespace tokens are truncated (with a
    /// warning) before featurization.
    pub max_tokens: usize,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        Self {
            dim: 1 << 15,
            max_tokens: 512,
        }
    }
}

fn bucket(kind: u8, item: &str, dim: usize) -> usize {
    let mut h = DefaultHasher::new();
    kind.hash(&mut h);
    item.hash(&mut h);
    (h.finish() as usize) % dim
}

/// Sparse l2-normalized feature vector as (index, value) pairs with strictly
/// increasing indices.
pub fn featurize(text: &str, cfg: &FeaturizerConfig) -> Vec<(usize, f64)> {
    let tokens: Vec<&str> = text.split_whitespace().collect();
    let tokens = if tokens.len() > cfg.max_tokens {
        log::warn!(
            "input of {} tokens truncated to {} for featurization",
            tokens.len(),
            cfg.max_tokens
        );
        &tokens[..cfg.max_tokens]
    } else {
        &tokens[..]
    };

    let mut counts: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    for tok in tokens {
        *counts.entry(bucket(0, tok, cfg.dim)).or_insert(0.0) += 1.0;
        let chars: Vec<char> = tok.chars().collect();
        for w in chars.windows(3) {
            let gram: String = w.iter().collect();
            *counts.entry(bucket(1, &gram, cfg.dim)).or_insert(0.0) += 1.0;
        }
    }
    let norm = counts.values().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Vec::new();
    }
    counts.into_iter().map(|(i, v)| (i, v / norm)).collect()
}
