//! Sentence-level smoothed 4-gram BLEU, scaled to [0, 100], with the max
//! taken over references. Add-one smoothing applies to orders above 1;
//! orders longer than the hypothesis are skipped, so identity still scores
//! exactly 100.

use std::collections::HashMap;

fn ngram_counts(tokens: &[&str], n: usize) -> HashMap<Vec<String>, usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *counts
                .entry(w.iter().map(|s| s.to_string()).collect::<Vec<_>>())
                .or_insert(0) += 1;
        }
    }
    counts
}

/// BLEU of `hyp` against a single reference, in [0, 100].
pub fn sentence_bleu(hyp: &str, reference: &str) -> f64 {
    let h: Vec<&str> = hyp.split_whitespace().collect();
    let r: Vec<&str> = reference.split_whitespace().collect();
    if h.is_empty() || r.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=4 {
        if h.len() < n {
            break;
        }
        let hc = ngram_counts(&h, n);
        let rc = ngram_counts(&r, n);
        let total: usize = hc.values().sum();
        let matched: usize = hc
            .iter()
            .map(|(g, &c)| c.min(*rc.get(g).unwrap_or(&0)))
            .sum();
        let p = if n == 1 {
            matched as f64 / total as f64
        } else {
            (matched as f64 + 1.0) / (total as f64 + 1.0)
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
        orders += 1;
    }
    let precision = (log_sum / orders as f64).exp();
    let bp = if h.len() < r.len() {
        (1.0 - r.len() as f64 / h.len() as f64).exp()
    } else {
        1.0
    };
    100.0 * bp * precision
}

/// Maximum sentence BLEU over the reference set.
pub fn max_bleu(hyp: &str, refs: &[String]) -> Option<f64> {
    if refs.is_empty() {
        return None;
    }
    refs.iter()
        .map(|r| sentence_bleu(hyp, r))
        .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
}
