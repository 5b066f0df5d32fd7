//! BERTScore-style F1: greedy token-embedding matching between hypothesis
//! and reference, max over references. The token embedder is pluggable; the
//! default hashed character-n-gram embedder keeps scores in [0, 1].

use crate::embed::{cosine, SentenceEncoder};

fn token_embeddings(text: &str, encoder: &dyn SentenceEncoder) -> Vec<Vec<f64>> {
    text.split_whitespace().map(|t| encoder.embed(t)).collect()
}

fn greedy_match(from: &[Vec<f64>], to: &[Vec<f64>]) -> f64 {
    if from.is_empty() || to.is_empty() {
        return 0.0;
    }
    let total: f64 = from
        .iter()
        .map(|f| {
            to.iter()
                .map(|t| cosine(f, t))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum();
    total / from.len() as f64
}

pub fn bert_score_f1_single(hyp: &str, reference: &str, encoder: &dyn SentenceEncoder) -> f64 {
    let h = token_embeddings(hyp, encoder);
    let r = token_embeddings(reference, encoder);
    let p = greedy_match(&h, &r);
    let rec = greedy_match(&r, &h);
    if p + rec == 0.0 {
        0.0
    } else {
        2.0 * p * rec / (p + rec)
    }
}

/// Maximum BERTScore F1 over the reference set.
pub fn bert_score_f1(hyp: &str, refs: &[String], encoder: &dyn SentenceEncoder) -> Option<f64> {
    if refs.is_empty() {
        return None;
    }
    refs.iter()
        .map(|r| bert_score_f1_single(hyp, r, encoder))
        .fold(None, |acc, x| Some(acc.map_or(x, |a: f64| a.max(x))))
}
