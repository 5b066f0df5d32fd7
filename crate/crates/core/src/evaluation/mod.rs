//! Generation quality metrics: max-BLEU, ROUGE-L F1, BERTScore-style F1,
//! and pluggable toxicity scoring, aggregated into a `MetricReport`.

mod bert;
mod bleu;
mod rouge;
mod toxicity;

pub use bert::{bert_score_f1, bert_score_f1_single};
pub use bleu::{max_bleu, sentence_bleu};
pub use rouge::{rouge_l_f1, rouge_l_f1_single};
pub use toxicity::{toxicity_of_generations, HttpScorer, RegressorScorer, ToxicityScorer};

use serde::{Deserialize, Serialize};

use crate::embed::SentenceEncoder;
use crate::error::{Result, ToxgenError};

/// One hypothesis with its gold references.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalInput {
    pub post_id: String,
    pub hypothesis: String,
    pub references: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleMetrics {
    pub post_id: String,
    pub max_bleu: f64,
    pub rouge_l_f1: f64,
    /// Absent when no scorer embedder is configured.
    pub bert_score_f1: Option<f64>,
    /// Absent when toxicity scoring is off or failed for this sample.
    pub toxicity: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricReport {
    pub per_sample: Vec<SampleMetrics>,
    pub mean_max_bleu: f64,
    pub mean_rouge_l_f1: f64,
    pub mean_bert_score_f1: Option<f64>,
    pub mean_toxicity: Option<f64>,
    pub toxicity_std: Option<f64>,
    pub n_evaluated: usize,
    /// Samples dropped for having no references.
    pub n_skipped: usize,
}

fn mean_of(values: impl Iterator<Item = f64>) -> Option<(f64, f64, usize)> {
    let v: Vec<f64> = values.collect();
    if v.is_empty() {
        return None;
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
    Some((m, var.sqrt(), v.len()))
}

/// Score every input. Samples with empty reference sets are skipped and
/// counted; toxicity failures leave the sample's toxicity absent.
pub fn evaluate(
    inputs: &[EvalInput],
    embedder: Option<&dyn SentenceEncoder>,
    tox: Option<&dyn ToxicityScorer>,
) -> Result<MetricReport> {
    if inputs.is_empty() {
        return Err(ToxgenError::Precondition(
            "evaluate requires at least one sample".into(),
        ));
    }
    let mut per_sample = Vec::new();
    let mut n_skipped = 0usize;
    let tox_scores = tox.map(|scorer| {
        toxicity_of_generations(
            &inputs.iter().map(|i| i.hypothesis.clone()).collect::<Vec<_>>(),
            scorer,
        )
    });
    for (i, input) in inputs.iter().enumerate() {
        let Some(b) = max_bleu(&input.hypothesis, &input.references) else {
            log::warn!("post {} has no references; skipped", input.post_id);
            n_skipped += 1;
            continue;
        };
        let r = rouge_l_f1(&input.hypothesis, &input.references).unwrap();
        let bs = embedder.map(|e| bert_score_f1(&input.hypothesis, &input.references, e).unwrap());
        per_sample.push(SampleMetrics {
            post_id: input.post_id.clone(),
            max_bleu: b,
            rouge_l_f1: r,
            bert_score_f1: bs,
            toxicity: tox_scores.as_ref().and_then(|t| t[i]),
        });
    }
    let n_evaluated = per_sample.len();
    let mean = |f: &dyn Fn(&SampleMetrics) -> f64| {
        if n_evaluated == 0 {
            0.0
        } else {
            per_sample.iter().map(|s| f(s)).sum::<f64>() / n_evaluated as f64
        }
    };
    let bert_mean = mean_of(per_sample.iter().filter_map(|s| s.bert_score_f1)).map(|x| x.0);
    let tox_stats = mean_of(per_sample.iter().filter_map(|s| s.toxicity));
    Ok(MetricReport {
        mean_max_bleu: mean(&|s| s.max_bleu),
        mean_rouge_l_f1: mean(&|s| s.rouge_l_f1),
        mean_bert_score_f1: bert_mean,
        mean_toxicity: tox_stats.map(|x| x.0),
        toxicity_std: tox_stats.map(|x| x.1),
        n_evaluated,
        n_skipped,
        per_sample,
    })
}
