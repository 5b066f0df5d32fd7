//! Beam-search decoding with length-penalised scores. One beam reduces to
//! greedy decoding.

use crate::error::{Result, ToxgenError};
use crate::nn::Tape;
use crate::scalar::Scalar;

use super::model::{DecodeParams, GenExample, GeneratedExplanation, GenerationModel};
use super::tokenizer::{BOS, EOS};

#[derive(Clone)]
struct Beam {
    ids: Vec<usize>,
    log_prob: f64,
    finished: bool,
}

impl Beam {
    /// Generated length excludes the leading BOS.
    fn gen_len(&self) -> usize {
        self.ids.len() - 1
    }

    fn score(&self, length_penalty: f64) -> f64 {
        let len = self.gen_len().max(1) as f64;
        self.log_prob / ((5.0 + len) / 6.0).powf(length_penalty)
    }
}

fn log_softmax(row: &[f64]) -> Vec<f64> {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_z = row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln() + max;
    row.iter().map(|&x| x - log_z).collect()
}

fn decode_one<S: Scalar>(
    model: &GenerationModel<S>,
    ex: &GenExample,
    dp: &DecodeParams,
) -> Result<String> {
    let memory = {
        let mut tape = Tape::new();
        let p = model.leaf_params(&mut tape)?;
        let node = model.memory(&mut tape, &p, ex)?;
        tape.value(node).clone()
    };
    let max_steps = dp.max_length.min(model.config.max_len - 1);
    let mut beams = vec![Beam {
        ids: vec![BOS],
        log_prob: 0.0,
        finished: false,
    }];
    for _ in 0..max_steps {
        if beams.iter().all(|b| b.finished) {
            break;
        }
        let mut candidates: Vec<Beam> = Vec::new();
        for beam in &beams {
            if beam.finished {
                candidates.push(beam.clone());
                continue;
            }
            let mut tape = Tape::new();
            let p = model.leaf_params(&mut tape)?;
            let mem = tape.leaf(memory.clone());
            let logits = model.decoder_logits(&mut tape, &p, mem, &beam.ids)?;
            let values = tape.value(logits);
            let last: Vec<f64> = values
                .row(values.nrows() - 1)
                .iter()
                .map(|x| x.to_f64_())
                .collect();
            let log_probs = log_softmax(&last);
            let mut ranked: Vec<usize> = (0..log_probs.len()).collect();
            ranked.sort_by(|&a, &b| log_probs[b].partial_cmp(&log_probs[a]).unwrap());
            for &tok in ranked.iter().take(dp.beams) {
                let mut ids = beam.ids.clone();
                ids.push(tok);
                candidates.push(Beam {
                    ids,
                    log_prob: beam.log_prob + log_probs[tok],
                    finished: tok == EOS,
                });
            }
        }
        candidates.sort_by(|a, b| {
            b.score(dp.length_penalty)
                .partial_cmp(&a.score(dp.length_penalty))
                .unwrap()
        });
        candidates.truncate(dp.beams);
        beams = candidates;
    }
    let best = beams
        .iter()
        .max_by(|a, b| {
            a.score(dp.length_penalty)
                .partial_cmp(&b.score(dp.length_penalty))
                .unwrap()
        })
        .ok_or_else(|| ToxgenError::Precondition("no beams survived".into()))?;
    Ok(model.tokenizer.decode(&best.ids))
}

/// Decode every example with the given beam settings. Output order matches
/// input order and repeated runs are bitwise identical.
pub fn generate<S: Scalar>(
    model: &GenerationModel<S>,
    examples: &[GenExample],
    dp: &DecodeParams,
) -> Result<Vec<GeneratedExplanation>> {
    dp.validate()?;
    let fingerprint = model.config_fingerprint();
    examples
        .iter()
        .map(|ex| {
            Ok(GeneratedExplanation {
                post_id: ex.post_id.clone(),
                text: decode_one(model, ex, dp)?,
                config_fingerprint: fingerprint.clone(),
                seed: model.config.seed,
            })
        })
        .collect()
}
