//! The six-head toxicity regressor: a linear model with sigmoid heads over
//! hashed text features, trained with MSE and Adam. Checkpoints round-trip
//! through a directory with a metadata file and a weights file.

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::attributes::ToxicityProbabilities;
use crate::corpus::{ToxicityRecord, TOXICITY_LABELS};
use crate::error::{Result, ToxgenError};
use crate::scalar::Scalar;

use super::features::{featurize, FeaturizerConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegressorConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub features: FeaturizerConfig,
    /// Fraction of the training records held out for validation, stratified
    /// by the primary toxicity label decile.
    pub validation_fraction: f64,
}

impl Default for RegressorConfig {
    fn default() -> Self {
        Self {
            epochs: 5,
            batch_size: 64,
            learning_rate: 0.05,
            seed: 0,
            features: FeaturizerConfig::default(),
            validation_fraction: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_rmse: f64,
    pub validation_rmse: f64,
}

/// Trained regressor with six sigmoid heads.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Regressor<S: Scalar> {
    pub checkpoint_id: String,
    pub config: RegressorConfig,
    pub weights: Array2<S>,
    pub bias: Array1<S>,
    pub training_log: Vec<EpochLog>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CheckpointMetadata {
    checkpoint_id: String,
    label_order: Vec<String>,
    feature_dim: usize,
    n_heads: usize,
    config_hash: String,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl<S: Scalar> Regressor<S> {
    fn raw_predict(&self, features: &[(usize, f64)]) -> [f64; 6] {
        let mut out = [0.0f64; 6];
        for (h, o) in out.iter_mut().enumerate() {
            let mut z = self.bias[h].to_f64_();
            for &(i, v) in features {
                z += self.weights[[i, h]].to_f64_() * v;
            }
            *o = sigmoid(z);
        }
        out
    }

    /// Predict the six probabilities for a preprocessed text. Deterministic
    /// for a fixed checkpoint; components are in [0,1] by construction.
    pub fn predict_probabilities(&self, text: &str) -> ToxicityProbabilities {
        let feats = featurize(text, &self.config.features);
        ToxicityProbabilities::new(self.raw_predict(&feats))
    }

    /// RMSE over all records and heads.
    pub fn evaluate_rmse(&self, records: &[ToxicityRecord]) -> Result<f64> {
        if records.is_empty() {
            return Err(ToxgenError::Precondition(
                "evaluate_rmse requires a non-empty split".into(),
            ));
        }
        let mut sq = 0.0;
        for rec in records {
            let p = self.predict_probabilities(&rec.text);
            for h in 0..6 {
                let e = p.0[h] - rec.labels[h];
                sq += e * e;
            }
        }
        Ok((sq / (records.len() * 6) as f64).sqrt())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let meta = CheckpointMetadata {
            checkpoint_id: self.checkpoint_id.clone(),
            label_order: TOXICITY_LABELS.iter().map(|s| s.to_string()).collect(),
            feature_dim: self.config.features.dim,
            n_heads: 6,
            config_hash: crate::experiment::hash_value(&serde_json::to_value(&self.config)?),
        };
        std::fs::write(dir.join("metadata.json"), serde_json::to_string_pretty(&meta)?)?;
        std::fs::write(dir.join("weights.json"), serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta: CheckpointMetadata =
            serde_json::from_str(&std::fs::read_to_string(dir.join("metadata.json"))?)?;
        let model: Self = serde_json::from_str(&std::fs::read_to_string(dir.join("weights.json"))?)?;
        if meta.feature_dim != model.config.features.dim || meta.n_heads != 6 {
            return Err(ToxgenError::Shape(format!(
                "checkpoint metadata ({} features) disagrees with weights ({})",
                meta.feature_dim, model.config.features.dim
            )));
        }
        Ok(model)
    }
}

/// RMSE of the constant predictor that always outputs the per-head training
/// mean. The baseline the trained model has to beat.
pub fn constant_mean_rmse(train: &[ToxicityRecord], eval: &[ToxicityRecord]) -> Result<f64> {
    if train.is_empty() || eval.is_empty() {
        return Err(ToxgenError::Precondition("empty split".into()));
    }
    let mut means = [0.0f64; 6];
    for rec in train {
        for h in 0..6 {
            means[h] += rec.labels[h];
        }
    }
    for m in &mut means {
        *m /= train.len() as f64;
    }
    let mut sq = 0.0;
    for rec in eval {
        for h in 0..6 {
            let e = means[h] - rec.labels[h];
            sq += e * e;
        }
    }
    Ok((sq / (eval.len() * 6) as f64).sqrt())
}

/// Deterministic stratified train/validation split by primary-toxicity decile.
pub fn stratified_split(
    records: &[ToxicityRecord],
    validation_fraction: f64,
    seed: u64,
) -> (Vec<ToxicityRecord>, Vec<ToxicityRecord>) {
    let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); 10];
    for (i, rec) in records.iter().enumerate() {
        let decile = ((rec.labels[0] * 10.0).floor() as usize).min(9);
        buckets[decile].push(i);
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut train_idx = Vec::new();
    let mut val_idx = Vec::new();
    for mut bucket in buckets {
        bucket.shuffle(&mut rng);
        let n_val = ((bucket.len() as f64) * validation_fraction).round() as usize;
        val_idx.extend(bucket.drain(..n_val.min(bucket.len())));
        train_idx.extend(bucket);
    }
    train_idx.sort_unstable();
    val_idx.sort_unstable();
    (
        train_idx.iter().map(|&i| records[i].clone()).collect(),
        val_idx.iter().map(|&i| records[i].clone()).collect(),
    )
}

/// Train the regressor, returning the checkpoint with the best validation
/// RMSE. The per-epoch log is kept on the returned model.
pub fn train_regressor<S: Scalar>(
    records: &[ToxicityRecord],
    config: &RegressorConfig,
) -> Result<Regressor<S>> {
    if records.is_empty() {
        return Err(ToxgenError::Precondition(
            "train_regressor requires a non-empty split".into(),
        ));
    }
    for rec in records {
        rec.validate()?;
    }
    let (train, val) = stratified_split(records, config.validation_fraction, config.seed);
    let val_ref: &[ToxicityRecord] = if val.is_empty() { &train } else { &val };

    let dim = config.features.dim;
    let mut model = Regressor::<S> {
        checkpoint_id: format!("toxreg-seed{}", config.seed),
        config: config.clone(),
        weights: Array2::zeros((dim, 6)),
        bias: Array1::zeros(6),
        training_log: Vec::new(),
    };

    // Pre-featurize once.
    let feats: Vec<Vec<(usize, f64)>> = train
        .iter()
        .map(|r| featurize(&r.text, &config.features))
        .collect();

    // Adam state.
    let mut m_w = Array2::<f64>::zeros((dim, 6));
    let mut v_w = Array2::<f64>::zeros((dim, 6));
    let mut m_b = [0.0f64; 6];
    let mut v_b = [0.0f64; 6];
    let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-8f64);
    let mut step = 0usize;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..train.len()).collect();

    let mut best: Option<(f64, Regressor<S>)> = None;
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size.max(1)) {
            // Sparse gradient accumulation for this minibatch.
            let mut g_w: std::collections::HashMap<(usize, usize), f64> =
                std::collections::HashMap::new();
            let mut g_b = [0.0f64; 6];
            let scale = 1.0 / (chunk.len() * 6) as f64;
            for &i in chunk {
                let f = &feats[i];
                let mut z = [0.0f64; 6];
                for (h, zh) in z.iter_mut().enumerate() {
                    *zh = model.bias[h].to_f64_();
                    for &(j, v) in f {
                        *zh += model.weights[[j, h]].to_f64_() * v;
                    }
                }
                for h in 0..6 {
                    let p = sigmoid(z[h]);
                    if !p.is_finite() {
                        return Err(ToxgenError::NonFinite(format!(
                            "prediction at record {i}, head {h}"
                        )));
                    }
                    let dz = 2.0 * (p - train[i].labels[h]) * p * (1.0 - p) * scale;
                    g_b[h] += dz;
                    for &(j, v) in f {
                        *g_w.entry((j, h)).or_insert(0.0) += dz * v;
                    }
                }
            }
            // Adam update on touched coordinates (bias always).
            step += 1;
            let corr1 = 1.0 - beta1.powi(step as i32);
            let corr2 = 1.0 - beta2.powi(step as i32);
            for ((j, h), g) in g_w {
                let m = &mut m_w[[j, h]];
                let v = &mut v_w[[j, h]];
                *m = beta1 * *m + (1.0 - beta1) * g;
                *v = beta2 * *v + (1.0 - beta2) * g * g;
                let upd = config.learning_rate * (*m / corr1) / ((*v / corr2).sqrt() + eps);
                model.weights[[j, h]] = model.weights[[j, h]] - S::from_f64_(upd);
            }
            for h in 0..6 {
                let g = g_b[h];
                m_b[h] = beta1 * m_b[h] + (1.0 - beta1) * g;
                v_b[h] = beta2 * v_b[h] + (1.0 - beta2) * g * g;
                let upd = config.learning_rate * (m_b[h] / corr1) / ((v_b[h] / corr2).sqrt() + eps);
                model.bias[h] = model.bias[h] - S::from_f64_(upd);
            }
        }
        let train_rmse = model.evaluate_rmse(&train)?;
        let validation_rmse = model.evaluate_rmse(val_ref)?;
        if !train_rmse.is_finite() || !validation_rmse.is_finite() {
            return Err(ToxgenError::NonFinite(format!(
                "RMSE at epoch {epoch}: train={train_rmse}, val={validation_rmse}"
            )));
        }
        log::info!("epoch {epoch}: train RMSE {train_rmse:.5}, val RMSE {validation_rmse:.5}");
        model.training_log.push(EpochLog {
            epoch,
            train_rmse,
            validation_rmse,
        });
        if best.as_ref().map_or(true, |(b, _)| validation_rmse < *b) {
            best = Some((validation_rmse, model.clone()));
        }
    }
    let (_, mut best_model) = best.expect("at least one epoch");
    best_model.training_log = model.training_log;
    Ok(best_model)
}
