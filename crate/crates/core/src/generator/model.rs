//! The attribute-infused encoder-decoder: a compact trainable transformer
//! with input-space concatenation (C1/C2), embedding-space fusion (C3/C4),
//! and CoDA fusion (C5), trained with token cross-entropy.

use std::collections::HashMap;
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ToxgenError};
use crate::nn::{NodeId, ParamStore, Tape};
use crate::scalar::Scalar;

use super::fusion::FusedEncoding;
use super::tokenizer::{Tokenizer, BOS, EOS};

/// How attribute information enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Infusion {
    None,
    C1,
    C2,
    C3,
    C4,
    C5,
}

impl Infusion {
    /// C3-C5 fuse in embedding space and need the raw attribute signal.
    pub fn is_embedding_fusion(self) -> bool {
        matches!(self, Infusion::C3 | Infusion::C4 | Infusion::C5)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Encoder/decoder hidden size (768 mirrors the full-scale backbone;
    /// desk-scale runs shrink it).
    pub d_model: usize,
    pub ffn_dim: usize,
    pub max_len: usize,
    pub max_vocab: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub coda_alpha: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        Self {
            d_model: 768,
            ffn_dim: 1536,
            max_len: 128,
            max_vocab: 20000,
            epochs: 10,
            batch_size: 8,
            learning_rate: 1e-3,
            seed: 0,
            coda_alpha: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeParams {
    pub beams: usize,
    pub length_penalty: f64,
    pub max_length: usize,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self {
            beams: 10,
            length_penalty: 5.0,
            max_length: 32,
        }
    }
}

impl DecodeParams {
    pub fn validate(&self) -> Result<()> {
        if self.beams < 1 {
            return Err(ToxgenError::Precondition("beams must be >= 1".into()));
        }
        Ok(())
    }
}

/// One training/inference example with whatever attribute signal the
/// infusion mode needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenExample {
    pub post_id: String,
    /// Full model input for None/C1/C2; the bare post for C3-C5.
    pub input_text: String,
    /// Probability vector for C3.
    pub probabilities: Option<[f64; 6]>,
    /// Thresholded token string for C4/C5.
    pub attr_tokens: Option<String>,
    pub target: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratedExplanation {
    pub post_id: String,
    pub text: String,
    pub config_fingerprint: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainingLog {
    pub epoch_losses: Vec<f64>,
    pub aborted_non_finite: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct GenerationModel<S: Scalar> {
    pub config: GenConfig,
    pub infusion: Infusion,
    pub tokenizer: Tokenizer,
    pub params: ParamStore<S>,
    pub training_log: TrainingLog,
}

pub(super) struct ParamNodes {
    map: HashMap<String, NodeId>,
}

impl ParamNodes {
    pub fn get(&self, name: &str) -> NodeId {
        self.map[name]
    }
}

const PARAM_NAMES: &[&str] = &[
    "emb",
    "pos",
    "enc.wq",
    "enc.wk",
    "enc.wv",
    "enc.wo",
    "enc.w1",
    "enc.b1",
    "enc.w2",
    "enc.b2",
    "dec.self.wq",
    "dec.self.wk",
    "dec.self.wv",
    "dec.self.wo",
    "dec.cross.wq",
    "dec.cross.wk",
    "dec.cross.wv",
    "dec.cross.wo",
    "dec.w1",
    "dec.b1",
    "dec.w2",
    "dec.b2",
    "out.w",
    "out.b",
    "fuse.v_lift",
    "fuse.v_proj",
];

impl<S: Scalar> GenerationModel<S> {
    pub fn new(config: GenConfig, infusion: Infusion, tokenizer: Tokenizer) -> Self {
        let d = config.d_model;
        let h = config.ffn_dim;
        let v = tokenizer.len();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
        let mut params = ParamStore::new();
        let scale = (1.0 / d as f64).sqrt();
        let add = |p: &mut ParamStore<S>, name: &str, r: usize, c: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            p.insert_random(name, r, c, scale, rng);
        };
        add(&mut params, "emb", v, d, &mut rng);
        add(&mut params, "pos", config.max_len, d, &mut rng);
        for pre in ["enc", "dec.self", "dec.cross"] {
            add(&mut params, &format!("{pre}.wq"), d, d, &mut rng);
            add(&mut params, &format!("{pre}.wk"), d, d, &mut rng);
            add(&mut params, &format!("{pre}.wv"), d, d, &mut rng);
            add(&mut params, &format!("{pre}.wo"), d, d, &mut rng);
        }
        for pre in ["enc", "dec"] {
            add(&mut params, &format!("{pre}.w1"), d, h, &mut rng);
            params.insert(&format!("{pre}.b1"), Array2::zeros((1, h)));
            add(&mut params, &format!("{pre}.w2"), h, d, &mut rng);
            params.insert(&format!("{pre}.b2"), Array2::zeros((1, d)));
        }
        add(&mut params, "out.w", d, v, &mut rng);
        params.insert("out.b", Array2::zeros((1, v)));
        add(&mut params, "fuse.v_lift", 6, d, &mut rng);
        add(&mut params, "fuse.v_proj", 2 * d, d, &mut rng);
        Self {
            config,
            infusion,
            tokenizer,
            params,
            training_log: TrainingLog {
                epoch_losses: Vec::new(),
                aborted_non_finite: false,
            },
        }
    }

    pub fn config_fingerprint(&self) -> String {
        crate::experiment::hash_value(
            &serde_json::json!({ "config": &self.config, "infusion": &self.infusion }),
        )
    }

    pub(super) fn leaf_params(&self, tape: &mut Tape<S>) -> Result<ParamNodes> {
        let mut map = HashMap::new();
        for name in PARAM_NAMES {
            map.insert(name.to_string(), tape.leaf(self.params.get(name)?.clone()));
        }
        Ok(ParamNodes { map })
    }

    fn truncate_ids(&self, mut ids: Vec<usize>) -> Vec<usize> {
        if ids.len() > self.config.max_len {
            log::warn!(
                "input of {} tokens truncated to model context {}",
                ids.len(),
                self.config.max_len
            );
            ids.truncate(self.config.max_len);
        }
        ids
    }

    fn attention(
        &self,
        tape: &mut Tape<S>,
        q_in: NodeId,
        kv_in: NodeId,
        wq: NodeId,
        wk: NodeId,
        wv: NodeId,
        wo: NodeId,
        mask: Option<Array2<S>>,
    ) -> Result<NodeId> {
        let d = S::from_usize_(self.config.d_model);
        let q = tape.matmul(q_in, wq)?;
        let k = tape.matmul(kv_in, wk)?;
        let v = tape.matmul(kv_in, wv)?;
        let kt = tape.transpose(k);
        let scores = tape.matmul(q, kt)?;
        let scaled = tape.scale(scores, S::one() / d.sqrt());
        let masked = match mask {
            Some(m) => tape.add_const(scaled, m)?,
            None => scaled,
        };
        let attn = tape.softmax_rows(masked);
        let ctx = tape.matmul(attn, v)?;
        tape.matmul(ctx, wo)
    }

    fn ffn(
        &self,
        tape: &mut Tape<S>,
        x: NodeId,
        w1: NodeId,
        b1: NodeId,
        w2: NodeId,
        b2: NodeId,
    ) -> Result<NodeId> {
        let z = tape.matmul(x, w1)?;
        let z = tape.add_row(z, b1)?;
        let a = tape.relu(z);
        let z2 = tape.matmul(a, w2)?;
        tape.add_row(z2, b2)
    }

    /// Encoder over already-embedded rows (positional rows added here).
    pub(super) fn encode_rows(
        &self,
        tape: &mut Tape<S>,
        p: &ParamNodes,
        rows: NodeId,
    ) -> Result<NodeId> {
        let n = tape.value(rows).nrows();
        let positions: Vec<usize> = (0..n).collect();
        let pos = tape.gather(p.get("pos"), &positions)?;
        let e = tape.add(rows, pos)?;
        let attn = self.attention(
            tape,
            e,
            e,
            p.get("enc.wq"),
            p.get("enc.wk"),
            p.get("enc.wv"),
            p.get("enc.wo"),
            None,
        )?;
        let h1 = tape.add(e, attn)?;
        let f = self.ffn(
            tape,
            h1,
            p.get("enc.w1"),
            p.get("enc.b1"),
            p.get("enc.w2"),
            p.get("enc.b2"),
        )?;
        tape.add(h1, f)
    }

    pub(super) fn encode_ids(
        &self,
        tape: &mut Tape<S>,
        p: &ParamNodes,
        ids: &[usize],
    ) -> Result<NodeId> {
        if ids.is_empty() {
            return Err(ToxgenError::Precondition("cannot encode empty input".into()));
        }
        let rows = tape.gather(p.get("emb"), ids)?;
        self.encode_rows(tape, p, rows)
    }

    /// Broadcast a (1 x d) row to (n x d) via a constant ones column.
    fn broadcast_row(&self, tape: &mut Tape<S>, row: NodeId, n: usize) -> Result<NodeId> {
        let ones = tape.leaf(Array2::from_elem((n, 1), S::one()));
        tape.matmul(ones, row)
    }

    /// Concatenate toxic and utterance encodings along the sequence, then
    /// project each row paired with the pooled toxic encoding through
    /// `V_{2d x d}`.
    fn concat_project(
        &self,
        tape: &mut Tape<S>,
        p: &ParamNodes,
        h_toxic: NodeId,
        h_utter: NodeId,
    ) -> Result<NodeId> {
        let cat = tape.concat_rows(h_toxic, h_utter)?;
        let pooled = tape.mean_rows(h_toxic);
        let n = tape.value(cat).nrows();
        let pooled_b = self.broadcast_row(tape, pooled, n)?;
        let paired = tape.concat_cols(pooled_b, cat)?;
        tape.matmul(paired, p.get("fuse.v_proj"))
    }

    fn coda(
        &self,
        tape: &mut Tape<S>,
        h_toxic: NodeId,
        h_utter: NodeId,
    ) -> Result<NodeId> {
        let d = S::from_usize_(self.config.d_model);
        let inv_sqrt = S::one() / d.sqrt();
        let kt = tape.transpose(h_toxic);
        let qk = tape.matmul(h_utter, kt)?;
        let affinity_in = tape.scale(qk, inv_sqrt);
        let affinity = tape.tanh(affinity_in);
        let dist = tape.neg_abs_dist(h_utter, h_toxic)?;
        let gate_in = tape.scale(dist, S::from_f64_(self.config.coda_alpha) * inv_sqrt);
        let gate = tape.sigmoid(gate_in);
        let weights = tape.mul(affinity, gate)?;
        let psi = tape.matmul(weights, h_toxic)?;
        tape.add(h_utter, psi)
    }

    /// Encoder memory for one example under this model's infusion mode.
    pub(super) fn memory(
        &self,
        tape: &mut Tape<S>,
        p: &ParamNodes,
        ex: &GenExample,
    ) -> Result<NodeId> {
        let input_ids = self.truncate_ids(self.tokenizer.encode(&ex.input_text));
        match self.infusion {
            Infusion::None | Infusion::C1 | Infusion::C2 => self.encode_ids(tape, p, &input_ids),
            Infusion::C3 => {
                let probs = ex.probabilities.ok_or_else(|| {
                    ToxgenError::Precondition("C3 requires a probability vector".into())
                })?;
                let h_utter = self.encode_ids(tape, p, &input_ids)?;
                let p_row = tape.leaf(Array2::from_shape_vec(
                    (1, 6),
                    probs.iter().map(|&x| S::from_f64_(x)).collect(),
                )
                .expect("1x6"));
                let lifted = tape.matmul(p_row, p.get("fuse.v_lift"))?;
                let h_toxic = self.encode_rows(tape, p, lifted)?;
                self.concat_project(tape, p, h_toxic, h_utter)
            }
            Infusion::C4 | Infusion::C5 => {
                let toks = ex.attr_tokens.as_ref().ok_or_else(|| {
                    ToxgenError::Precondition("C4/C5 require an attribute token string".into())
                })?;
                let h_utter = self.encode_ids(tape, p, &input_ids)?;
                let tok_ids = self.tokenizer.encode(toks);
                let h_toxic = self.encode_ids(tape, p, &tok_ids)?;
                if self.infusion == Infusion::C4 {
                    self.concat_project(tape, p, h_toxic, h_utter)
                } else {
                    self.coda(tape, h_toxic, h_utter)
                }
            }
        }
    }

    fn causal_mask(&self, n: usize) -> Array2<S> {
        let neg = S::from_f64_(-1e9);
        Array2::from_shape_fn((n, n), |(i, j)| if j > i { neg } else { S::zero() })
    }

    /// Decoder logits for a target prefix against the given memory.
    pub(super) fn decoder_logits(
        &self,
        tape: &mut Tape<S>,
        p: &ParamNodes,
        memory: NodeId,
        dec_ids: &[usize],
    ) -> Result<NodeId> {
        let rows = tape.gather(p.get("emb"), dec_ids)?;
        let positions: Vec<usize> = (0..dec_ids.len()).collect();
        let pos = tape.gather(p.get("pos"), &positions)?;
        let e = tape.add(rows, pos)?;
        let self_attn = self.attention(
            tape,
            e,
            e,
            p.get("dec.self.wq"),
            p.get("dec.self.wk"),
            p.get("dec.self.wv"),
            p.get("dec.self.wo"),
            Some(self.causal_mask(dec_ids.len())),
        )?;
        let h1 = tape.add(e, self_attn)?;
        let cross = self.attention(
            tape,
            h1,
            memory,
            p.get("dec.cross.wq"),
            p.get("dec.cross.wk"),
            p.get("dec.cross.wv"),
            p.get("dec.cross.wo"),
            None,
        )?;
        let h2 = tape.add(h1, cross)?;
        let f = self.ffn(
            tape,
            h2,
            p.get("dec.w1"),
            p.get("dec.b1"),
            p.get("dec.w2"),
            p.get("dec.b2"),
        )?;
        let h3 = tape.add(h2, f)?;
        let logits = tape.matmul(h3, p.get("out.w"))?;
        tape.add_row(logits, p.get("out.b"))
    }

    fn target_ids(&self, ex: &GenExample) -> (Vec<usize>, Vec<usize>) {
        let mut tgt = self.tokenizer.encode(&ex.target);
        let budget = self.config.max_len - 1;
        if tgt.len() > budget {
            tgt.truncate(budget);
        }
        let mut dec_in = vec![BOS];
        dec_in.extend(&tgt);
        let mut dec_tgt = tgt;
        dec_tgt.push(EOS);
        (dec_in, dec_tgt)
    }

    /// Mean per-example loss over a batch, on a single tape.
    fn batch_loss_node(&self, tape: &mut Tape<S>, batch: &[GenExample]) -> Result<NodeId> {
        let p = self.leaf_params(tape)?;
        let mut total: Option<NodeId> = None;
        for ex in batch {
            let memory = self.memory(tape, &p, ex)?;
            let (dec_in, dec_tgt) = self.target_ids(ex);
            let logits = self.decoder_logits(tape, &p, memory, &dec_in)?;
            let loss = tape.cross_entropy(logits, &dec_tgt)?;
            total = Some(match total {
                None => loss,
                Some(t) => tape.add(t, loss)?,
            });
        }
        let total = total.ok_or_else(|| ToxgenError::Precondition("empty batch".into()))?;
        Ok(tape.scale(total, S::one() / S::from_usize_(batch.len())))
    }

    /// Loss value for a batch (no update).
    pub fn batch_loss(&self, batch: &[GenExample]) -> Result<f64> {
        let mut tape = Tape::new();
        let node = self.batch_loss_node(&mut tape, batch)?;
        Ok(tape.value(node)[[0, 0]].to_f64_())
    }

    /// Parameter gradients of the batch loss, keyed by parameter name.
    pub fn batch_gradients(&self, batch: &[GenExample]) -> Result<(f64, HashMap<String, Array2<S>>)> {
        let mut tape = Tape::new();
        let p = self.leaf_params(&mut tape)?;
        let mut total: Option<NodeId> = None;
        for ex in batch {
            let memory = self.memory(&mut tape, &p, ex)?;
            let (dec_in, dec_tgt) = self.target_ids(ex);
            let logits = self.decoder_logits(&mut tape, &p, memory, &dec_in)?;
            let loss = tape.cross_entropy(logits, &dec_tgt)?;
            total = Some(match total {
                None => loss,
                Some(t) => tape.add(t, loss)?,
            });
        }
        let total = total.ok_or_else(|| ToxgenError::Precondition("empty batch".into()))?;
        let mean = tape.scale(total, S::one() / S::from_usize_(batch.len()));
        let loss_val = tape.value(mean)[[0, 0]].to_f64_();
        let grads_by_node = tape.backward(mean)?;
        let mut grads = HashMap::new();
        for name in PARAM_NAMES {
            if let Some(g) = &grads_by_node[p.get(name)] {
                grads.insert(name.to_string(), g.clone());
            }
        }
        Ok((loss_val, grads))
    }

    /// Forward-only fused encodings for inspection and tests.
    pub fn fused_encoding(&self, ex: &GenExample) -> Result<FusedEncoding<S>> {
        let mut tape = Tape::new();
        let p = self.leaf_params(&mut tape)?;
        let input_ids = self.truncate_ids(self.tokenizer.encode(&ex.input_text));
        let h_utter = self.encode_ids(&mut tape, &p, &input_ids)?;
        let (h_toxic, fused) = match self.infusion {
            Infusion::C3 => {
                let probs = ex.probabilities.ok_or_else(|| {
                    ToxgenError::Precondition("C3 requires a probability vector".into())
                })?;
                let p_row = tape.leaf(Array2::from_shape_vec(
                    (1, 6),
                    probs.iter().map(|&x| S::from_f64_(x)).collect(),
                )
                .expect("1x6"));
                let lifted = tape.matmul(p_row, p.get("fuse.v_lift"))?;
                let h_toxic = self.encode_rows(&mut tape, &p, lifted)?;
                let fused = self.concat_project(&mut tape, &p, h_toxic, h_utter)?;
                (h_toxic, fused)
            }
            Infusion::C4 | Infusion::C5 => {
                let toks = ex.attr_tokens.as_ref().ok_or_else(|| {
                    ToxgenError::Precondition("C4/C5 require attribute tokens".into())
                })?;
                let ids = self.tokenizer.encode(toks);
                let h_toxic = self.encode_ids(&mut tape, &p, &ids)?;
                let fused = if self.infusion == Infusion::C4 {
                    self.concat_project(&mut tape, &p, h_toxic, h_utter)?
                } else {
                    self.coda(&mut tape, h_toxic, h_utter)?
                };
                (h_toxic, fused)
            }
            _ => {
                return Err(ToxgenError::Precondition(
                    "fused_encoding applies to C3/C4/C5 models".into(),
                ))
            }
        };
        Ok(FusedEncoding {
            h_utter: tape.value(h_utter).clone(),
            h_toxic: tape.value(h_toxic).clone(),
            fused: tape.value(fused).clone(),
        })
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("model.json"), serde_json::to_string(self)?)?;
        std::fs::write(
            dir.join("fingerprint.json"),
            serde_json::to_string_pretty(&serde_json::json!({
                "config_fingerprint": self.config_fingerprint(),
                "infusion": self.infusion,
                "seed": self.config.seed,
            }))?,
        )?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let mut model: Self =
            serde_json::from_str(&std::fs::read_to_string(dir.join("model.json"))?)?;
        model.tokenizer.rebuild_index();
        Ok(model)
    }
}

/// Train a generation model with the given infusion mode.
///
/// On a non-finite loss the last finite-loss checkpoint is returned with the
/// abort recorded in the training log.
pub fn train_generator<S: Scalar>(
    examples: &[GenExample],
    infusion: Infusion,
    config: &GenConfig,
) -> Result<GenerationModel<S>> {
    if examples.is_empty() {
        return Err(ToxgenError::Precondition(
            "train_generator requires examples".into(),
        ));
    }
    let mut texts: Vec<&str> = Vec::new();
    for ex in examples {
        texts.push(&ex.input_text);
        texts.push(&ex.target);
        if let Some(t) = &ex.attr_tokens {
            texts.push(t);
        }
    }
    let tokenizer = Tokenizer::build(texts.into_iter(), config.max_vocab);
    let mut model = GenerationModel::<S>::new(config.clone(), infusion, tokenizer);

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(7));
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut last_good = model.clone();
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut n_batches = 0usize;
        for chunk in order.chunks(config.batch_size.max(1)) {
            let batch: Vec<GenExample> = chunk.iter().map(|&i| examples[i].clone()).collect();
            let (loss, grads) = model.batch_gradients(&batch)?;
            if !loss.is_finite() {
                log::error!("non-finite loss at epoch {epoch}; returning last good checkpoint");
                last_good.training_log.aborted_non_finite = true;
                return Ok(last_good);
            }
            model.params.adam_step(&grads, config.learning_rate)?;
            epoch_loss += loss;
            n_batches += 1;
        }
        let mean_loss = epoch_loss / n_batches as f64;
        log::info!("epoch {epoch}: mean loss {mean_loss:.5}");
        model.training_log.epoch_losses.push(mean_loss);
        last_good = model.clone();
    }
    Ok(model)
}
