//! Config-driven experiment runs: hashing, caching, end-to-end
//! train/generate/evaluate, the ablation grid, the zero-shot external-LLM
//! baseline, and table-shaped report emission.

pub mod report;
pub mod zeroshot;

pub use zeroshot::{zero_shot_llm_baseline, zero_shot_prompt, ChatClient, HttpChatClient, ZeroShotOutcome};

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::attributes::{
    flip_attribute, perturb_probabilities, thresholded_tokens, AttributeConfig, PerturbMode,
    Rendering, ToxLabel, ToxicityProbabilities,
};
use crate::corpus::{DatasetSplit, PostRecord};
use crate::embed::HashedNgramEncoder;
use crate::error::{Result, ToxgenError};
use crate::evaluation::{evaluate, EvalInput, MetricReport};
use crate::generator::{
    build_input_c1, build_input_c2, generate, train_generator, AttributePosition, DecodeParams,
    GenConfig, GenExample, GeneratedExplanation, Infusion,
};
use crate::kg::RetrievalSelection;
use crate::scalar::Scalar;

/// SHA-256 hex digest of a JSON value. `serde_json` keeps object keys
/// sorted, so the digest is stable under field reordering.
pub fn hash_value(v: &serde_json::Value) -> String {
    let canonical = serde_json::to_string(v).expect("JSON value serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write-then-rename so concurrent readers never see partial files.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let parent = path
        .parent()
        .ok_or_else(|| ToxgenError::Precondition(format!("{} has no parent", path.display())))?;
    std::fs::create_dir_all(parent)?;
    let tmp = parent.join(format!(
        ".{}.tmp-{}",
        path.file_name().unwrap_or_default().to_string_lossy(),
        std::process::id()
    ));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Where attribute probability vectors come from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeSource {
    Regressor,
    InDataset,
    Perturbed(PerturbMode),
    Flipped(ToxLabel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgInfusionConfig {
    pub kg_id: String,
    pub selection: RetrievalSelection,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    pub dataset_id: String,
    pub infusion: Infusion,
    pub attribute_source: Option<AttributeSource>,
    pub kg: Option<KgInfusionConfig>,
    pub lambda: f64,
    pub rendering: Rendering,
    pub decode: DecodeParams,
    pub gen: GenConfig,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        AttributeConfig {
            lambda: self.lambda,
            rendering: self.rendering,
        }
        .validate()?;
        self.decode.validate()?;
        if self.kg.is_some() && self.attribute_source.is_some() {
            return Err(ToxgenError::Config(
                "attribute and KG infusion are mutually exclusive per run".into(),
            ));
        }
        if self.kg.is_some() && self.infusion != Infusion::None {
            return Err(ToxgenError::Config(
                "KG infusion runs use the vanilla model (infusion = none)".into(),
            ));
        }
        match self.infusion {
            Infusion::None => {
                if self.attribute_source.is_some() {
                    return Err(ToxgenError::Config(
                        "vanilla runs take no attribute source".into(),
                    ));
                }
            }
            Infusion::C2 => {
                if self.attribute_source != Some(AttributeSource::InDataset) {
                    return Err(ToxgenError::Config(
                        "C2 requires the in-dataset attribute source".into(),
                    ));
                }
            }
            _ => match self.attribute_source {
                None | Some(AttributeSource::InDataset) => {
                    return Err(ToxgenError::Config(format!(
                        "{:?} needs a probability-based attribute source",
                        self.infusion
                    )));
                }
                Some(AttributeSource::Flipped(_)) if self.rendering != Rendering::SpecialTokens => {
                    return Err(ToxgenError::Config(
                        "flipped attributes require special-token rendering".into(),
                    ));
                }
                _ => {}
            },
        }
        Ok(())
    }

    /// Identity hash over every field that changes the trained artifact;
    /// the run name and output directory are excluded.
    pub fn config_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        let obj = v.as_object_mut().unwrap();
        obj.remove("name");
        obj.remove("output_dir");
        hash_value(&v)
    }

    fn run_dir(&self) -> PathBuf {
        self.output_dir
            .join(self.config_hash())
            .join(format!("seed-{}", self.seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentFingerprint {
    pub os: String,
    pub arch: String,
    pub toolkit_version: String,
}

impl EnvironmentFingerprint {
    pub fn current() -> Self {
        Self {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub name: String,
    pub config_hash: String,
    pub seed: u64,
    pub metrics: MetricReport,
    pub wall_clock_secs: f64,
    pub environment: EnvironmentFingerprint,
}

/// Everything an experiment needs beyond its config: datasets, per-post
/// probability vectors, and pre-built KG-concatenated inputs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ExperimentData {
    pub train: Vec<PostRecord>,
    pub test: Vec<PostRecord>,
    /// post id -> six-head probability vector (regressor inference output).
    pub probabilities: HashMap<String, [f64; 6]>,
    /// post id -> post with retrieved tuples already concatenated.
    pub kg_inputs: HashMap<String, String>,
}

impl ExperimentData {
    pub fn from_splits(train: &DatasetSplit, test: &DatasetSplit) -> Self {
        Self {
            train: train.records.clone(),
            test: test.records.clone(),
            ..Self::default()
        }
    }
}

fn probabilities_for(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    record: &PostRecord,
    index: usize,
) -> Result<ToxicityProbabilities> {
    let source = cfg.attribute_source.ok_or_else(|| {
        ToxgenError::Precondition("attribute infusion without a source".into())
    })?;
    match source {
        AttributeSource::InDataset => Err(ToxgenError::Precondition(
            "in-dataset attributes carry no probability vector".into(),
        )),
        AttributeSource::Regressor | AttributeSource::Flipped(_) => data
            .probabilities
            .get(&record.post.id)
            .map(|p| ToxicityProbabilities::new(*p))
            .ok_or_else(|| {
                ToxgenError::MissingArtifact(format!(
                    "probability vector for post '{}' (run attribute inference first)",
                    record.post.id
                ))
            }),
        AttributeSource::Perturbed(mode) => {
            perturb_probabilities(mode, Some(cfg.seed.wrapping_add(index as u64)))
        }
    }
}

fn attr_token_string(
    cfg: &ExperimentConfig,
    p: &ToxicityProbabilities,
) -> Result<crate::attributes::AttributeString> {
    let attr_cfg = AttributeConfig {
        lambda: cfg.lambda,
        rendering: cfg.rendering,
    };
    let tokens = thresholded_tokens(p, &attr_cfg);
    match cfg.attribute_source {
        Some(AttributeSource::Flipped(label)) => flip_attribute(&tokens, label),
        _ => Ok(tokens),
    }
}

/// Build the generator example for one record under the config's infusion.
pub fn build_example(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    record: &PostRecord,
    index: usize,
) -> Result<GenExample> {
    let post = &record.post.text;
    let target = record
        .references
        .references
        .first()
        .cloned()
        .unwrap_or_default();
    let (input_text, probabilities, attr_tokens) = match cfg.infusion {
        Infusion::None => {
            let input = if cfg.kg.is_some() {
                data.kg_inputs
                    .get(&record.post.id)
                    .cloned()
                    .ok_or_else(|| {
                        ToxgenError::MissingArtifact(format!(
                            "KG input for post '{}' (run retrieval first)",
                            record.post.id
                        ))
                    })?
            } else {
                post.clone()
            };
            (input, None, None)
        }
        Infusion::C1 => {
            let p = probabilities_for(cfg, data, record, index)?;
            let attrs = attr_token_string(cfg, &p)?;
            (
                build_input_c1(post, &attrs, AttributePosition::PostFirst)?,
                None,
                None,
            )
        }
        Infusion::C2 => {
            let attrs = crate::attributes::in_dataset_string(&record.attributes);
            (
                build_input_c2(post, &attrs, AttributePosition::PostFirst)?,
                None,
                None,
            )
        }
        Infusion::C3 => {
            let p = probabilities_for(cfg, data, record, index)?;
            (post.clone(), Some(p.0), None)
        }
        Infusion::C4 | Infusion::C5 => {
            let p = probabilities_for(cfg, data, record, index)?;
            let attrs = attr_token_string(cfg, &p)?;
            (post.clone(), None, Some(attrs.text))
        }
    };
    Ok(GenExample {
        post_id: record.post.id.clone(),
        input_text,
        probabilities,
        attr_tokens,
        target,
    })
}

fn build_examples(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
    records: &[PostRecord],
) -> Result<Vec<GenExample>> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| build_example(cfg, data, r, i))
        .collect()
}

/// End-to-end run: train, generate on the test split, evaluate, cache.
/// A previously completed identical config+seed is a cache hit and returns
/// without retraining.
pub fn run_experiment<S: Scalar>(
    cfg: &ExperimentConfig,
    data: &ExperimentData,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let dir = cfg.run_dir();
    let result_path = dir.join("result.json");
    if result_path.exists() {
        log::info!("cache hit for {} at {}", cfg.name, dir.display());
        let mut cached: ExperimentResult =
            serde_json::from_str(&std::fs::read_to_string(&result_path)?)?;
        cached.name = cfg.name.clone();
        return Ok(cached);
    }
    if data.train.is_empty() || data.test.is_empty() {
        return Err(ToxgenError::MissingArtifact(
            "train/test splits (run prepare first)".into(),
        ));
    }
    let started = std::time::Instant::now();
    let train_examples: Vec<GenExample> = build_examples(cfg, data, &data.train)?
        .into_iter()
        .filter(|e| !e.target.trim().is_empty())
        .collect();
    if train_examples.is_empty() {
        return Err(ToxgenError::Precondition(
            "no training example has a reference target".into(),
        ));
    }
    let mut gen_cfg = cfg.gen.clone();
    gen_cfg.seed = cfg.seed;
    let model = train_generator::<S>(&train_examples, cfg.infusion, &gen_cfg)?;

    let test_examples = build_examples(cfg, data, &data.test)?;
    let generations = generate(&model, &test_examples, &cfg.decode)?;
    let mut gen_lines = String::new();
    for g in &generations {
        gen_lines.push_str(&serde_json::to_string(g)?);
        gen_lines.push('\n');
    }
    write_atomic(&dir.join("generations.jsonl"), gen_lines.as_bytes())?;
    model.save(&dir.join("model"))?;

    let metrics = evaluate_generations(&generations, &data.test)?;
    let result = ExperimentResult {
        name: cfg.name.clone(),
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
        metrics,
        wall_clock_secs: started.elapsed().as_secs_f64(),
        environment: EnvironmentFingerprint::current(),
    };
    write_atomic(&result_path, serde_json::to_string_pretty(&result)?.as_bytes())?;
    Ok(result)
}

fn evaluate_generations(
    generations: &[GeneratedExplanation],
    test: &[PostRecord],
) -> Result<MetricReport> {
    let refs: HashMap<&str, &Vec<String>> = test
        .iter()
        .map(|r| (r.post.id.as_str(), &r.references.references))
        .collect();
    let inputs: Vec<EvalInput> = generations
        .iter()
        .map(|g| EvalInput {
            post_id: g.post_id.clone(),
            hypothesis: g.text.clone(),
            references: refs.get(g.post_id.as_str()).map(|r| (*r).clone()).unwrap_or_default(),
        })
        .collect();
    let embedder = HashedNgramEncoder::default();
    evaluate(&inputs, Some(&embedder), None)
}

/// Re-score the cached generations of a completed run; byte-identical to
/// the stored MetricReport.
pub fn reevaluate_cached(cfg: &ExperimentConfig, data: &ExperimentData) -> Result<MetricReport> {
    let path = cfg.run_dir().join("generations.jsonl");
    let content = std::fs::read_to_string(&path).map_err(|_| {
        ToxgenError::MissingArtifact(format!("cached generations at {}", path.display()))
    })?;
    let generations: Vec<GeneratedExplanation> = content
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect::<std::result::Result<_, _>>()?;
    evaluate_generations(&generations, &data.test)
}

/// Golden names of the ten ablation variants, in grid order.
pub fn ablation_variant_names() -> [&'static str; 10] {
    [
        "exp1-plain-prompt",
        "exp2-lambda-0.3",
        "exp3-lambda-0.6",
        "exp4a-perturb-zeros",
        "exp4b-perturb-ones",
        "exp4c-perturb-random",
        "exp5a-flip-toxic",
        "exp5b-flip-severe-toxic",
        "exp5c-flip-obscene",
        "exp5d-flip-threat",
    ]
}

/// The ten ablation configs derived from a C1 base config.
pub fn ablation_variants(base: &ExperimentConfig) -> Result<Vec<ExperimentConfig>> {
    if base.infusion != Infusion::C1 {
        return Err(ToxgenError::Precondition(
            "the ablation grid is defined over a C1 base config".into(),
        ));
    }
    base.validate()?;
    let mut variants = Vec::new();
    let mut push = |name: &str, f: &dyn Fn(&mut ExperimentConfig)| {
        let mut v = base.clone();
        v.name = name.to_string();
        f(&mut v);
        variants.push(v);
    };
    push("exp1-plain-prompt", &|c| c.rendering = Rendering::PlainPrompt);
    push("exp2-lambda-0.3", &|c| c.lambda = 0.3);
    push("exp3-lambda-0.6", &|c| c.lambda = 0.6);
    push("exp4a-perturb-zeros", &|c| {
        c.attribute_source = Some(AttributeSource::Perturbed(PerturbMode::AllZeros));
    });
    push("exp4b-perturb-ones", &|c| {
        c.attribute_source = Some(AttributeSource::Perturbed(PerturbMode::AllOnes));
    });
    push("exp4c-perturb-random", &|c| {
        c.attribute_source = Some(AttributeSource::Perturbed(PerturbMode::Random));
    });
    push("exp5a-flip-toxic", &|c| {
        c.attribute_source = Some(AttributeSource::Flipped(ToxLabel::Toxicity));
    });
    push("exp5b-flip-severe-toxic", &|c| {
        c.attribute_source = Some(AttributeSource::Flipped(ToxLabel::SevereToxicity));
    });
    push("exp5c-flip-obscene", &|c| {
        c.attribute_source = Some(AttributeSource::Flipped(ToxLabel::Obscene));
    });
    push("exp5d-flip-threat", &|c| {
        c.attribute_source = Some(AttributeSource::Flipped(ToxLabel::Threat));
    });
    Ok(variants)
}

/// Run the base config plus all ten ablations; returns base first.
pub fn run_ablation_suite<S: Scalar>(
    base: &ExperimentConfig,
    data: &ExperimentData,
) -> Result<Vec<ExperimentResult>> {
    let mut results = vec![run_experiment::<S>(base, data)?];
    for variant in ablation_variants(base)? {
        results.push(run_experiment::<S>(&variant, data)?);
    }
    Ok(results)
}
