//! `toxgen`: command-line driver for the explanation-generation toolkit.
//!
//! The subcommands mirror the pipeline stages: corpus preparation, toxicity
//! regressor training and attribute inference, KG indexing and retrieval,
//! generator training / decoding / evaluation, retrieval-score analysis,
//! the ablation grid, the zero-shot LLM baseline, and report tables.

use std::collections::HashMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use toxgen_core::analysis::{
    paired_t_test, score_distribution, uniqueness_histogram, Binning, PairedTestResult,
};
use toxgen_core::attributes::{thresholded_tokens, AttributeConfig, Rendering};
use toxgen_core::corpus::{
    load_explanation_dataset, load_toxicity_records, ColumnMapping, DatasetSchema, DatasetSplit,
};
use toxgen_core::embed::HashedNgramEncoder;
use toxgen_core::evaluation::{evaluate, EvalInput, MetricReport, RegressorScorer};
use toxgen_core::experiment::report::{
    write_metrics_table, write_score_distribution, write_significance_table,
    write_uniqueness_histogram,
};
use toxgen_core::experiment::zeroshot::{zero_shot_llm_baseline, HttpChatClient};
use toxgen_core::experiment::{
    build_example, run_ablation_suite, run_experiment, ExperimentConfig, ExperimentData,
    ExperimentResult,
};
use toxgen_core::generator::{generate, GenExample, GeneratedExplanation};
use toxgen_core::kg::{
    append_retrieval_cache, build_kg_input, compute_idf, embed_tuples, load_linearized_dump,
    load_tuple_dump, read_retrieval_cache, retrieve_conceptnet_style, retrieve_stereokg_style,
    select_k, KgIndex, RetrievalRecord, RetrievalSelection, ScoredTuple, SelectionMode,
};
use toxgen_core::regressor::{train_regressor, RegressorConfig};
use toxgen_core::{GenerationModelF64, RegressorF64};

#[derive(Parser)]
#[command(name = "toxgen", version, about = "Toxicity-attribute-infused explanation generation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load raw train/test files, preprocess, group references, and write a
    /// prepared dataset directory.
    Prepare(PrepareArgs),
    /// Train the six-head toxicity regressor on a labelled comment corpus.
    TrainRegressor(TrainRegressorArgs),
    /// Run regressor inference over a prepared split and write per-post
    /// probability vectors and rendered attribute tokens.
    AttrInfer(AttrInferArgs),
    /// Build a lemma-indexed KG from a tuple dump.
    KgIndex(KgIndexArgs),
    /// Retrieve and select k tuples per post; cache scores and optionally
    /// the KG-concatenated model inputs.
    KgRetrieve(KgRetrieveArgs),
    /// Train a generator end to end for one run config (train, decode the
    /// test split, evaluate, cache under the config hash).
    Train(RunArgs),
    /// Decode the test split with a previously trained run checkpoint.
    Generate(GenerateArgs),
    /// Score a generations file against the prepared references.
    Evaluate(EvaluateArgs),
    /// Retrieval-score and significance analyses.
    Analyze(AnalyzeArgs),
    /// Run the full ablation grid over a C1 base config.
    Ablate(AblateArgs),
    /// Zero-shot LLM baseline over the test split with a resumable cache.
    Zeroshot(ZeroshotArgs),
    /// Emit CSV tables from completed run results.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemaArg {
    /// Multi-reference corpus with five boolean annotation flags.
    Sbic,
    /// Single-reference corpus with an implicit-hate class.
    LatentHatred,
}

impl From<SchemaArg> for DatasetSchema {
    fn from(s: SchemaArg) -> Self {
        match s {
            SchemaArg::Sbic => DatasetSchema::SbicLike,
            SchemaArg::LatentHatred => DatasetSchema::LatentHatredLike,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Top,
    Bottom,
    Random,
}

impl From<ModeArg> for SelectionMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Top => SelectionMode::Top,
            ModeArg::Bottom => SelectionMode::Bottom,
            ModeArg::Random => SelectionMode::Random,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RenderingArg {
    SpecialTokens,
    PlainPrompt,
}

impl From<RenderingArg> for Rendering {
    fn from(r: RenderingArg) -> Self {
        match r {
            RenderingArg::SpecialTokens => Rendering::SpecialTokens,
            RenderingArg::PlainPrompt => Rendering::PlainPrompt,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    MaxBleu,
    RougeLF1,
    BertScoreF1,
}

#[derive(Args)]
struct PrepareArgs {
    /// Raw train file (CSV or JSON lines).
    #[arg(long)]
    train: PathBuf,
    /// Raw test file (CSV or JSON lines).
    #[arg(long)]
    test: PathBuf,
    #[arg(long, value_enum)]
    schema: SchemaArg,
    /// Optional JSON file overriding the default column names.
    #[arg(long)]
    mapping: Option<PathBuf>,
    /// Output directory for the prepared splits.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainRegressorArgs {
    /// Labelled comment corpus (CSV or JSON lines) with the six label columns.
    #[arg(long)]
    data: PathBuf,
    /// Name of the text column.
    #[arg(long, default_value = "comment_text")]
    text_col: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    epochs: usize,
    #[arg(long, default_value_t = 64)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.05)]
    validation_fraction: f64,
}

#[derive(Args)]
struct AttrInferArgs {
    /// Regressor checkpoint directory.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Prepared dataset directory.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Threshold for rendering attribute tokens alongside the raw vectors.
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, value_enum, default_value = "special-tokens")]
    rendering: RenderingArg,
    /// Output JSON-lines file: {post_id, probabilities, attr_tokens}.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct KgIndexArgs {
    /// Tuple dump: 4-column TSV (head, relation, tail, weight) by default,
    /// or one linearized tuple per line with --linearized.
    #[arg(long)]
    tuples: PathBuf,
    #[arg(long)]
    linearized: bool,
    /// Output index file (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct KgRetrieveArgs {
    /// KG index file produced by kg-index.
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Rank by sentence-embedding cosine instead of idf x relation weight.
    #[arg(long)]
    cosine: bool,
    #[arg(long, value_enum, default_value = "top")]
    mode: ModeArg,
    #[arg(long, default_value_t = 20)]
    k: usize,
    /// Required when --mode random.
    #[arg(long)]
    seed: Option<u64>,
    /// JSON-lines score cache (appended; read back by analyze).
    #[arg(long)]
    cache: PathBuf,
    /// Optional JSON-lines file of KG-concatenated model inputs.
    #[arg(long)]
    inputs: Option<PathBuf>,
    /// Whitespace-token budget for each concatenated input.
    #[arg(long, default_value_t = 1024)]
    max_tokens: usize,
}

#[derive(Args)]
struct RunArgs {
    /// Run config file (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    /// Probability vectors from attr-infer (JSON lines).
    #[arg(long)]
    probs: Option<PathBuf>,
    /// KG-concatenated inputs from kg-retrieve (JSON lines).
    #[arg(long)]
    kg_inputs: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    probs: Option<PathBuf>,
    #[arg(long)]
    kg_inputs: Option<PathBuf>,
    /// Checkpoint directory; defaults to the run directory of the config.
    #[arg(long)]
    model_dir: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Override the config's beam count.
    #[arg(long)]
    beams: Option<usize>,
    #[arg(long)]
    length_penalty: Option<f64>,
    #[arg(long)]
    max_length: Option<usize>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Generations file (JSON lines of {post_id, text, ...}).
    #[arg(long)]
    generations: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Regressor checkpoint for the generation-toxicity column.
    #[arg(long)]
    toxicity_checkpoint: Option<PathBuf>,
    /// Output metric report (JSON).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(subcommand)]
    what: AnalyzeCommand,
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Paired t-test between two metric reports, joined per post.
    Significance(SignificanceArgs),
    /// Histogram of retrieval scores pooled over posts.
    Scores(ScoresArgs),
    /// Distinct-score counts among each post's k retrieved tuples.
    Uniqueness(UniquenessArgs),
}

#[derive(Args)]
struct SignificanceArgs {
    /// First metric report or run result (JSON).
    #[arg(long)]
    a: PathBuf,
    /// Second metric report or run result (JSON).
    #[arg(long)]
    b: PathBuf,
    #[arg(long, value_enum, default_value = "max-bleu")]
    metric: MetricArg,
    #[arg(long, default_value = "a")]
    label_a: String,
    #[arg(long, default_value = "b")]
    label_b: String,
    /// Output CSV.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoresArgs {
    /// Retrieval cache from kg-retrieve.
    #[arg(long)]
    cache: PathBuf,
    /// Fixed-width bins as start,width,count; nearest-tenth buckets if unset.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    bins: Option<Vec<f64>>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct UniquenessArgs {
    #[arg(long)]
    cache: PathBuf,
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    /// C1 base run config (JSON); the grid is derived from it.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long)]
    probs: Option<PathBuf>,
    /// Summary CSV over the base run and the ten variants.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ZeroshotArgs {
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Chat-completion endpoint URL.
    #[arg(long)]
    endpoint: String,
    #[arg(long)]
    model: String,
    /// Environment variable holding the API key.
    #[arg(long, default_value = "TOXGEN_API_KEY")]
    api_key_env: String,
    #[arg(long, default_value_t = 3)]
    max_retries: usize,
    /// Resumable completion cache (JSON lines).
    #[arg(long)]
    cache: PathBuf,
    /// Output generations file (JSON lines).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Completed run results (result.json files).
    #[arg(long, num_args = 1.., required = true)]
    results: Vec<PathBuf>,
    /// Run name to test every other run against; adds significance.csv.
    #[arg(long)]
    baseline: Option<String>,
    #[arg(long, value_enum, default_value = "max-bleu")]
    metric: MetricArg,
    #[arg(long)]
    out_dir: PathBuf,
}

/// One line of the attr-infer output.
#[derive(Serialize, Deserialize)]
struct ProbRecord {
    post_id: String,
    probabilities: [f64; 6],
    attr_tokens: String,
}

/// One line of the kg-retrieve --inputs output.
#[derive(Serialize, Deserialize)]
struct KgInputRecord {
    post_id: String,
    input: String,
}

fn read_split(dataset: &Path, split: SplitArg) -> Result<DatasetSplit> {
    let name = match split {
        SplitArg::Train => "train.json",
        SplitArg::Test => "test.json",
    };
    let path = dataset.join(name);
    let content = std::fs::read_to_string(&path)
        .with_context(|| format!("reading prepared split {} (run prepare first)", path.display()))?;
    Ok(serde_json::from_str(&content)?)
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let content =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    content
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(Into::into))
        .collect()
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::File::create(path)?;
    for r in rows {
        writeln!(f, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}

fn load_run_config(path: &Path) -> Result<ExperimentConfig> {
    let content =
        std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let cfg: ExperimentConfig = serde_json::from_str(&content)?;
    cfg.validate()?;
    Ok(cfg)
}

fn load_experiment_data(
    dataset: &Path,
    probs: Option<&PathBuf>,
    kg_inputs: Option<&PathBuf>,
) -> Result<ExperimentData> {
    let train = read_split(dataset, SplitArg::Train)?;
    let test = read_split(dataset, SplitArg::Test)?;
    let mut data = ExperimentData::from_splits(&train, &test);
    if let Some(path) = probs {
        let records: Vec<ProbRecord> = read_jsonl(path)?;
        data.probabilities = records
            .into_iter()
            .map(|r| (r.post_id, r.probabilities))
            .collect();
    }
    if let Some(path) = kg_inputs {
        let records: Vec<KgInputRecord> = read_jsonl(path)?;
        data.kg_inputs = records.into_iter().map(|r| (r.post_id, r.input)).collect();
    }
    Ok(data)
}

fn run_dir_of(cfg: &ExperimentConfig) -> PathBuf {
    cfg.output_dir
        .join(cfg.config_hash())
        .join(format!("seed-{}", cfg.seed))
}

/// Accept either a bare metric report or a full run result.
fn load_metric_report(path: &Path) -> Result<(String, MetricReport)> {
    let content =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(result) = serde_json::from_str::<ExperimentResult>(&content) {
        return Ok((result.name, result.metrics));
    }
    let report: MetricReport = serde_json::from_str(&content)
        .with_context(|| format!("{} is neither a run result nor a metric report", path.display()))?;
    Ok((path.display().to_string(), report))
}

fn metric_column(report: &MetricReport, metric: MetricArg) -> Result<HashMap<String, f64>> {
    let mut out = HashMap::new();
    for s in &report.per_sample {
        let v = match metric {
            MetricArg::MaxBleu => s.max_bleu,
            MetricArg::RougeLF1 => s.rouge_l_f1,
            MetricArg::BertScoreF1 => s
                .bert_score_f1
                .with_context(|| format!("post '{}' has no BERTScore", s.post_id))?,
        };
        out.insert(s.post_id.clone(), v);
    }
    Ok(out)
}

fn paired_metric_test(
    a: &MetricReport,
    b: &MetricReport,
    metric: MetricArg,
) -> Result<PairedTestResult> {
    let col_a = metric_column(a, metric)?;
    let col_b = metric_column(b, metric)?;
    let mut ids: Vec<&String> = col_a.keys().filter(|id| col_b.contains_key(*id)).collect();
    ids.sort();
    if ids.len() < 2 {
        bail!(
            "only {} posts are shared between the two reports; need at least 2 for a paired test",
            ids.len()
        );
    }
    let xs: Vec<f64> = ids.iter().map(|id| col_a[*id]).collect();
    let ys: Vec<f64> = ids.iter().map(|id| col_b[*id]).collect();
    Ok(paired_t_test(&xs, &ys)?)
}

fn cmd_prepare(args: PrepareArgs) -> Result<()> {
    let mapping = match &args.mapping {
        Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        None => ColumnMapping::default(),
    };
    let ds = load_explanation_dataset(&args.train, &args.test, args.schema.into(), &mapping)?;
    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("train.json"), serde_json::to_string(&ds.train)?)?;
    std::fs::write(args.out.join("test.json"), serde_json::to_string(&ds.test)?)?;
    let manifest = serde_json::json!({
        "train": ds.train.manifest(),
        "test": ds.test.manifest(),
    });
    std::fs::write(
        args.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    println!(
        "prepared {} train / {} test records -> {}",
        ds.train.records.len(),
        ds.test.records.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_train_regressor(args: TrainRegressorArgs) -> Result<()> {
    let records = load_toxicity_records(&args.data, &args.text_col)?;
    let config = RegressorConfig {
        epochs: args.epochs,
        batch_size: args.batch_size,
        learning_rate: args.learning_rate,
        seed: args.seed,
        validation_fraction: args.validation_fraction,
        ..RegressorConfig::default()
    };
    let model: RegressorF64 = train_regressor(&records, &config)?;
    model.save(&args.out)?;
    for log in &model.training_log {
        println!(
            "epoch {}: train rmse {:.4}, validation rmse {:.4}",
            log.epoch, log.train_rmse, log.validation_rmse
        );
    }
    println!("saved checkpoint {} -> {}", model.checkpoint_id, args.out.display());
    Ok(())
}

fn cmd_attr_infer(args: AttrInferArgs) -> Result<()> {
    let model = RegressorF64::load(&args.checkpoint)?;
    let split = read_split(&args.dataset, args.split)?;
    let attr_cfg = AttributeConfig {
        lambda: args.lambda,
        rendering: args.rendering.into(),
    };
    attr_cfg.validate()?;
    let rows: Vec<ProbRecord> = split
        .records
        .iter()
        .map(|r| {
            let p = model.predict_probabilities(&r.post.text);
            let tokens = thresholded_tokens(&p, &attr_cfg);
            ProbRecord {
                post_id: r.post.id.clone(),
                probabilities: p.0,
                attr_tokens: tokens.text,
            }
        })
        .collect();
    write_jsonl(&args.out, &rows)?;
    println!("wrote {} probability vectors -> {}", rows.len(), args.out.display());
    Ok(())
}

fn cmd_kg_index(args: KgIndexArgs) -> Result<()> {
    let tuples = if args.linearized {
        load_linearized_dump(&args.tuples)?
    } else {
        load_tuple_dump(&args.tuples)?
    };
    let index = KgIndex::build(tuples);
    index.save(&args.out)?;
    println!("indexed {} tuples -> {}", index.tuples.len(), args.out.display());
    Ok(())
}

fn cmd_kg_retrieve(args: KgRetrieveArgs) -> Result<()> {
    let index = KgIndex::load(&args.index)?;
    let split = read_split(&args.dataset, args.split)?;
    let selection = RetrievalSelection::new(args.mode.into(), args.k, args.seed)?;

    let encoder = HashedNgramEncoder::default();
    let embedded = if args.cosine {
        Some(embed_tuples(&index.tuples, &encoder))
    } else {
        None
    };
    let idf = if args.cosine {
        None
    } else {
        let posts: Vec<String> = split.records.iter().map(|r| r.post.text.clone()).collect();
        Some(compute_idf(&posts)?)
    };

    let mut records = Vec::new();
    let mut inputs = Vec::new();
    let mut n_shortfall = 0usize;
    for rec in &split.records {
        let scored: Vec<ScoredTuple> = match (&embedded, &idf) {
            (Some(e), _) => retrieve_stereokg_style(&rec.post.text, e, &encoder)?,
            (None, Some(t)) => retrieve_conceptnet_style(&rec.post.text, &index, t),
            (None, None) => unreachable!(),
        };
        let by_id: HashMap<usize, f64> =
            scored.iter().map(|s| (s.tuple.id, s.score)).collect();
        let picked = select_k(&scored, &selection)?;
        if picked.shortfall {
            n_shortfall += 1;
        }
        records.push(RetrievalRecord {
            post_id: rec.post.id.clone(),
            k: args.k,
            mode: args.mode.into(),
            tuples: picked.tuples.iter().map(|t| t.linearized.clone()).collect(),
            scores: picked.tuples.iter().map(|t| by_id[&t.id]).collect(),
        });
        if args.inputs.is_some() {
            inputs.push(KgInputRecord {
                post_id: rec.post.id.clone(),
                input: build_kg_input(&rec.post.text, &picked.tuples, args.k, args.max_tokens),
            });
        }
    }
    append_retrieval_cache(&args.cache, &records)?;
    if let Some(path) = &args.inputs {
        write_jsonl(path, &inputs)?;
    }
    if n_shortfall > 0 {
        log::warn!("{n_shortfall} posts retrieved fewer than k={} tuples", args.k);
    }
    println!(
        "retrieved for {} posts ({} short of k) -> {}",
        records.len(),
        n_shortfall,
        args.cache.display()
    );
    Ok(())
}

fn cmd_train(args: RunArgs) -> Result<()> {
    let cfg = load_run_config(&args.config)?;
    let data = load_experiment_data(&args.dataset, args.probs.as_ref(), args.kg_inputs.as_ref())?;
    let result = run_experiment::<f64>(&cfg, &data)?;
    println!(
        "run '{}' (hash {}, seed {}): max-BLEU {:.2}, ROUGE-L {:.4} over {} posts",
        result.name,
        &result.config_hash[..12],
        result.seed,
        result.metrics.mean_max_bleu,
        result.metrics.mean_rouge_l_f1,
        result.metrics.n_evaluated,
    );
    println!("artifacts in {}", run_dir_of(&cfg).display());
    Ok(())
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let cfg = load_run_config(&args.config)?;
    let data = load_experiment_data(&args.dataset, args.probs.as_ref(), args.kg_inputs.as_ref())?;
    let model_dir = args
        .model_dir
        .unwrap_or_else(|| run_dir_of(&cfg).join("model"));
    let model = GenerationModelF64::load(&model_dir)
        .with_context(|| format!("loading checkpoint {} (run train first)", model_dir.display()))?;
    let examples: Vec<GenExample> = data
        .test
        .iter()
        .enumerate()
        .map(|(i, r)| build_example(&cfg, &data, r, i))
        .collect::<toxgen_core::Result<_>>()?;
    let mut decode = cfg.decode.clone();
    if let Some(b) = args.beams {
        decode.beams = b;
    }
    if let Some(lp) = args.length_penalty {
        decode.length_penalty = lp;
    }
    if let Some(ml) = args.max_length {
        decode.max_length = ml;
    }
    decode.validate()?;
    let generations = generate(&model, &examples, &decode)?;
    write_jsonl(&args.out, &generations)?;
    println!("decoded {} posts -> {}", generations.len(), args.out.display());
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let generations: Vec<GeneratedExplanation> = read_jsonl(&args.generations)?;
    let split = read_split(&args.dataset, args.split)?;
    let refs: HashMap<&str, &Vec<String>> = split
        .records
        .iter()
        .map(|r| (r.post.id.as_str(), &r.references.references))
        .collect();
    let inputs: Vec<EvalInput> = generations
        .iter()
        .map(|g| EvalInput {
            post_id: g.post_id.clone(),
            hypothesis: g.text.clone(),
            references: refs
                .get(g.post_id.as_str())
                .map(|r| (*r).clone())
                .unwrap_or_default(),
        })
        .collect();
    let embedder = HashedNgramEncoder::default();
    let regressor = match &args.toxicity_checkpoint {
        Some(dir) => Some(RegressorF64::load(dir)?),
        None => None,
    };
    let scorer = regressor.as_ref().map(RegressorScorer);
    let report = evaluate(
        &inputs,
        Some(&embedder),
        scorer.as_ref().map(|s| s as &dyn toxgen_core::evaluation::ToxicityScorer),
    )?;
    if let Some(parent) = args.out.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&args.out, serde_json::to_string_pretty(&report)?)?;
    println!(
        "max-BLEU {:.2}, ROUGE-L {:.4}, {} evaluated / {} skipped -> {}",
        report.mean_max_bleu,
        report.mean_rouge_l_f1,
        report.n_evaluated,
        report.n_skipped,
        args.out.display()
    );
    Ok(())
}

fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    match args.what {
        AnalyzeCommand::Significance(a) => {
            let (_, report_a) = load_metric_report(&a.a)?;
            let (_, report_b) = load_metric_report(&a.b)?;
            let test = paired_metric_test(&report_a, &report_b, a.metric)?;
            write_significance_table(
                &a.out,
                &[(a.label_a.clone(), a.label_b.clone(), test.clone())],
            )?;
            println!(
                "{} vs {}: t = {:.4}, p = {:.6}, d = {:.4}, n = {} {}",
                a.label_a, a.label_b, test.t, test.p, test.effect_size, test.n, test.stars()
            );
        }
        AnalyzeCommand::Scores(a) => {
            let cache = read_retrieval_cache(&a.cache)?;
            let per_sample: Vec<Vec<f64>> = cache.iter().map(|r| r.scores.clone()).collect();
            let binning = match &a.bins {
                Some(b) => Binning::FixedBinsHalfopen {
                    start: b[0],
                    width: b[1],
                    count: b[2] as usize,
                },
                None => Binning::RoundNearestTenth,
            };
            let dist = score_distribution(&per_sample, &binning)?;
            write_score_distribution(&a.out, &dist)?;
            println!(
                "{} posts, fraction with max score >= 5: {:.4} -> {}",
                dist.n_samples,
                dist.fraction_max_ge_5,
                a.out.display()
            );
        }
        AnalyzeCommand::Uniqueness(a) => {
            let cache = read_retrieval_cache(&a.cache)?;
            let per_sample: Vec<Vec<f64>> = cache.iter().map(|r| r.scores.clone()).collect();
            let hist = uniqueness_histogram(&per_sample, a.k);
            write_uniqueness_histogram(&a.out, &hist)?;
            println!(
                "{} samples histogrammed, {} excluded -> {}",
                hist.counts.iter().map(|(_, n)| n).sum::<usize>(),
                hist.n_excluded,
                a.out.display()
            );
        }
    }
    Ok(())
}

fn cmd_ablate(args: AblateArgs) -> Result<()> {
    let cfg = load_run_config(&args.config)?;
    let data = load_experiment_data(&args.dataset, args.probs.as_ref(), None)?;
    let results = run_ablation_suite::<f64>(&cfg, &data)?;
    let rows: Vec<(String, MetricReport)> = results
        .iter()
        .map(|r| (r.name.clone(), r.metrics.clone()))
        .collect();
    write_metrics_table(&args.out, &rows)?;
    for r in &results {
        println!(
            "{:<24} max-BLEU {:.2}  ROUGE-L {:.4}",
            r.name, r.metrics.mean_max_bleu, r.metrics.mean_rouge_l_f1
        );
    }
    println!("summary -> {}", args.out.display());
    Ok(())
}

fn cmd_zeroshot(args: ZeroshotArgs) -> Result<()> {
    let split = read_split(&args.dataset, args.split)?;
    let posts: Vec<_> = split.records.iter().map(|r| r.post.clone()).collect();
    let client = HttpChatClient {
        endpoint: args.endpoint,
        model: args.model,
        api_key_env: args.api_key_env,
        max_retries: args.max_retries,
    };
    let outcome = zero_shot_llm_baseline(&posts, &client, &args.cache)?;
    write_jsonl(&args.out, &outcome.generated)?;
    println!(
        "{} completions written, {} posts still missing -> {}",
        outcome.generated.len(),
        outcome.missing.len(),
        args.out.display()
    );
    if !outcome.missing.is_empty() {
        println!("rerun the same command to resume the missing posts");
    }
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<()> {
    let mut results = Vec::new();
    for path in &args.results {
        let content = std::fs::read_to_string(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let result: ExperimentResult = serde_json::from_str(&content)
            .with_context(|| format!("{} is not a run result", path.display()))?;
        results.push(result);
    }
    std::fs::create_dir_all(&args.out_dir)?;
    let rows: Vec<(String, MetricReport)> = results
        .iter()
        .map(|r| (r.name.clone(), r.metrics.clone()))
        .collect();
    let metrics_path = args.out_dir.join("metrics.csv");
    write_metrics_table(&metrics_path, &rows)?;
    println!("metrics table -> {}", metrics_path.display());

    if let Some(baseline) = &args.baseline {
        let base = results
            .iter()
            .find(|r| &r.name == baseline)
            .with_context(|| format!("no result named '{baseline}'"))?;
        let mut sig_rows = Vec::new();
        for r in results.iter().filter(|r| &r.name != baseline) {
            let test = paired_metric_test(&r.metrics, &base.metrics, args.metric)?;
            sig_rows.push((r.name.clone(), baseline.clone(), test));
        }
        if sig_rows.is_empty() {
            bail!("significance requested but no non-baseline runs were given");
        }
        let sig_path = args.out_dir.join("significance.csv");
        write_significance_table(&sig_path, &sig_rows)?;
        println!("significance table -> {}", sig_path.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Prepare(a) => cmd_prepare(a),
        Command::TrainRegressor(a) => cmd_train_regressor(a),
        Command::AttrInfer(a) => cmd_attr_infer(a),
        Command::KgIndex(a) => cmd_kg_index(a),
        Command::KgRetrieve(a) => cmd_kg_retrieve(a),
        Command::Train(a) => cmd_train(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Analyze(a) => cmd_analyze(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Zeroshot(a) => cmd_zeroshot(a),
        Command::Report(a) => cmd_report(a),
    }
}
