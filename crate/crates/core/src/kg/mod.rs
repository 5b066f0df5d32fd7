//! KG tuple retrieval: IDF-weighted relevance ranking over an inverted
//! lemma index (commonsense-KG style), embedding-cosine ranking over
//! pre-embedded linearized tuples (stereotype-KG style), top/bottom/random-k
//! selection, and KG-infused input building.

pub mod lemma;

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write as _};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::embed::{cosine, SentenceEncoder};
use crate::error::{Result, ToxgenError};

pub use lemma::content_lemmas;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeTuple {
    /// Position in the source dump; the deterministic tie-break key.
    pub id: usize,
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub relation_weight: f64,
    pub linearized: String,
}

impl KnowledgeTuple {
    pub fn new(id: usize, head: &str, relation: &str, tail: &str, weight: f64) -> Result<Self> {
        if weight < 0.0 {
            return Err(ToxgenError::Precondition(format!(
                "tuple {id}: relation weight {weight} is negative"
            )));
        }
        let linearized = format!("{head} {relation} {tail}");
        if linearized.trim().is_empty() {
            return Err(ToxgenError::Precondition(format!(
                "tuple {id}: empty linearization"
            )));
        }
        Ok(Self {
            id,
            head: head.to_string(),
            relation: relation.to_string(),
            tail: tail.to_string(),
            relation_weight: weight,
            linearized,
        })
    }

    /// A tuple known only by its linearized sentence (stereotype-KG dumps).
    pub fn from_linearized(id: usize, text: &str) -> Result<Self> {
        if text.trim().is_empty() {
            return Err(ToxgenError::Precondition(format!(
                "tuple {id}: empty linearization"
            )));
        }
        Ok(Self {
            id,
            head: String::new(),
            relation: String::new(),
            tail: String::new(),
            relation_weight: 0.0,
            linearized: text.trim().to_string(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    IdfRelevance,
    Cosine,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTuple {
    pub tuple: KnowledgeTuple,
    pub score: f64,
    pub scorer: Scorer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMode {
    Top,
    Bottom,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RetrievalSelection {
    pub mode: SelectionMode,
    pub k: usize,
    pub seed: Option<u64>,
}

impl RetrievalSelection {
    pub fn new(mode: SelectionMode, k: usize, seed: Option<u64>) -> Result<Self> {
        if k < 1 {
            return Err(ToxgenError::Precondition("k must be >= 1".into()));
        }
        if mode == SelectionMode::Random && seed.is_none() {
            return Err(ToxgenError::Precondition(
                "random selection requires a seed".into(),
            ));
        }
        Ok(Self { mode, k, seed })
    }

    pub fn top(k: usize) -> Self {
        Self {
            mode: SelectionMode::Top,
            k,
            seed: None,
        }
    }
}

impl Default for RetrievalSelection {
    fn default() -> Self {
        Self::top(20)
    }
}

/// `select_k` output; `shortfall` marks fewer candidates than requested.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Selection {
    pub tuples: Vec<KnowledgeTuple>,
    pub shortfall: bool,
}

/// One line of the on-disk retrieval cache.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RetrievalRecord {
    pub post_id: String,
    pub k: usize,
    pub mode: SelectionMode,
    pub tuples: Vec<String>,
    pub scores: Vec<f64>,
}

/// Corpus-level inverse document frequencies over query-token sets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdfTable {
    pub n_posts: usize,
    idf: HashMap<String, f64>,
}

impl IdfTable {
    /// `idf(t) = ln(N / df(t))`; unseen tokens fall back to df = 1.
    pub fn idf(&self, token: &str) -> f64 {
        *self
            .idf
            .get(token)
            .unwrap_or(&(self.n_posts as f64).ln())
    }
}

/// Extract the deduplicated noun/verb/adjective lemma set of a post.
pub fn extract_query_tokens(post: &str) -> BTreeSet<String> {
    content_lemmas(post)
}

pub fn compute_idf(corpus: &[String]) -> Result<IdfTable> {
    if corpus.is_empty() {
        return Err(ToxgenError::Precondition(
            "IDF needs a non-empty corpus".into(),
        ));
    }
    let n = corpus.len();
    let mut df: HashMap<String, usize> = HashMap::new();
    for post in corpus {
        for tok in extract_query_tokens(post) {
            *df.entry(tok).or_insert(0) += 1;
        }
    }
    let idf = df
        .into_iter()
        .map(|(t, d)| (t, (n as f64 / d.max(1) as f64).ln()))
        .collect();
    Ok(IdfTable { n_posts: n, idf })
}

/// Inverted index from head/tail lemmas to tuple ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KgIndex {
    pub tuples: Vec<KnowledgeTuple>,
    by_lemma: HashMap<String, Vec<usize>>,
}

impl KgIndex {
    pub fn build(tuples: Vec<KnowledgeTuple>) -> Self {
        let mut by_lemma: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, t) in tuples.iter().enumerate() {
            let mut lemmas: BTreeSet<String> = BTreeSet::new();
            for word in lemma::tokenize(&t.head).iter().chain(lemma::tokenize(&t.tail).iter()) {
                lemmas.insert(lemma::lemmatize(word));
            }
            for l in lemmas {
                by_lemma.entry(l).or_default().push(i);
            }
        }
        Self { tuples, by_lemma }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Parse a tab-separated tuple dump: head, relation, tail, weight.
pub fn load_tuple_dump(path: &Path) -> Result<Vec<KnowledgeTuple>> {
    let file = std::fs::File::open(path)?;
    let mut tuples = Vec::new();
    for (i, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 4 {
            return Err(ToxgenError::Schema {
                path: path.display().to_string(),
                message: format!("line {}: expected 4 tab-separated fields, got {}", i + 1, parts.len()),
            });
        }
        let weight: f64 = parts[3].trim().parse().map_err(|_| ToxgenError::Schema {
            path: path.display().to_string(),
            message: format!("line {}: weight '{}' is not a number", i + 1, parts[3]),
        })?;
        tuples.push(KnowledgeTuple::new(
            tuples.len(),
            parts[0].trim(),
            parts[1].trim(),
            parts[2].trim(),
            weight,
        )?);
    }
    Ok(tuples)
}

/// Parse a linearized-tuple file, one sentence per line.
pub fn load_linearized_dump(path: &Path) -> Result<Vec<KnowledgeTuple>> {
    let file = std::fs::File::open(path)?;
    let mut tuples = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        tuples.push(KnowledgeTuple::from_linearized(tuples.len(), &line)?);
    }
    Ok(tuples)
}

fn sort_desc(scored: &mut [ScoredTuple]) {
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then(a.tuple.id.cmp(&b.tuple.id))
    });
}

/// Rank 1-hop tuples of the post's query tokens by `idf_q x W_rel`.
/// Tuples reachable through several query tokens keep their maximum score.
pub fn retrieve_conceptnet_style(
    post: &str,
    index: &KgIndex,
    idf: &IdfTable,
) -> Vec<ScoredTuple> {
    let mut best: HashMap<usize, f64> = HashMap::new();
    for token in extract_query_tokens(post) {
        let Some(ids) = index.by_lemma.get(&token) else {
            continue;
        };
        let w = idf.idf(&token);
        for &i in ids {
            let score = w * index.tuples[i].relation_weight;
            let e = best.entry(i).or_insert(f64::NEG_INFINITY);
            if score > *e {
                *e = score;
            }
        }
    }
    let mut scored: Vec<ScoredTuple> = best
        .into_iter()
        .map(|(i, score)| ScoredTuple {
            tuple: index.tuples[i].clone(),
            score,
            scorer: Scorer::IdfRelevance,
        })
        .collect();
    sort_desc(&mut scored);
    scored
}

/// A linearized tuple paired with its pre-computed sentence embedding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmbeddedTuple {
    pub tuple: KnowledgeTuple,
    pub embedding: Vec<f64>,
}

pub fn embed_tuples(
    tuples: &[KnowledgeTuple],
    encoder: &dyn SentenceEncoder,
) -> Vec<EmbeddedTuple> {
    tuples
        .iter()
        .map(|t| EmbeddedTuple {
            tuple: t.clone(),
            embedding: encoder.embed(&t.linearized),
        })
        .collect()
}

/// Rank every pre-embedded tuple by raw cosine similarity to the post.
/// Values are never clamped; range depends on the encoder.
pub fn retrieve_stereokg_style(
    post: &str,
    embedded: &[EmbeddedTuple],
    encoder: &dyn SentenceEncoder,
) -> Result<Vec<ScoredTuple>> {
    let q = encoder.embed(post);
    let mut scored = Vec::with_capacity(embedded.len());
    for e in embedded {
        if e.embedding.len() != q.len() {
            return Err(ToxgenError::Shape(format!(
                "tuple {} embedded with dim {}, post has dim {}",
                e.tuple.id,
                e.embedding.len(),
                q.len()
            )));
        }
        scored.push(ScoredTuple {
            tuple: e.tuple.clone(),
            score: cosine(&q, &e.embedding),
            scorer: Scorer::Cosine,
        });
    }
    sort_desc(&mut scored);
    Ok(scored)
}

/// Pick k tuples: highest-scored, lowest-scored (ascending), or a seeded
/// uniform sample without replacement.
pub fn select_k(scored: &[ScoredTuple], sel: &RetrievalSelection) -> Result<Selection> {
    if sel.mode == SelectionMode::Random && sel.seed.is_none() {
        return Err(ToxgenError::Precondition(
            "random selection requires a seed".into(),
        ));
    }
    let mut ordered = scored.to_vec();
    sort_desc(&mut ordered);
    let shortfall = ordered.len() < sel.k;
    let picked: Vec<KnowledgeTuple> = match sel.mode {
        SelectionMode::Top => ordered
            .iter()
            .take(sel.k)
            .map(|s| s.tuple.clone())
            .collect(),
        SelectionMode::Bottom => {
            let mut asc: Vec<&ScoredTuple> = ordered.iter().rev().collect();
            asc.sort_by(|a, b| {
                a.score
                    .partial_cmp(&b.score)
                    .unwrap()
                    .then(a.tuple.id.cmp(&b.tuple.id))
            });
            asc.iter().take(sel.k).map(|s| s.tuple.clone()).collect()
        }
        SelectionMode::Random => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(sel.seed.unwrap());
            let mut idx: Vec<usize> = (0..ordered.len()).collect();
            idx.shuffle(&mut rng);
            idx.truncate(sel.k);
            idx.into_iter().map(|i| ordered[i].tuple.clone()).collect()
        }
    };
    Ok(Selection {
        tuples: picked,
        shortfall,
    })
}

/// `x [SEP] t1 [SEP] ... [SEP] tk`, dropping tuples from the tail first when
/// the whitespace token count would exceed `max_tokens`. The post itself is
/// never truncated here.
pub fn build_kg_input(x: &str, tuples: &[KnowledgeTuple], k: usize, max_tokens: usize) -> String {
    let sep = crate::generator::SEP_TOKEN;
    let mut out = x.to_string();
    let mut count = x.split_whitespace().count();
    for t in tuples.iter().take(k) {
        let extra = 1 + t.linearized.split_whitespace().count();
        if count + extra > max_tokens {
            break;
        }
        out.push_str(&format!(" {sep} {}", t.linearized));
        count += extra;
    }
    out
}

/// Append retrieval records to a JSON-lines cache file.
pub fn append_retrieval_cache(path: &Path, records: &[RetrievalRecord]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut f = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)?;
    for r in records {
        writeln!(f, "{}", serde_json::to_string(r)?)?;
    }
    Ok(())
}

pub fn read_retrieval_cache(path: &Path) -> Result<Vec<RetrievalRecord>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line)?);
    }
    Ok(out)
}
