use serde::{Deserialize, Serialize};

use crate::error::{Result, ToxgenError};

/// Order of the six toxicity labels everywhere in the toolkit.
pub const TOXICITY_LABELS: [&str; 6] = [
    "toxicity",
    "severe_toxicity",
    "obscene",
    "threat",
    "insult",
    "identity_attack",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetSchema {
    /// Multi-reference corpus with five boolean annotation flags.
    SbicLike,
    /// Single-reference corpus with an implicit-hate class annotation.
    LatentHatredLike,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Test,
    Validation,
}

/// An input social-media post after preprocessing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub text: String,
    pub source_dataset: DatasetSchema,
}

/// Gold explanation strings for one post.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceSet {
    pub post_id: String,
    pub references: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SbicFlags {
    pub intentional: bool,
    pub lewd: bool,
    pub offensive: bool,
    pub group_targeting: bool,
    pub in_group_language: bool,
}

/// Auxiliary annotations shipped with the explanation datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InDatasetAttributes {
    pub target_group: String,
    pub sbic_flags: Option<SbicFlags>,
    pub implicit_class: Option<String>,
}

impl InDatasetAttributes {
    /// Exactly one of the two annotation families must be populated.
    pub fn validate(&self, schema: DatasetSchema) -> Result<()> {
        match (schema, &self.sbic_flags, &self.implicit_class) {
            (DatasetSchema::SbicLike, Some(_), None) => Ok(()),
            (DatasetSchema::LatentHatredLike, None, Some(_)) => Ok(()),
            _ => Err(ToxgenError::Precondition(format!(
                "attribute family does not match schema {schema:?}"
            ))),
        }
    }
}

/// One record of the toxicity-regression corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToxicityRecord {
    pub text: String,
    pub labels: [f64; 6],
}

impl ToxicityRecord {
    pub fn validate(&self) -> Result<()> {
        for (i, v) in self.labels.iter().enumerate() {
            if !(0.0..=1.0).contains(v) {
                return Err(ToxgenError::Precondition(format!(
                    "label {} = {v} outside [0,1]",
                    TOXICITY_LABELS[i]
                )));
            }
        }
        Ok(())
    }
}

/// A post with its grouped references and annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostRecord {
    pub post: Post,
    pub references: ReferenceSet,
    pub attributes: InDatasetAttributes,
    /// Set when every gold explanation was empty; such posts still generate
    /// but default to exclusion from reference-based metrics.
    pub empty_references: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetSplit {
    pub name: SplitName,
    pub records: Vec<PostRecord>,
}

impl DatasetSplit {
    pub fn manifest(&self) -> SplitManifest {
        let post_lens: Vec<f64> = self
            .records
            .iter()
            .map(|r| r.post.text.split_whitespace().count() as f64)
            .collect();
        let ref_lens: Vec<f64> = self
            .records
            .iter()
            .flat_map(|r| r.references.references.iter())
            .map(|s| s.split_whitespace().count() as f64)
            .collect();
        SplitManifest {
            name: self.name,
            n_records: self.records.len(),
            post_len_mean: mean(&post_lens),
            post_len_std: std_dev(&post_lens),
            reference_len_mean: mean(&ref_lens),
            reference_len_std: std_dev(&ref_lens),
        }
    }
}

/// Counts and whitespace-token length statistics for a split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub name: SplitName,
    pub n_records: usize,
    pub post_len_mean: f64,
    pub post_len_std: f64,
    pub reference_len_mean: f64,
    pub reference_len_std: f64,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Group (post_id, explanation) rows into one `ReferenceSet` per post id.
///
/// Duplicate explanations are removed, order is first-seen stable, and empty
/// explanation strings are excluded; post ids whose explanations were all
/// empty are returned in the flag list.
pub fn group_references(rows: &[(String, String)]) -> (Vec<ReferenceSet>, Vec<String>) {
    let mut order: Vec<String> = Vec::new();
    let mut by_id: std::collections::HashMap<String, Vec<String>> =
        std::collections::HashMap::new();
    for (post_id, expl) in rows {
        let entry = by_id.entry(post_id.clone()).or_insert_with(|| {
            order.push(post_id.clone());
            Vec::new()
        });
        let trimmed = expl.trim();
        if !trimmed.is_empty() && !entry.iter().any(|e| e == trimmed) {
            entry.push(trimmed.to_string());
        }
    }
    let mut sets = Vec::new();
    let mut empty_flags = Vec::new();
    for id in order {
        let refs = by_id.remove(&id).unwrap_or_default();
        if refs.is_empty() {
            empty_flags.push(id.clone());
        }
        sets.push(ReferenceSet {
            post_id: id,
            references: refs,
        });
    }
    (sets, empty_flags)
}
