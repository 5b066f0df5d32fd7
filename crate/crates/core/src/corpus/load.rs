use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ToxgenError};

use super::preprocess::preprocess;
use super::types::{
    group_references, DatasetSchema, DatasetSplit, InDatasetAttributes, Post, PostRecord,
    ReferenceSet, SbicFlags, SplitName, ToxicityRecord,
};

/// Per-dataset column mapping for the delimited / JSON-lines inputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnMapping {
    pub post_id: String,
    pub post: String,
    pub explanation: String,
    pub target_group: String,
    pub intentional: String,
    pub lewd: String,
    pub offensive: String,
    pub group_targeting: String,
    pub in_group_language: String,
    pub implicit_class: String,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        Self {
            post_id: "post_id".into(),
            post: "post".into(),
            explanation: "explanation".into(),
            target_group: "target_group".into(),
            intentional: "intentional".into(),
            lewd: "lewd".into(),
            offensive: "offensive".into(),
            group_targeting: "group_targeting".into(),
            in_group_language: "in_group_language".into(),
            implicit_class: "implicit_class".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExplanationDataset {
    pub train: DatasetSplit,
    pub test: DatasetSplit,
}

type Row = HashMap<String, String>;

fn value_to_string(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::String(s) => s.clone(),
        serde_json::Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn read_rows(path: &Path) -> Result<Vec<Row>> {
    let display = path.display().to_string();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .unwrap_or("")
        .to_lowercase();
    let mut rows = Vec::new();
    if ext == "jsonl" || ext == "json" {
        let content = std::fs::read_to_string(path)?;
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let obj: serde_json::Map<String, serde_json::Value> =
                serde_json::from_str(line).map_err(|e| ToxgenError::Schema {
                    path: display.clone(),
                    message: format!("row {}: {e}", i + 1),
                })?;
            rows.push(
                obj.iter()
                    .map(|(k, v)| (k.clone(), value_to_string(v)))
                    .collect(),
            );
        }
    } else {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .from_path(path)?;
        let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
        for (i, rec) in reader.records().enumerate() {
            let rec = rec.map_err(|e| ToxgenError::Schema {
                path: display.clone(),
                message: format!("row {}: {e}", i + 1),
            })?;
            rows.push(
                headers
                    .iter()
                    .cloned()
                    .zip(rec.iter().map(|f| f.to_string()))
                    .collect(),
            );
        }
    }
    if rows.is_empty() {
        return Err(ToxgenError::Schema {
            path: display,
            message: "file contains no data rows".into(),
        });
    }
    Ok(rows)
}

fn get<'a>(row: &'a Row, col: &str, path: &Path, row_idx: usize) -> Result<&'a str> {
    row.get(col).map(|s| s.as_str()).ok_or_else(|| ToxgenError::Schema {
        path: path.display().to_string(),
        message: format!("row {}: missing column '{col}'", row_idx + 1),
    })
}

fn parse_flag(raw: &str) -> bool {
    matches!(
        raw.trim().to_lowercase().as_str(),
        "1" | "1.0" | "true" | "yes" | "y"
    )
}

fn load_split(
    path: &Path,
    schema: DatasetSchema,
    mapping: &ColumnMapping,
    name: SplitName,
) -> Result<DatasetSplit> {
    let rows = read_rows(path)?;

    // Raw (post_id, explanation) pairs for grouping; per-post text/attributes
    // come from the first row of each post id.
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut first_row: HashMap<String, usize> = HashMap::new();
    for (i, row) in rows.iter().enumerate() {
        let id = get(row, &mapping.post_id, path, i)?.to_string();
        let expl = get(row, &mapping.explanation, path, i)?.to_string();
        if schema == DatasetSchema::LatentHatredLike && first_row.contains_key(&id) {
            return Err(ToxgenError::Schema {
                path: path.display().to_string(),
                message: format!(
                    "row {}: duplicate post id '{id}' in a single-annotation corpus",
                    i + 1
                ),
            });
        }
        first_row.entry(id.clone()).or_insert(i);
        pairs.push((id, expl));
    }
    let (reference_sets, empty_flags) = group_references(&pairs);

    let mut records = Vec::new();
    for refs in reference_sets {
        let i = first_row[&refs.post_id];
        let row = &rows[i];
        let raw_text = get(row, &mapping.post, path, i)?;
        let text = preprocess(raw_text);
        if text.is_empty() {
            log::warn!(
                "dropping post '{}' from {}: empty text after preprocessing",
                refs.post_id,
                path.display()
            );
            continue;
        }
        let target_group = preprocess(get(row, &mapping.target_group, path, i).unwrap_or(""));
        let attributes = match schema {
            DatasetSchema::SbicLike => InDatasetAttributes {
                target_group,
                sbic_flags: Some(SbicFlags {
                    intentional: parse_flag(get(row, &mapping.intentional, path, i)?),
                    lewd: parse_flag(get(row, &mapping.lewd, path, i)?),
                    offensive: parse_flag(get(row, &mapping.offensive, path, i)?),
                    group_targeting: parse_flag(get(row, &mapping.group_targeting, path, i)?),
                    in_group_language: parse_flag(get(row, &mapping.in_group_language, path, i)?),
                }),
                implicit_class: None,
            },
            DatasetSchema::LatentHatredLike => InDatasetAttributes {
                target_group,
                sbic_flags: None,
                implicit_class: Some(
                    get(row, &mapping.implicit_class, path, i)?.trim().to_lowercase(),
                ),
            },
        };
        let empty_references = empty_flags.contains(&refs.post_id);
        records.push(PostRecord {
            post: Post {
                id: refs.post_id.clone(),
                text,
                source_dataset: schema,
            },
            references: ReferenceSet {
                post_id: refs.post_id.clone(),
                references: refs.references.iter().map(|r| preprocess(r)).collect(),
            },
            attributes,
            empty_references,
        });
    }
    Ok(DatasetSplit { name, records })
}

/// Load an explanation corpus from its train and test files.
pub fn load_explanation_dataset(
    train_path: &Path,
    test_path: &Path,
    schema: DatasetSchema,
    mapping: &ColumnMapping,
) -> Result<ExplanationDataset> {
    Ok(ExplanationDataset {
        train: load_split(train_path, schema, mapping, SplitName::Train)?,
        test: load_split(test_path, schema, mapping, SplitName::Test)?,
    })
}

/// Load the toxicity-regression corpus: one record per row with a text column
/// and the six label columns (named per `TOXICITY_LABELS`).
pub fn load_toxicity_records(path: &Path, text_col: &str) -> Result<Vec<ToxicityRecord>> {
    let rows = read_rows(path)?;
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let text = preprocess(get(row, text_col, path, i)?);
        let mut labels = [0.0f64; 6];
        for (j, label) in super::types::TOXICITY_LABELS.iter().enumerate() {
            let raw = get(row, label, path, i)?;
            labels[j] = raw.trim().parse::<f64>().map_err(|_| ToxgenError::Schema {
                path: path.display().to_string(),
                message: format!("row {}: column '{label}' is not numeric: {raw:?}", i + 1),
            })?;
        }
        let rec = ToxicityRecord { text, labels };
        rec.validate()
            .map_err(|e| ToxgenError::Schema {
                path: path.display().to_string(),
                message: format!("row {}: {e}", i + 1),
            })?;
        out.push(rec);
    }
    Ok(out)
}
