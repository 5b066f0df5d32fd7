//! Dataset ingestion, preprocessing and split management for the two
//! post/explanation corpora and the toxicity-regression corpus.

mod load;
mod preprocess;
mod types;

pub use load::{
    load_explanation_dataset, load_toxicity_records, ColumnMapping, ExplanationDataset,
};
pub use preprocess::{preprocess, NAN_PLACEHOLDER, URL_PLACEHOLDER};
pub use types::{
    group_references, DatasetSchema, DatasetSplit, InDatasetAttributes, Post, PostRecord,
    ReferenceSet, SbicFlags, SplitManifest, SplitName, ToxicityRecord, TOXICITY_LABELS,
};
