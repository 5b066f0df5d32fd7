//! Input-space attribute concatenation (C1/C2) and its inverse.

use serde::{Deserialize, Serialize};

use crate::attributes::{AttributeKind, AttributeString};
use crate::error::{Result, ToxgenError};

use super::tokenizer::SEP_TOKEN;

/// Whether attributes follow or precede the post in the concatenated input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributePosition {
    #[default]
    PostFirst,
    AttributesFirst,
}

fn join(post: &str, attrs: &str, position: AttributePosition) -> String {
    if attrs.is_empty() {
        return post.to_string();
    }
    match position {
        AttributePosition::PostFirst => format!("{post} {SEP_TOKEN} {attrs}"),
        AttributePosition::AttributesFirst => format!("{attrs} {SEP_TOKEN} {post}"),
    }
}

/// Post plus thresholded toxicity tokens (or their prompt rendering).
pub fn build_input_c1(post: &str, toks: &AttributeString, position: AttributePosition) -> Result<String> {
    if !matches!(
        toks.kind,
        AttributeKind::ToxicityTokens | AttributeKind::ToxicityPrompt
    ) {
        return Err(ToxgenError::Precondition(
            "C1 expects toxicity tokens or their prompt rendering".into(),
        ));
    }
    Ok(join(post, &toks.text, position))
}

/// Post plus whitespace-joined in-dataset attributes.
pub fn build_input_c2(post: &str, attrs: &AttributeString, position: AttributePosition) -> Result<String> {
    if attrs.kind != AttributeKind::InDataset {
        return Err(ToxgenError::Precondition(
            "C2 expects in-dataset attributes".into(),
        ));
    }
    Ok(join(post, &attrs.text, position))
}

/// Recover the original post from a built input.
pub fn strip_input_suffix(input: &str, position: AttributePosition) -> String {
    match input.split_once(&format!(" {SEP_TOKEN} ")) {
        None => input.to_string(),
        Some((before, after)) => match position {
            AttributePosition::PostFirst => before.to_string(),
            AttributePosition::AttributesFirst => after.to_string(),
        },
    }
}
