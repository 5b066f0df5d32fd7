//! Attribute-string construction: thresholded toxicity tokens, plain-text
//! prompt rendering, in-dataset annotation joins, and the perturbation /
//! flipping variants used by the ablation grid.

use serde::{Deserialize, Serialize};

use crate::corpus::{InDatasetAttributes, TOXICITY_LABELS};
use crate::error::{Result, ToxgenError};

/// The 12-entry token/prompt table, shipped as a versioned data file.
const TOKEN_PROMPT_TABLE: &str = include_str!("../data/token_prompt_table.json");

/// Six probabilities in label order, each clamped to [0,1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToxicityProbabilities(pub [f64; 6]);

impl ToxicityProbabilities {
    pub fn new(values: [f64; 6]) -> Self {
        Self(values.map(|v| v.clamp(0.0, 1.0)))
    }

    /// The primary toxicity component.
    pub fn toxicity(&self) -> f64 {
        self.0[0]
    }
}

/// One of the six toxicity labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToxLabel {
    Toxicity,
    SevereToxicity,
    Obscene,
    Threat,
    Insult,
    IdentityAttack,
}

impl ToxLabel {
    pub const ALL: [ToxLabel; 6] = [
        ToxLabel::Toxicity,
        ToxLabel::SevereToxicity,
        ToxLabel::Obscene,
        ToxLabel::Threat,
        ToxLabel::Insult,
        ToxLabel::IdentityAttack,
    ];

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|l| *l == self).unwrap()
    }

    pub fn name(self) -> &'static str {
        TOXICITY_LABELS[self.index()]
    }

    pub fn positive_token(self) -> &'static str {
        match self {
            ToxLabel::Toxicity => "<TOXIC>",
            ToxLabel::SevereToxicity => "<SEVERE_TOXIC>",
            ToxLabel::Obscene => "<OBSCENE>",
            ToxLabel::Threat => "<THREAT>",
            ToxLabel::Insult => "<INSULT>",
            ToxLabel::IdentityAttack => "<IDENTITY_ATTACK>",
        }
    }

    pub fn negative_token(self) -> &'static str {
        match self {
            ToxLabel::Toxicity => "<NOT_TOXIC>",
            ToxLabel::SevereToxicity => "<NOT_SEVERE_TOXIC>",
            ToxLabel::Obscene => "<NOT_OBSCENE>",
            ToxLabel::Threat => "<NOT_THREAT>",
            ToxLabel::Insult => "<NOT_INSULT>",
            ToxLabel::IdentityAttack => "<NOT_IDENTITY_ATTACK>",
        }
    }
}

/// All twelve special tokens, positives first, in label order.
pub fn token_vocabulary() -> Vec<&'static str> {
    let mut v: Vec<&'static str> = ToxLabel::ALL.iter().map(|l| l.positive_token()).collect();
    v.extend(ToxLabel::ALL.iter().map(|l| l.negative_token()));
    v
}

#[derive(Debug, Clone, Deserialize)]
struct TableEntry {
    token: String,
    prompt: String,
}

#[derive(Debug, Clone, Deserialize)]
struct PromptTable {
    #[allow(dead_code)]
    version: u32,
    entries: Vec<TableEntry>,
}

fn prompt_table() -> &'static PromptTable {
    static TABLE: std::sync::OnceLock<PromptTable> = std::sync::OnceLock::new();
    TABLE.get_or_init(|| {
        serde_json::from_str(TOKEN_PROMPT_TABLE).expect("bundled prompt table parses")
    })
}

/// Map a special token to its plain-text prompt phrase.
pub fn token_to_prompt(token: &str) -> Result<String> {
    prompt_table()
        .entries
        .iter()
        .find(|e| e.token == token)
        .map(|e| e.prompt.clone())
        .ok_or_else(|| ToxgenError::UnknownLabel(token.to_string()))
}

/// Inverse of [`token_to_prompt`].
pub fn prompt_to_token(prompt: &str) -> Result<String> {
    prompt_table()
        .entries
        .iter()
        .find(|e| e.prompt == prompt)
        .map(|e| e.token.clone())
        .ok_or_else(|| ToxgenError::UnknownLabel(prompt.to_string()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rendering {
    SpecialTokens,
    PlainPrompt,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttributeConfig {
    pub lambda: f64,
    pub rendering: Rendering,
}

impl Default for AttributeConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            rendering: Rendering::SpecialTokens,
        }
    }
}

impl AttributeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambda <= 0.0 || self.lambda >= 1.0 {
            return Err(ToxgenError::Precondition(format!(
                "lambda {} outside (0,1)",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttributeKind {
    ToxicityTokens,
    ToxicityPrompt,
    InDataset,
}

/// Serialized attribute context appended to a model input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeString {
    pub text: String,
    pub kind: AttributeKind,
}

/// Threshold transformation: probability below lambda renders the negative
/// token, at or above lambda the positive token. Equality is positive since
/// the rule is a strict less-than on the probability.
pub fn thresholded_tokens(p: &ToxicityProbabilities, cfg: &AttributeConfig) -> AttributeString {
    let tokens: Vec<&str> = ToxLabel::ALL
        .iter()
        .zip(p.0.iter())
        .map(|(label, &pi)| {
            if pi < cfg.lambda {
                label.negative_token()
            } else {
                label.positive_token()
            }
        })
        .collect();
    match cfg.rendering {
        Rendering::SpecialTokens => AttributeString {
            text: tokens.join(" "),
            kind: AttributeKind::ToxicityTokens,
        },
        Rendering::PlainPrompt => AttributeString {
            text: tokens
                .iter()
                .map(|t| token_to_prompt(t).expect("vocabulary token"))
                .collect::<Vec<_>>()
                .join(" "),
            kind: AttributeKind::ToxicityPrompt,
        },
    }
}

/// Whitespace join of the in-dataset annotations: true flags (or the
/// implicit-hate class) first in declared order, target group last; empty
/// components are omitted.
pub fn in_dataset_string(a: &InDatasetAttributes) -> AttributeString {
    let mut parts: Vec<String> = Vec::new();
    if let Some(flags) = &a.sbic_flags {
        for (on, name) in [
            (flags.intentional, "intentional"),
            (flags.lewd, "lewd"),
            (flags.offensive, "offensive"),
            (flags.group_targeting, "group-targeting"),
            (flags.in_group_language, "in-group language"),
        ] {
            if on {
                parts.push(name.to_string());
            }
        }
    }
    if let Some(class) = &a.implicit_class {
        if !class.trim().is_empty() {
            parts.push(class.trim().to_string());
        }
    }
    if !a.target_group.trim().is_empty() {
        parts.push(a.target_group.trim().to_string());
    }
    AttributeString {
        text: parts.join(" "),
        kind: AttributeKind::InDataset,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbMode {
    AllZeros,
    AllOnes,
    Random,
}

/// Synthetic probability vectors for the perturbation ablations.
pub fn perturb_probabilities(mode: PerturbMode, seed: Option<u64>) -> Result<ToxicityProbabilities> {
    use rand::{Rng, SeedableRng};
    match mode {
        PerturbMode::AllZeros => Ok(ToxicityProbabilities([0.0; 6])),
        PerturbMode::AllOnes => Ok(ToxicityProbabilities([1.0; 6])),
        PerturbMode::Random => {
            let seed = seed.ok_or_else(|| {
                ToxgenError::Precondition("random perturbation requires a seed".into())
            })?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut vals = [0.0f64; 6];
            for v in &mut vals {
                *v = rng.gen_range(0.0..1.0);
            }
            Ok(ToxicityProbabilities(vals))
        }
    }
}

/// Swap the token for `label` with its negation, leaving the rest unchanged.
pub fn flip_attribute(s: &AttributeString, label: ToxLabel) -> Result<AttributeString> {
    if s.kind != AttributeKind::ToxicityTokens {
        return Err(ToxgenError::Precondition(
            "flip_attribute applies to toxicity token strings only".into(),
        ));
    }
    let pos = label.positive_token();
    let neg = label.negative_token();
    let mut found = false;
    let tokens: Vec<String> = s
        .text
        .split_whitespace()
        .map(|t| {
            if t == pos {
                found = true;
                neg.to_string()
            } else if t == neg {
                found = true;
                pos.to_string()
            } else {
                t.to_string()
            }
        })
        .collect();
    if !found {
        return Err(ToxgenError::UnknownLabel(format!(
            "no token for label '{}' in attribute string",
            label.name()
        )));
    }
    Ok(AttributeString {
        text: tokens.join(" "),
        kind: AttributeKind::ToxicityTokens,
    })
}
