//! Whitespace word-level tokenizer with the special and toxicity tokens
//! pinned at fixed ids.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;
pub const SEP: usize = 4;

/// Native separator token, mirrored between attribute and KG concatenation.
pub const SEP_TOKEN: &str = "[SEP]";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Tokenizer {
    vocab: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl Tokenizer {
    /// Build a vocabulary from the given texts. Specials and the twelve
    /// toxicity tokens are always present.
    pub fn build<'a>(texts: impl Iterator<Item = &'a str>, max_vocab: usize) -> Self {
        let mut vocab: Vec<String> = vec![
            "<pad>".into(),
            "<bos>".into(),
            "<eos>".into(),
            "<unk>".into(),
            SEP_TOKEN.into(),
        ];
        vocab.extend(
            crate::attributes::token_vocabulary()
                .into_iter()
                .map(|s| s.to_string()),
        );
        let mut counts: HashMap<String, usize> = HashMap::new();
        let mut order: Vec<String> = Vec::new();
        for text in texts {
            for tok in text.split_whitespace() {
                if vocab.iter().any(|v| v == tok) {
                    continue;
                }
                let e = counts.entry(tok.to_string()).or_insert(0);
                if *e == 0 {
                    order.push(tok.to_string());
                }
                *e += 1;
            }
        }
        // Frequency-sorted, first-seen stable tie-break.
        let mut ranked: Vec<(usize, String)> = order
            .into_iter()
            .enumerate()
            .map(|(i, t)| (i, t))
            .collect();
        ranked.sort_by(|a, b| counts[&b.1].cmp(&counts[&a.1]).then(a.0.cmp(&b.0)));
        for (_, tok) in ranked {
            if vocab.len() >= max_vocab {
                break;
            }
            vocab.push(tok);
        }
        let mut tk = Self {
            vocab,
            index: HashMap::new(),
        };
        tk.rebuild_index();
        tk
    }

    pub fn rebuild_index(&mut self) {
        self.index = self
            .vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        text.split_whitespace()
            .map(|t| *self.index.get(t).unwrap_or(&UNK))
            .collect()
    }

    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter()
            .filter(|&&i| i != PAD && i != BOS && i != EOS)
            .map(|&i| self.vocab.get(i).map(|s| s.as_str()).unwrap_or("<unk>"))
            .collect::<Vec<_>>()
            .join(" ")
    }
}
