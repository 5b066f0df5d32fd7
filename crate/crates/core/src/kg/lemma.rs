//! Rule-based content-word extraction: a stopword filter plus suffix-style
//! lemmatization. This approximates "adjectives, nouns, and verbs" without a
//! statistical POS tagger: function words are excluded by list, adverbs by
//! the -ly suffix (with a noun/verb/adjective allow-list). Irregular forms
//! (mice, women) are left untouched.

use std::collections::BTreeSet;

const STOPWORDS: &[&str] = &[
    "a", "about", "after", "again", "all", "am", "an", "and", "any", "are", "as", "at", "be",
    "because", "been", "before", "being", "both", "but", "by", "can", "could", "did", "do",
    "does", "down", "each", "few", "for", "from", "had", "has", "have", "he", "her", "here",
    "him", "his", "how", "i", "if", "in", "into", "is", "it", "its", "just", "many", "may",
    "me", "might", "more", "most", "much", "must", "my", "no", "nor", "not", "of", "off", "on",
    "once", "only", "or", "other", "our", "out", "over", "own", "same", "shall", "she",
    "should", "so", "some", "such", "than", "that", "the", "their", "them", "then", "there",
    "these", "they", "this", "those", "to", "too", "under", "up", "us", "very", "was", "we",
    "were", "what", "when", "where", "which", "who", "whom", "whose", "why", "will", "with",
    "would", "you", "your",
];

/// Words ending in -ly that are nouns, verbs, or adjectives rather than
/// adverbs.
const LY_ALLOW: &[&str] = &[
    "ally", "apply", "belly", "bully", "family", "fly", "holy", "jelly", "rally", "rely",
    "reply", "silly", "supply", "ugly",
];

fn is_stopword(w: &str) -> bool {
    STOPWORDS.binary_search(&w).is_ok()
}

/// Keep probable nouns/verbs/adjectives: alphabetic, not a function word,
/// not an -ly adverb.
pub fn is_content_word(w: &str) -> bool {
    w.len() >= 2
        && w.chars().any(|c| c.is_alphabetic())
        && !is_stopword(w)
        && (!w.ends_with("ly") || LY_ALLOW.contains(&w))
}

fn undouble(stem: &str) -> String {
    let b = stem.as_bytes();
    let n = b.len();
    if n >= 2 && b[n - 1] == b[n - 2] && !b"aeiou".contains(&b[n - 1]) && b[n - 1] != b'l' && b[n - 1] != b's' {
        stem[..n - 1].to_string()
    } else {
        stem.to_string()
    }
}

/// Suffix-stripping lemmatizer for plurals and -ing/-ed inflections.
pub fn lemmatize(w: &str) -> String {
    let w = w.to_lowercase();
    if let Some(stem) = w.strip_suffix("sses") {
        return format!("{stem}ss");
    }
    for suf in ["xes", "ches", "shes", "zes"] {
        if let Some(stem) = w.strip_suffix("es") {
            if w.ends_with(suf) {
                return stem.to_string();
            }
        }
    }
    if w.len() > 4 {
        if let Some(stem) = w.strip_suffix("ies") {
            return format!("{stem}y");
        }
    }
    if let Some(stem) = w.strip_suffix("ied") {
        return format!("{stem}y");
    }
    if w.len() >= 6 {
        if let Some(stem) = w.strip_suffix("ing") {
            return undouble(stem);
        }
    }
    if w.len() >= 5 {
        if let Some(stem) = w.strip_suffix("ed") {
            return undouble(stem);
        }
    }
    if w.len() > 3 && w.ends_with('s') && !w.ends_with("ss") && !w.ends_with("us") && !w.ends_with("is") {
        return w[..w.len() - 1].to_string();
    }
    w
}

/// Lowercased alphanumeric tokens, punctuation dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric() && c != '\'')
        .map(|t| t.trim_matches('\''))
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

/// Deduplicated, sorted content-word lemmas of a post.
pub fn content_lemmas(text: &str) -> BTreeSet<String> {
    tokenize(text)
        .into_iter()
        .filter(|t| is_content_word(t))
        .map(|t| lemmatize(&t))
        .collect()
}
