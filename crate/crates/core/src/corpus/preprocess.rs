//! Text normalization applied to every post and explanation before any
//! downstream use. The exact placeholder strings are fixed constants so the
//! pipeline is deterministic and fixture-testable.

/// Placeholder substituted for URL spans.
pub const URL_PLACEHOLDER: &str = "<url>";
/// Placeholder substituted for missing-value literals.
pub const NAN_PLACEHOLDER: &str = "<nan>";

const NAN_LITERALS: &[&str] = &["nan", "n/a", "null", "#n/a"];

fn is_url_token(tok: &str) -> bool {
    tok.starts_with("http://")
        || tok.starts_with("https://")
        || tok.starts_with("www.")
        || tok.starts_with("http//")
}

fn decode_entities(tok: &str) -> String {
    // Iterate to a fixed point so nested encodings ("&amp;amp;") cannot
    // break idempotency of the full pipeline.
    let mut cur = tok.to_string();
    loop {
        let next = cur
            .replace("&amp;", "&")
            .replace("&gt;", ">")
            .replace("&lt;", "<")
            .replace("&#39;", "'")
            .replace("&quot;", "\"");
        if next == cur {
            return next;
        }
        cur = next;
    }
}

/// Normalize a raw post: lowercase, collapse whitespace, replace URL spans
/// and missing-value literals with fixed placeholders, decode common HTML
/// entities. Total and idempotent; an empty result is a drop candidate for
/// the caller.
pub fn preprocess(text: &str) -> String {
    let lower = text.to_lowercase();
    let mut out: Vec<String> = Vec::new();
    for tok in lower.split_whitespace() {
        if is_url_token(tok) {
            out.push(URL_PLACEHOLDER.to_string());
        } else if NAN_LITERALS.contains(&tok) {
            out.push(NAN_PLACEHOLDER.to_string());
        } else {
            out.push(decode_entities(tok));
        }
    }
    out.join(" ")
}
