//! Pluggable toxicity scoring of generated text: the in-repo regressor's
//! toxicity head, or an external HTTP scoring endpoint. Failed samples are
//! marked missing, never fabricated.

use serde::Deserialize;

use crate::error::{Result, ToxgenError};
use crate::regressor::Regressor;
use crate::scalar::Scalar;

pub trait ToxicityScorer {
    /// Score one text in [0, 1].
    fn score(&self, text: &str) -> Result<f64>;
}

/// Scores with the toxicity head (index 0) of a trained regressor.
pub struct RegressorScorer<'a, S: Scalar>(pub &'a Regressor<S>);

impl<S: Scalar> ToxicityScorer for RegressorScorer<'_, S> {
    fn score(&self, text: &str) -> Result<f64> {
        Ok(self.0.predict_probabilities(text).0[0])
    }
}

/// Client for an external scoring endpoint. Expects a JSON response with a
/// top-level `score` field in [0, 1]. The API key is read from the named
/// environment variable per request, never stored.
pub struct HttpScorer {
    pub endpoint: String,
    pub api_key_env: String,
    pub max_retries: usize,
    /// Suppress text content from logs.
    pub privacy: bool,
}

#[derive(Deserialize)]
struct ScoreResponse {
    score: f64,
}

impl ToxicityScorer for HttpScorer {
    fn score(&self, text: &str) -> Result<f64> {
        let key = std::env::var(&self.api_key_env).map_err(|_| {
            ToxgenError::Config(format!(
                "environment variable {} is not set",
                self.api_key_env
            ))
        })?;
        let client = reqwest::blocking::Client::new();
        let mut last_err = String::new();
        for attempt in 0..=self.max_retries {
            if attempt > 0 {
                std::thread::sleep(std::time::Duration::from_millis(200 << attempt));
            }
            if self.privacy {
                log::debug!("toxicity request attempt {attempt} (content suppressed)");
            } else {
                log::debug!("toxicity request attempt {attempt} for: {text}");
            }
            let resp = client
                .post(&self.endpoint)
                .bearer_auth(&key)
                .json(&serde_json::json!({ "text": text }))
                .send();
            match resp.and_then(|r| r.error_for_status()) {
                Ok(r) => match r.json::<ScoreResponse>() {
                    Ok(body) => return Ok(body.score.clamp(0.0, 1.0)),
                    Err(e) => last_err = e.to_string(),
                },
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(ToxgenError::Http(format!(
            "scoring endpoint failed after {} attempts: {last_err}",
            self.max_retries + 1
        )))
    }
}

/// Per-generation score, or `None` where the scorer failed or the text was
/// empty (floored to 0 and flagged by absence of content).
pub fn toxicity_of_generations(
    texts: &[String],
    scorer: &dyn ToxicityScorer,
) -> Vec<Option<f64>> {
    texts
        .iter()
        .map(|t| {
            if t.trim().is_empty() {
                log::warn!("empty generation scored at the floor value");
                return Some(0.0);
            }
            match scorer.score(t) {
                Ok(s) => Some(s),
                Err(e) => {
                    log::warn!("toxicity scoring failed, sample marked missing: {e}");
                    None
                }
            }
        })
        .collect()
}
