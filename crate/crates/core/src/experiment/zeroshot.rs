//! Zero-shot stereotype elicitation from an external chat-completion
//! endpoint, with a resumable on-disk cache.

use std::collections::HashMap;
use std::io::{BufRead, Write as _};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::Post;
use crate::error::{Result, ToxgenError};
use crate::generator::GeneratedExplanation;

/// Render the fixed zero-shot prompt for one post.
pub fn zero_shot_prompt(post: &str) -> String {
    format!(
        "What stereotype is propagated by this post: {post}? \
         Answer in simple words and keep the length short"
    )
}

/// Minimal chat-completion client: one prompt in, one completion out.
/// Implementations own their retry/rate-limit policy.
pub trait ChatClient {
    fn complete(&self, prompt: &str) -> Result<String>;
    /// Stable identifier folded into the generation fingerprint.
    fn fingerprint(&self) -> String;
}

/// JSON-over-HTTP client for an OpenAI-style completion endpoint. The API
/// key comes from the named environment variable at call time.
pub struct HttpChatClient {
    pub endpoint: String,
    pub model: String,
    pub api_key_env: String,
    pub max_retries: usize,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

impl ChatClient for HttpChatClient {
    fn complete(&self, prompt: &str) -> Result<String> {
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
                std::thread::sleep(std::time::Duration::from_millis(500 << attempt));
            }
            let resp = client
                .post(&self.endpoint)
                .bearer_auth(&key)
                .json(&serde_json::json!({
                    "model": self.model,
                    "messages": [{ "role": "user", "content": prompt }],
                }))
                .send();
            match resp.and_then(|r| r.error_for_status()) {
                Ok(r) => match r.json::<CompletionResponse>() {
                    Ok(body) => {
                        return body
                            .choices
                            .first()
                            .map(|c| c.message.content.trim().to_string())
                            .ok_or_else(|| ToxgenError::Http("empty choices".into()))
                    }
                    Err(e) => last_err = e.to_string(),
                },
                Err(e) => last_err = e.to_string(),
            }
        }
        Err(ToxgenError::Http(format!(
            "completion endpoint failed after {} attempts: {last_err}",
            self.max_retries + 1
        )))
    }

    fn fingerprint(&self) -> String {
        format!("{}@{}", self.model, self.endpoint)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CacheLine {
    post_id: String,
    text: String,
}

#[derive(Debug, Clone)]
pub struct ZeroShotOutcome {
    pub generated: Vec<GeneratedExplanation>,
    /// Post ids that failed even after retries; rerun to resume.
    pub missing: Vec<String>,
}

/// One completion per post with the verbatim prompt template. Completed
/// posts are served from `cache_path` without touching the client, and new
/// completions are appended immediately so interrupted runs resume.
pub fn zero_shot_llm_baseline(
    posts: &[Post],
    client: &dyn ChatClient,
    cache_path: &Path,
) -> Result<ZeroShotOutcome> {
    let mut cache: HashMap<String, String> = HashMap::new();
    if cache_path.exists() {
        for line in std::io::BufReader::new(std::fs::File::open(cache_path)?).lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: CacheLine = serde_json::from_str(&line)?;
            cache.insert(entry.post_id, entry.text);
        }
    }
    if let Some(parent) = cache_path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let mut cache_file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(cache_path)?;
    let fingerprint = crate::experiment::hash_value(&serde_json::json!({
        "prompt": zero_shot_prompt("{POST}"),
        "client": client.fingerprint(),
    }));
    let mut generated = Vec::new();
    let mut missing = Vec::new();
    for post in posts {
        let text = if let Some(hit) = cache.get(&post.id) {
            hit.clone()
        } else {
            match client.complete(&zero_shot_prompt(&post.text)) {
                Ok(text) => {
                    writeln!(
                        cache_file,
                        "{}",
                        serde_json::to_string(&CacheLine {
                            post_id: post.id.clone(),
                            text: text.clone(),
                        })?
                    )?;
                    text
                }
                Err(e) => {
                    log::warn!("zero-shot completion failed for {}: {e}", post.id);
                    missing.push(post.id.clone());
                    continue;
                }
            }
        };
        generated.push(GeneratedExplanation {
            post_id: post.id.clone(),
            text,
            config_fingerprint: fingerprint.clone(),
            seed: 0,
        });
    }
    Ok(ZeroShotOutcome { generated, missing })
}
