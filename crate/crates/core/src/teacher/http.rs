//! OpenAI-compatible HTTP teacher: `/chat/completions` for comparisons and
//! `/embeddings` for vectors.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use ureq::Agent;

use super::{parse_yes_no, CompareAnswer, ItemRef, TeacherBackend, TeacherError};

/// The zero-shot comparison prompt with both texts interpolated.
pub fn compare_prompt(text_i: &str, text_j: &str) -> String {
    format!(
        "Answer in 'Yes' or 'No'. At a high level of detail, are these two pieces of text saying essentially the same thing: {text_i} and {text_j} ?"
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    pub max_retries: usize,
    pub backoff_base_ms: u64,
    pub backoff_cap_ms: u64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 5,
            backoff_base_ms: 500,
            backoff_cap_ms: 30_000,
        }
    }
}

impl RetryPolicy {
    pub fn delay(&self, attempt: usize) -> Duration {
        let factor = 1u64.checked_shl(attempt.min(32) as u32).unwrap_or(u64::MAX);
        Duration::from_millis(self.backoff_base_ms.saturating_mul(factor).min(self.backoff_cap_ms))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpTeacherConfig {
    pub base_url: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub compare_model: String,
    pub embed_model: String,
    pub max_in_flight: usize,
    pub max_batch: usize,
    pub retry: RetryPolicy,
    pub timeout_secs: u64,
    /// Decoding settings for comparisons. Chosen for determinism.
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
}

impl Default for HttpTeacherConfig {
    fn default() -> Self {
        HttpTeacherConfig {
            base_url: "https://api.openai.com/v1".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            compare_model: "gpt-5-2025-08-07".into(),
            embed_model: "text-embedding-3-large".into(),
            max_in_flight: 8,
            max_batch: 256,
            retry: RetryPolicy::default(),
            timeout_secs: 120,
            temperature: Some(0.0),
            max_tokens: None,
        }
    }
}

pub struct HttpTeacher {
    cfg: HttpTeacherConfig,
    api_key: Option<String>,
    agent: Agent,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

#[derive(Deserialize)]
struct EmbeddingResponse {
    data: Vec<EmbeddingDatum>,
}

#[derive(Deserialize)]
struct EmbeddingDatum {
    index: usize,
    embedding: Vec<f64>,
}

impl HttpTeacher {
    /// Builds a client. The API key is read from the configured environment
    /// variable; a missing variable is only an error for non-local endpoints.
    pub fn new(cfg: HttpTeacherConfig) -> Result<Self, TeacherError> {
        if cfg.max_in_flight == 0 || cfg.max_batch == 0 {
            return Err(TeacherError::Unsupported(
                "max_in_flight and max_batch must be at least 1".into(),
            ));
        }
        let api_key = std::env::var(&cfg.api_key_env).ok();
        let local = cfg.base_url.contains("://127.0.0.1") || cfg.base_url.contains("://localhost");
        if api_key.is_none() && !local {
            return Err(TeacherError::MissingApiKey(cfg.api_key_env.clone()));
        }
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(cfg.timeout_secs)))
            .build()
            .into();
        Ok(HttpTeacher { cfg, api_key, agent })
    }

    fn url(&self, path: &str) -> String {
        format!("{}/{}", self.cfg.base_url.trim_end_matches('/'), path)
    }

    /// POSTs `body`, retrying transport errors, 429 and 5xx with capped
    /// exponential backoff.
    fn post(&self, path: &str, body: &Value) -> Result<Value, TeacherError> {
        let url = self.url(path);
        let attempts = self.cfg.retry.max_retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.cfg.retry.delay(attempt - 1));
            }
            let mut req = self.agent.post(&url).header("Content-Type", "application/json");
            if let Some(key) = &self.api_key {
                req = req.header("Authorization", format!("Bearer {key}"));
            }
            match req.send_json(body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if (200..300).contains(&status) {
                        return resp
                            .body_mut()
                            .read_json::<Value>()
                            .map_err(|e| TeacherError::Response(e.to_string()));
                    }
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    last = format!("http status {status}: {text}");
                    if status != 429 && status < 500 {
                        return Err(TeacherError::Transport { attempts: attempt + 1, message: last });
                    }
                }
                Err(e) => last = e.to_string(),
            }
            log::warn!("teacher request to {url} failed (attempt {}): {last}", attempt + 1);
        }
        Err(TeacherError::Transport {
            attempts,
            message: last,
        })
    }
}

impl TeacherBackend for HttpTeacher {
    fn identity(&self) -> String {
        format!(
            "http:{}|{}|{}",
            self.cfg.base_url.trim_end_matches('/'),
            self.cfg.compare_model,
            self.cfg.embed_model
        )
    }

    fn compare_key(&self, a: ItemRef<'_>, b: ItemRef<'_>) -> String {
        format!("{}\n{}", self.cfg.compare_model, compare_prompt(a.text, b.text))
    }

    fn embed_key(&self, item: ItemRef<'_>) -> String {
        format!("{}\n{}", self.cfg.embed_model, item.text)
    }

    fn compare(&self, a: ItemRef<'_>, b: ItemRef<'_>) -> Result<CompareAnswer, TeacherError> {
        let mut body = json!({
            "model": self.cfg.compare_model,
            "messages": [{ "role": "user", "content": compare_prompt(a.text, b.text) }],
        });
        if let Some(t) = self.cfg.temperature {
            body["temperature"] = json!(t);
        }
        if let Some(m) = self.cfg.max_tokens {
            body["max_tokens"] = json!(m);
        }
        let raw = self.post("chat/completions", &body)?;
        let parsed: ChatResponse =
            serde_json::from_value(raw.clone()).map_err(|e| TeacherError::Response(e.to_string()))?;
        let content = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .unwrap_or_default();
        let label = parse_yes_no(&content)?;
        Ok(CompareAnswer { raw, label })
    }

    fn embed(&self, items: &[ItemRef<'_>]) -> Result<Vec<Vec<f64>>, TeacherError> {
        if items.len() > self.cfg.max_batch {
            return Err(TeacherError::BatchTooLarge {
                size: items.len(),
                limit: self.cfg.max_batch,
            });
        }
        let input: Vec<&str> = items.iter().map(|it| it.text).collect();
        let raw = self.post("embeddings", &json!({ "model": self.cfg.embed_model, "input": input }))?;
        let mut parsed: EmbeddingResponse =
            serde_json::from_value(raw).map_err(|e| TeacherError::Response(e.to_string()))?;
        parsed.data.sort_by_key(|d| d.index);
        if parsed.data.iter().enumerate().any(|(k, d)| d.index != k) {
            return Err(TeacherError::Response("embedding indices do not cover the batch".into()));
        }
        Ok(parsed.data.into_iter().map(|d| d.embedding).collect())
    }

    fn max_in_flight(&self) -> usize {
        self.cfg.max_in_flight
    }

    fn max_batch(&self) -> usize {
        self.cfg.max_batch
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prompt_interpolates_both_texts() {
        let p = compare_prompt("A", "B");
        assert!(p.starts_with("Answer in 'Yes' or 'No'."));
        assert!(p.ends_with("the same thing: A and B ?"));
    }

    #[test]
    fn backoff_is_capped() {
        let r = RetryPolicy {
            max_retries: 10,
            backoff_base_ms: 100,
            backoff_cap_ms: 1000,
        };
        assert_eq!(r.delay(0), Duration::from_millis(100));
        assert_eq!(r.delay(2), Duration::from_millis(400));
        assert_eq!(r.delay(9), Duration::from_millis(1000));
        assert_eq!(r.delay(200), Duration::from_millis(1000));
    }
}
