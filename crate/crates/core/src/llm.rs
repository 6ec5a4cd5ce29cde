//! Minimal chat-completion transport shared by the resolution oracle and
//! the inference client.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("environment variable {0} is not set")]
    MissingKey(String),
    #[error("HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("transport: {0}")]
    Io(String),
    #[error("unexpected response shape: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatConfig {
    pub endpoint: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub retries: u32,
    pub temperature: f64,
    pub seed: Option<u64>,
}

impl Default for ChatConfig {
    fn default() -> Self {
        ChatConfig {
            endpoint: "http://localhost:8000/v1/chat/completions".into(),
            model: "default".into(),
            api_key_env: "WEFT_API_KEY".into(),
            timeout_secs: 120,
            retries: 2,
            temperature: 0.7,
            seed: None,
        }
    }
}

pub struct ChatClient {
    cfg: ChatConfig,
    agent: ureq::Agent,
    key: Option<String>,
}

impl ChatClient {
    /// Fails when the key variable is named but unset.
    pub fn new(cfg: ChatConfig) -> Result<ChatClient, TransportError> {
        let key = if cfg.api_key_env.is_empty() {
            None
        } else {
            Some(std::env::var(&cfg.api_key_env).map_err(|_| TransportError::MissingKey(cfg.api_key_env.clone()))?)
        };
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_secs(cfg.timeout_secs)).build();
        Ok(ChatClient { cfg, agent, key })
    }

    pub fn config(&self) -> &ChatConfig {
        &self.cfg
    }

    fn once(&self, prompt: &str, temperature: f64, seed: Option<u64>) -> Result<String, TransportError> {
        let mut body = json!({
            "model": self.cfg.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        });
        if let Some(s) = seed {
            body["seed"] = json!(s);
        }
        let mut req = self.agent.post(&self.cfg.endpoint).set("Content-Type", "application/json");
        if let Some(k) = &self.key {
            req = req.set("Authorization", &format!("Bearer {k}"));
        }
        let resp = match req.send_json(body) {
            Ok(r) => r,
            Err(ureq::Error::Status(status, r)) => return Err(TransportError::Http { status, body: r.into_string().unwrap_or_default() }),
            Err(e) => return Err(TransportError::Io(e.to_string())),
        };
        let v: serde_json::Value = resp.into_json().map_err(|e| TransportError::Schema(e.to_string()))?;
        v["choices"][0]["message"]["content"].as_str().map(str::to_string).ok_or_else(|| TransportError::Schema("missing choices[0].message.content".into()))
    }

    /// Sends one user message, retrying transient failures.
    pub fn complete(&self, prompt: &str, temperature: f64, seed: Option<u64>) -> Result<String, TransportError> {
        let mut last = None;
        for attempt in 0..=self.cfg.retries {
            match self.once(prompt, temperature, seed) {
                Ok(t) => return Ok(t),
                Err(e @ TransportError::Http { status, .. }) if status < 500 && status != 429 => return Err(e),
                Err(e) => {
                    log::warn!("chat request failed (attempt {}): {e}", attempt + 1);
                    last = Some(e);
                    std::thread::sleep(Duration::from_millis(500 * (attempt as u64 + 1)));
                }
            }
        }
        Err(last.unwrap_or_else(|| TransportError::Io("no attempt made".into())))
    }
}

/// Returns the last JSON object in `text` for which `accept` holds. Code
/// fences and surrounding prose are skipped.
pub fn last_json_object(text: &str, accept: impl Fn(&serde_json::Value) -> bool) -> Option<serde_json::Value> {
    let bytes = text.as_bytes();
    let mut found = None;
    for (i, b) in bytes.iter().enumerate() {
        if *b != b'{' {
            continue;
        }
        let mut stream = serde_json::Deserializer::from_str(&text[i..]).into_iter::<serde_json::Value>();
        if let Some(Ok(v)) = stream.next() {
            if v.is_object() && accept(&v) {
                found = Some(v);
            }
        }
    }
    found
}
