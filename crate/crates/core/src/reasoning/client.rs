//! Inference clients: live chat endpoint, deterministic mocks, and
//! transcript record/replay.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{ChatClient, TransportError};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("no transcript entry for round {round} of this prompt")]
    Missing { round: usize },
    #[error("{0}")]
    Injected(String),
    #[error("transcript: {0}")]
    Io(String),
}

impl InferenceError {
    pub fn is_transport(&self) -> bool {
        matches!(self, InferenceError::Transport(_))
    }
}

/// `round` lets replay and scripted mocks tell independent samples apart.
pub trait InferenceClient: Send + Sync {
    fn complete(&self, prompt: &str, round: usize) -> Result<String, InferenceError>;
}

impl<T: InferenceClient + ?Sized> InferenceClient for Box<T> {
    fn complete(&self, prompt: &str, round: usize) -> Result<String, InferenceError> {
        (**self).complete(prompt, round)
    }
}

pub fn verdict_json(is_vulnerable: bool, explanation: &str) -> String {
    serde_json::json!({"explanation": explanation, "is_vulnerable": is_vulnerable}).to_string()
}

/// Same response every round.
pub struct FixedClient(pub String);

impl InferenceClient for FixedClient {
    fn complete(&self, _: &str, _: usize) -> Result<String, InferenceError> {
        Ok(self.0.clone())
    }
}

/// Response `round % len`; `Err` entries become injected failures.
pub struct ScriptedClient(pub Vec<Result<String, String>>);

impl ScriptedClient {
    pub fn verdicts(vs: &[bool]) -> ScriptedClient {
        ScriptedClient(vs.iter().map(|v| Ok(verdict_json(*v, "scripted"))).collect())
    }
}

impl InferenceClient for ScriptedClient {
    fn complete(&self, _: &str, round: usize) -> Result<String, InferenceError> {
        match &self.0[round % self.0.len()] {
            Ok(s) => Ok(s.clone()),
            Err(e) => Err(InferenceError::Injected(e.clone())),
        }
    }
}

pub const DEFENSE_KEYWORDS: [&str; 10] = ["PreparedStatement", "escape", "sanitize", "encode", "allowlist", "whitelist", "normalize", "quoteReplacement", "ObjectInputFilter", "disallow-doctype-decl"];

/// Flags the invocation unless the code block names a defense keyword.
/// Pure in the prompt; ignores the round.
pub struct KeywordClient {
    pub keywords: Vec<String>,
}

impl Default for KeywordClient {
    fn default() -> Self {
        KeywordClient { keywords: DEFENSE_KEYWORDS.iter().map(|s| s.to_string()).collect() }
    }
}

impl InferenceClient for KeywordClient {
    fn complete(&self, prompt: &str, _: usize) -> Result<String, InferenceError> {
        let code = prompt.split("```").nth(1).unwrap_or("");
        let lower = code.to_lowercase();
        Ok(match self.keywords.iter().find(|k| lower.contains(&k.to_lowercase())) {
            Some(k) => verdict_json(false, &format!("defense `{k}` found in the context")),
            None => verdict_json(true, "no defense found in the context"),
        })
    }
}

pub struct LiveClient {
    pub chat: ChatClient,
}

impl InferenceClient for LiveClient {
    fn complete(&self, prompt: &str, round: usize) -> Result<String, InferenceError> {
        let cfg = self.chat.config();
        let seed = cfg.seed.map(|s| s.wrapping_add(round as u64));
        Ok(self.chat.complete(prompt, cfg.temperature, seed)?)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InferenceRecord {
    pub round: usize,
    pub prompt: String,
    pub response: String,
}

pub fn write_inference_transcript(path: &Path, records: &[InferenceRecord]) -> Result<(), InferenceError> {
    let mut f = std::fs::File::create(path).map_err(|e| InferenceError::Io(e.to_string()))?;
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| InferenceError::Io(e.to_string()))?;
        writeln!(f, "{line}").map_err(|e| InferenceError::Io(e.to_string()))?;
    }
    Ok(())
}

pub fn read_inference_transcript(path: &Path) -> Result<Vec<InferenceRecord>, InferenceError> {
    let f = std::fs::File::open(path).map_err(|e| InferenceError::Io(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in std::io::BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| InferenceError::Io(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| InferenceError::Io(format!("line {}: {e}", i + 1)))?);
    }
    Ok(out)
}

/// Wraps a client and keeps every successful exchange.
pub struct RecordingClient<C> {
    pub inner: C,
    records: Mutex<Vec<InferenceRecord>>,
}

impl<C: InferenceClient> RecordingClient<C> {
    pub fn new(inner: C) -> RecordingClient<C> {
        RecordingClient { inner, records: Mutex::new(Vec::new()) }
    }

    /// Records sorted by (prompt, round), independent of issue order.
    pub fn records(&self) -> Vec<InferenceRecord> {
        let mut r = self.records.lock().expect("poisoned").clone();
        r.sort_by(|a, b| (&a.prompt, a.round).cmp(&(&b.prompt, b.round)));
        r
    }
}

impl<C: InferenceClient> InferenceClient for RecordingClient<C> {
    fn complete(&self, prompt: &str, round: usize) -> Result<String, InferenceError> {
        let r = self.inner.complete(prompt, round)?;
        self.records.lock().expect("poisoned").push(InferenceRecord { round, prompt: prompt.to_string(), response: r.clone() });
        Ok(r)
    }
}

/// Answers from a transcript, keyed by (prompt, round).
pub struct ReplayClient {
    map: HashMap<(String, usize), String>,
}

impl ReplayClient {
    pub fn new(records: Vec<InferenceRecord>) -> ReplayClient {
        ReplayClient { map: records.into_iter().map(|r| ((r.prompt, r.round), r.response)).collect() }
    }

    pub fn load(path: &Path) -> Result<ReplayClient, InferenceError> {
        Ok(ReplayClient::new(read_inference_transcript(path)?))
    }
}

impl InferenceClient for ReplayClient {
    fn complete(&self, prompt: &str, round: usize) -> Result<String, InferenceError> {
        self.map.get(&(prompt.to_string(), round)).cloned().ok_or(InferenceError::Missing { round })
    }
}
