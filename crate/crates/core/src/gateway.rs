//! Model transport. Every exchange is recorded to a JSON-lines transcript
//! keyed by a digest of the request, so a session can be re-driven later
//! without a model.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};
use thiserror::Error;

use crate::prompt::ContextItem;

pub const ENV_API_KEY: &str = "ADD_LLM_API_KEY";
pub const ENV_BASE_URL: &str = "ADD_LLM_BASE_URL";
pub const ENV_MODEL: &str = "ADD_LLM_MODEL";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GatewayError {
    #[error("TRANSPORT_ERROR: {0}")]
    Transport(String),
    #[error("REPLAY_MISS: no recorded response for request {digest}")]
    ReplayMiss { digest: RequestDigest },
    #[error("REPLAY_ORDER: request {digest} matches transcript entry {found}, but entry {expected} is next")]
    ReplayOrder {
        digest: RequestDigest,
        expected: usize,
        found: usize,
    },
    #[error("INVALID_REQUEST: {0}")]
    InvalidRequest(String),
    #[error("TRANSCRIPT_ERROR: {0}")]
    Transcript(String),
}

impl GatewayError {
    pub fn code(&self) -> &'static str {
        match self {
            GatewayError::Transport(_) => "TRANSPORT_ERROR",
            GatewayError::ReplayMiss { .. } => "REPLAY_MISS",
            GatewayError::ReplayOrder { .. } => "REPLAY_ORDER",
            GatewayError::InvalidRequest(_) => "INVALID_REQUEST",
            GatewayError::Transcript(_) => "TRANSCRIPT_ERROR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RequestDigest(pub String);

impl std::fmt::Display for RequestDigest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRequest {
    pub system: String,
    pub user: String,
    pub attachments: Vec<ContextItem>,
    pub model_id: String,
    pub temperature: f64,
    /// Free-form annotations such as timestamps. Not part of the digest.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

impl ModelRequest {
    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.user.trim().is_empty() {
            return Err(GatewayError::InvalidRequest("user prompt is empty".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(GatewayError::InvalidRequest(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        Ok(())
    }

    /// The user message as sent over the wire: attachments first, then the
    /// prompt.
    pub fn user_message(&self) -> String {
        let mut out = String::new();
        for a in self.attachments.iter().filter(|a| !a.content.is_empty()) {
            out.push_str(&format!("<attachment name=\"{}\">\n{}\n</attachment>\n\n", a.name, a.content));
        }
        out.push_str(&self.user);
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub input_units: u64,
    pub output_units: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelResponse {
    /// Absent exactly when `finish_reason` is `error`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    pub finish_reason: FinishReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
}

impl ModelResponse {
    pub fn stop(text: impl Into<String>) -> Self {
        Self {
            text: Some(text.into()),
            finish_reason: FinishReason::Stop,
            usage: None,
        }
    }

    pub fn error() -> Self {
        Self {
            text: None,
            finish_reason: FinishReason::Error,
            usage: None,
        }
    }

    pub fn is_well_formed(&self) -> bool {
        self.text.is_some() == (self.finish_reason != FinishReason::Error)
    }
}

fn feed(h: &mut Sha256, field: &str) {
    h.update((field.len() as u64).to_le_bytes());
    h.update(field.as_bytes());
}

/// SHA-256 over length-prefixed request fields. Metadata and the truncation
/// flags of attachments are left out; attachment names and contents are in.
pub fn digest(req: &ModelRequest) -> RequestDigest {
    let mut h = Sha256::new();
    feed(&mut h, "add-request-v1");
    feed(&mut h, &req.model_id);
    feed(&mut h, &format!("{:.4}", req.temperature));
    feed(&mut h, &req.system);
    feed(&mut h, &req.user);
    h.update((req.attachments.len() as u64).to_le_bytes());
    for a in &req.attachments {
        feed(&mut h, &a.name);
        feed(&mut h, &a.content);
    }
    RequestDigest(hex::encode(h.finalize()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub request_digest: RequestDigest,
    pub response: ModelResponse,
    pub timestamp: DateTime<Utc>,
}

/// Reads a JSON-lines transcript. Blank lines are skipped.
pub fn read_transcript(path: &Path) -> Result<Vec<TranscriptEntry>, GatewayError> {
    let text = std::fs::read_to_string(path).map_err(|e| GatewayError::Transcript(format!("{}: {e}", path.display())))?;
    parse_transcript(&text)
}

pub fn parse_transcript(text: &str) -> Result<Vec<TranscriptEntry>, GatewayError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| GatewayError::Transcript(format!("line {}: {e}", i + 1))))
        .collect()
}

/// Appends one entry per line; each append is flushed before returning.
#[derive(Debug, Clone)]
pub struct TranscriptWriter {
    path: PathBuf,
}

impl TranscriptWriter {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self { path: path.into() }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, entry: &TranscriptEntry) -> Result<(), GatewayError> {
        let err = |e: std::io::Error| GatewayError::Transcript(format!("{}: {e}", self.path.display()));
        if let Some(dir) = self.path.parent() {
            std::fs::create_dir_all(dir).map_err(err)?;
        }
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path).map_err(err)?;
        let mut line = serde_json::to_string(entry).expect("entries serialize");
        line.push('\n');
        f.write_all(line.as_bytes()).map_err(err)?;
        f.sync_data().map_err(err)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LiveConfig {
    pub base_url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl LiveConfig {
    pub fn from_env() -> Result<Self, GatewayError> {
        let base_url = std::env::var(ENV_BASE_URL)
            .map_err(|_| GatewayError::Transport(format!("{ENV_BASE_URL} is not set")))?;
        Ok(Self {
            base_url,
            api_key: std::env::var(ENV_API_KEY).ok(),
            timeout: Duration::from_secs(600),
        })
    }
}

type Script = Box<dyn FnMut(&ModelRequest) -> ModelResponse + Send>;

pub enum Backend {
    Live(LiveConfig),
    Replay {
        entries: Vec<TranscriptEntry>,
        consumed: Vec<bool>,
        strict: bool,
    },
    /// In-process responder, used to build transcripts and in tests.
    Scripted(Script),
}

impl std::fmt::Debug for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::Live(c) => f.debug_tuple("Live").field(&c.base_url).finish(),
            Backend::Replay { entries, strict, .. } => f
                .debug_struct("Replay")
                .field("entries", &entries.len())
                .field("strict", strict)
                .finish(),
            Backend::Scripted(_) => f.write_str("Scripted"),
        }
    }
}

#[derive(Debug)]
pub struct Gateway {
    backend: Backend,
    recorder: Option<TranscriptWriter>,
}

impl Gateway {
    pub fn live(config: LiveConfig) -> Self {
        Self {
            backend: Backend::Live(config),
            recorder: None,
        }
    }

    pub fn replay(entries: Vec<TranscriptEntry>, strict: bool) -> Self {
        let consumed = vec![false; entries.len()];
        Self {
            backend: Backend::Replay {
                entries,
                consumed,
                strict,
            },
            recorder: None,
        }
    }

    pub fn scripted(f: impl FnMut(&ModelRequest) -> ModelResponse + Send + 'static) -> Self {
        Self {
            backend: Backend::Scripted(Box::new(f)),
            recorder: None,
        }
    }

    pub fn recording_to(mut self, writer: TranscriptWriter) -> Self {
        self.recorder = Some(writer);
        self
    }

    pub fn is_replay(&self) -> bool {
        matches!(self.backend, Backend::Replay { .. })
    }

    /// Recorded responses not yet handed out, for replay gateways.
    pub fn remaining(&self) -> usize {
        match &self.backend {
            Backend::Replay { consumed, .. } => consumed.iter().filter(|c| !**c).count(),
            _ => 0,
        }
    }

    pub fn complete(&mut self, req: &ModelRequest) -> Result<ModelResponse, GatewayError> {
        req.validate()?;
        let d = digest(req);
        let outcome = match &mut self.backend {
            Backend::Replay {
                entries,
                consumed,
                strict,
            } => return replay_one(entries, consumed, *strict, &d),
            Backend::Scripted(f) => Ok(f(req)),
            Backend::Live(cfg) => {
                let first = call_live(cfg, req);
                match first {
                    Err(GatewayError::Transport(_)) => call_live(cfg, req),
                    other => other,
                }
            }
        };
        let recorded = match &outcome {
            Ok(r) => r.clone(),
            Err(_) => ModelResponse::error(),
        };
        if let Some(w) = &self.recorder {
            w.append(&TranscriptEntry {
                request_digest: d,
                response: recorded,
                timestamp: Utc::now(),
            })?;
        }
        outcome
    }
}

fn replay_one(
    entries: &[TranscriptEntry],
    consumed: &mut [bool],
    strict: bool,
    d: &RequestDigest,
) -> Result<ModelResponse, GatewayError> {
    let next = consumed.iter().position(|c| !c);
    let found = (0..entries.len()).find(|&i| !consumed[i] && &entries[i].request_digest == d);
    match (found, next) {
        (None, _) => Err(GatewayError::ReplayMiss { digest: d.clone() }),
        (Some(i), Some(n)) if strict && i != n => Err(GatewayError::ReplayOrder {
            digest: d.clone(),
            expected: n,
            found: i,
        }),
        (Some(i), _) => {
            consumed[i] = true;
            Ok(entries[i].response.clone())
        }
    }
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<WireUsage>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct WireUsage {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

fn call_live(cfg: &LiveConfig, req: &ModelRequest) -> Result<ModelResponse, GatewayError> {
    let url = format!("{}/chat/completions", cfg.base_url.trim_end_matches('/'));
    let body = serde_json::json!({
        "model": req.model_id,
        "temperature": req.temperature,
        "messages": [
            {"role": "system", "content": req.system},
            {"role": "user", "content": req.user_message()},
        ],
    });
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(cfg.timeout))
        .build()
        .into();
    let mut call = agent.post(&url);
    if let Some(key) = &cfg.api_key {
        call = call.header("Authorization", &format!("Bearer {key}"));
    }
    let mut resp = call
        .send_json(&body)
        .map_err(|e| GatewayError::Transport(e.to_string()))?;
    let wire: WireResponse = resp
        .body_mut()
        .read_json()
        .map_err(|e| GatewayError::Transport(format!("unreadable response: {e}")))?;
    let choice = wire
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| GatewayError::Transport("response has no choices".into()))?;
    let finish_reason = match choice.finish_reason.as_deref() {
        Some("length") => FinishReason::Length,
        _ => FinishReason::Stop,
    };
    Ok(ModelResponse {
        text: Some(choice.message.content.unwrap_or_default()),
        finish_reason,
        usage: wire.usage.map(|u| Usage {
            input_units: u.prompt_tokens,
            output_units: u.completion_tokens,
        }),
    })
}
