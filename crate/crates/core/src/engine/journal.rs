use std::fs::OpenOptions;
use std::io::Write;
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::Phase;
use crate::gateway::RequestDigest;
use crate::prompt::TemplateId;
use crate::store::{ArtifactPath, SnapshotId, StagingId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GateKind {
    Approve,
    RejectWithComment,
    EditArtifactsThenApprove,
    Finish,
}

impl GateKind {
    /// Whether the decision keeps the step output.
    pub fn approves(self) -> bool {
        !matches!(self, GateKind::RejectWithComment)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            GateKind::Approve => "approve",
            GateKind::RejectWithComment => "reject-with-comment",
            GateKind::EditArtifactsThenApprove => "edit-artifacts-then-approve",
            GateKind::Finish => "finish",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    PhaseChanged,
    PromptSent,
    ResponseApplied,
    AwaitingGate,
    GateRecorded,
    AuditCompleted,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::PhaseChanged => "phase-changed",
            EventKind::PromptSent => "prompt-sent",
            EventKind::ResponseApplied => "response-applied",
            EventKind::AwaitingGate => "awaiting-gate",
            EventKind::GateRecorded => "gate-recorded",
            EventKind::AuditCompleted => "audit-completed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum EventPayload {
    PhaseChanged {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        from: Option<Phase>,
        to: Phase,
    },
    PromptSent {
        template: TemplateId,
        request_digest: RequestDigest,
        prompt: String,
    },
    ResponseApplied {
        edits: Vec<ArtifactPath>,
        #[serde(default, skip_serializing_if = "String::is_empty")]
        commentary: String,
    },
    AwaitingGate {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        staging: Option<StagingId>,
        problems: Vec<String>,
    },
    GateRecorded {
        decision: GateKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        comment: Option<String>,
        /// Set for rejections the engine issues itself when a repairable
        /// problem is found.
        #[serde(default)]
        automatic: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        snapshot: Option<SnapshotId>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        architecture_digest: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        decision_rows: Option<usize>,
    },
    AuditCompleted {
        errors: usize,
        warnings: usize,
        infos: usize,
        rules: Vec<String>,
    },
}

impl EventPayload {
    pub fn kind(&self) -> EventKind {
        match self {
            EventPayload::PhaseChanged { .. } => EventKind::PhaseChanged,
            EventPayload::PromptSent { .. } => EventKind::PromptSent,
            EventPayload::ResponseApplied { .. } => EventKind::ResponseApplied,
            EventPayload::AwaitingGate { .. } => EventKind::AwaitingGate,
            EventPayload::GateRecorded { .. } => EventKind::GateRecorded,
            EventPayload::AuditCompleted { .. } => EventKind::AuditCompleted,
        }
    }

    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("payloads serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JournalEvent {
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    /// Phase the session was in when the event happened.
    pub phase: Phase,
    pub payload_digest: String,
    pub payload: EventPayload,
}

impl JournalEvent {
    pub fn kind(&self) -> EventKind {
        self.payload.kind()
    }

    pub fn gate(&self) -> Option<GateKind> {
        match &self.payload {
            EventPayload::GateRecorded { decision, .. } => Some(*decision),
            _ => None,
        }
    }

    /// Whether this is a gate that kept the step output.
    pub fn is_approval(&self) -> bool {
        self.gate().is_some_and(GateKind::approves)
    }
}

/// Checks the gate rule over a journal: after a response is applied, the
/// next applied response must be preceded by an approving gate, or by a
/// rejection that threw the earlier response away. Returns the sequence
/// number of the first offending event.
pub fn gate_rule_violation(events: &[JournalEvent]) -> Option<u64> {
    let mut pending = false;
    for e in events {
        match &e.payload {
            EventPayload::ResponseApplied { .. } => {
                if pending {
                    return Some(e.seq);
                }
                pending = true;
            }
            EventPayload::GateRecorded { .. } => pending = false,
            _ => {}
        }
    }
    None
}

pub fn read_journal(path: &Path) -> Result<Vec<JournalEvent>, String> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(format!("{}: {e}", path.display())),
    };
    parse_journal(&text)
}

pub fn parse_journal(text: &str) -> Result<Vec<JournalEvent>, String> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| format!("journal line {}: {e}", i + 1)))
        .collect()
}

pub(crate) fn append_event(path: &Path, event: &JournalEvent) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = serde_json::to_string(event).expect("events serialize");
    line.push('\n');
    f.write_all(line.as_bytes())?;
    f.sync_data()
}
