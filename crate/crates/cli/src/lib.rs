//! Front ends for a design session: the `add` command line and the local
//! HTTP API a review console talks to.

pub mod api;

use std::path::Path;

use add_core::audit::{audit, trace, AuditOptions, AuditReport, AuditScope, Corpus, LoadIssue, TraceMatrix};
use add_core::doc::{parse_driver_file, parse_drivers, parse_iteration_plan, parse_iteration_record, ParseWarning};
use add_core::doc::parse_architecture_document_lenient;
use add_core::engine::{EngineError, Session};
use add_core::gateway::{read_transcript, Gateway, GatewayError, LiveConfig, TranscriptWriter, ENV_MODEL};
use add_core::store::{ArtifactPath, StoreError, Workspace, ARCHITECTURE_FILE, DRIVERS_FILE, PLAN_FILE, TRANSCRIPT_FILE};
use serde::Serialize;

/// Opens a workspace, applying the model override from the environment
/// when the session talks to a live model.
pub fn open_workspace(root: &Path, live: bool) -> Result<Workspace, StoreError> {
    let mut ws = Workspace::open(root)?;
    if live {
        if let Ok(model) = std::env::var(ENV_MODEL) {
            ws.config_mut().model_id = model;
        }
    }
    Ok(ws)
}

/// A replay gateway over `transcript`, or a live one that records into the
/// workspace transcript.
pub fn gateway_for(ws: &Workspace, replay: Option<&Path>) -> Result<Gateway, GatewayError> {
    match replay {
        Some(path) => Ok(Gateway::replay(read_transcript(path)?, ws.config().strict_replay)),
        None => Ok(Gateway::live(LiveConfig::from_env()?).recording_to(TranscriptWriter::new(ws.path(TRANSCRIPT_FILE)))),
    }
}

pub fn open_session(root: &Path, live: bool) -> Result<Session, EngineError> {
    let ws = open_workspace(root, live)?;
    let mode = ws.config().mode;
    Session::open_or_start(ws, mode)
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditOutput {
    pub report: AuditReport,
    pub trace: TraceMatrix,
    pub load_issues: Vec<LoadIssue>,
}

impl AuditOutput {
    /// 0 without errors, 1 with error findings, 2 when the corpus could not
    /// be loaded completely.
    pub fn exit_code(&self) -> i32 {
        if !self.load_issues.is_empty() {
            2
        } else if self.report.has_errors() {
            1
        } else {
            0
        }
    }
}

/// Full audit of the committed workspace and its journal.
pub fn audit_workspace(ws: &Workspace) -> Result<AuditOutput, LoadIssue> {
    let (corpus, load_issues) = Corpus::from_workspace(ws)?;
    let options = AuditOptions::from_overrides(&ws.config().severity_overrides);
    Ok(AuditOutput {
        report: audit(&corpus, &AuditScope::All, &options),
        trace: trace(&corpus),
        load_issues,
    })
}

/// Parse warnings for an artifact, or the error that stops it parsing.
pub fn artifact_warnings(path: &ArtifactPath, text: &str) -> Result<Vec<ParseWarning>, String> {
    let p = path.as_str();
    if p == DRIVERS_FILE {
        parse_drivers(text).map(|r| r.warnings).map_err(|e| e.to_string())
    } else if p.starts_with("Drivers/") {
        parse_driver_file(text).map(|r| r.warnings).map_err(|e| e.to_string())
    } else if p == PLAN_FILE {
        parse_iteration_plan(text).map(|r| r.warnings).map_err(|e| e.to_string())
    } else if p == ARCHITECTURE_FILE {
        Ok(parse_architecture_document_lenient(text).warnings)
    } else if path.iteration_number().is_some() {
        Ok(parse_iteration_record(text).warnings)
    } else {
        Ok(Vec::new())
    }
}
