//! The gated workflow: setup phases, then steps 2 to 7 of every planned
//! iteration, with a human gate after each and a bounded repair loop.

mod edits;
mod journal;
mod phase;

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use edits::{parse_response, ParsedResponse, RawEdit};
pub use journal::{
    gate_rule_violation, parse_journal, read_journal, EventKind, EventPayload, GateKind, JournalEvent,
};
pub use phase::Phase;

use crate::audit::{audit, AuditOptions, AuditReport, AuditScope, Corpus, Rule, Severity};
use crate::doc::{
    parse_iteration_plan, section_spans, DriverId, IterationPlan, IterationRecord, SectionKind,
};
use crate::gateway::{digest, FinishReason, Gateway, GatewayError, ModelRequest, ModelResponse};
use crate::method::{step_heading, FIRST_STEP, LAST_STEP};
use crate::prompt::{
    assemble_context, bindings, BaselineMode, Bindings, ContextBundle, ContextSource, PromptError,
    PromptLibrary, TemplateId,
};
use crate::store::{
    content_digest, ArtifactEdit, ArtifactPath, DesignMode, SnapshotId, StagingId, StoreError, Workspace, ARCHITECTURE_FILE,
    DOMAIN_MODEL_FILE, DRIVERS_FILE, EVENTS_FILE, PLAN_FILE,
};

/// Automatic repairs allowed per step before a human has to decide.
pub const MAX_REPAIRS: u8 = 2;
pub const SESSION_FILE: &str = "journal/session.json";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("NO_DRIVERS_DOCUMENT: {0}")]
    NoDriversDocument(String),
    #[error("AWAITING_GATE: the output of {0} is waiting for a gate decision")]
    AwaitingGate(Phase),
    #[error("SESSION_FINISHED: the session has finished")]
    SessionFinished,
    #[error("NOT_AWAITING_GATE: nothing is waiting for a gate decision")]
    NotAwaitingGate,
    #[error("FINISH_NOT_LEGAL_HERE: finish is only allowed after step 7, not in {0}")]
    FinishNotLegalHere(Phase),
    #[error("INVALID_GATE: {0}")]
    InvalidGate(String),
    #[error("NO_PROMPT_SENT: no prompt is waiting for a response")]
    NoPromptSent,
    #[error("UNUSABLE_RESPONSE: the response ended with {0:?}")]
    UnusableResponse(FinishReason),
    #[error("INVALID_PLAN: {0}")]
    InvalidPlan(String),
    #[error("NO_SESSION: the workspace has no session; start one first")]
    NoSession,
    #[error("SESSION_EXISTS: the workspace already has a session")]
    SessionExists,
    #[error("JOURNAL_ERROR: {0}")]
    Journal(String),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

impl EngineError {
    pub fn code(&self) -> &'static str {
        match self {
            EngineError::NoDriversDocument(_) => "NO_DRIVERS_DOCUMENT",
            EngineError::AwaitingGate(_) => "AWAITING_GATE",
            EngineError::SessionFinished => "SESSION_FINISHED",
            EngineError::NotAwaitingGate => "NOT_AWAITING_GATE",
            EngineError::FinishNotLegalHere(_) => "FINISH_NOT_LEGAL_HERE",
            EngineError::InvalidGate(_) => "INVALID_GATE",
            EngineError::NoPromptSent => "NO_PROMPT_SENT",
            EngineError::UnusableResponse(_) => "UNUSABLE_RESPONSE",
            EngineError::InvalidPlan(_) => "INVALID_PLAN",
            EngineError::NoSession => "NO_SESSION",
            EngineError::SessionExists => "SESSION_EXISTS",
            EngineError::Journal(_) => "JOURNAL_ERROR",
            EngineError::Store(e) => e.code(),
            EngineError::Gateway(e) => e.code(),
            EngineError::Prompt(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDecision {
    pub kind: GateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comment: Option<String>,
    /// Replacement content for edit-then-approve.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edits: Vec<ArtifactEdit>,
    pub timestamp: DateTime<Utc>,
}

impl GateDecision {
    pub fn new(kind: GateKind) -> Self {
        Self {
            kind,
            comment: None,
            edits: Vec::new(),
            timestamp: Utc::now(),
        }
    }

    pub fn approve() -> Self {
        Self::new(GateKind::Approve)
    }

    pub fn finish() -> Self {
        Self::new(GateKind::Finish)
    }

    pub fn reject(comment: impl Into<String>) -> Self {
        Self {
            comment: Some(comment.into()),
            ..Self::new(GateKind::RejectWithComment)
        }
    }

    pub fn edit_then_approve(edits: Vec<ArtifactEdit>) -> Self {
        Self {
            edits,
            ..Self::new(GateKind::EditArtifactsThenApprove)
        }
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        match self.kind {
            GateKind::RejectWithComment if self.comment.as_deref().is_none_or(|c| c.trim().is_empty()) => {
                Err(EngineError::InvalidGate("reject-with-comment needs a comment".into()))
            }
            GateKind::EditArtifactsThenApprove if self.edits.is_empty() => {
                Err(EngineError::InvalidGate("edit-artifacts-then-approve needs edits".into()))
            }
            _ => Ok(()),
        }
    }
}

/// What the next model call should look like.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedAction {
    pub template: TemplateId,
    pub bindings: Bindings,
    pub context: ContextSpec,
}

/// Which artifacts go into the context bundle, in priority order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSpec {
    pub iteration_record: Option<ArtifactPath>,
    pub sections: Vec<SectionKind>,
    pub focus: Vec<DriverId>,
    pub extra: Vec<ArtifactPath>,
}

/// A problem with a step's output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepProblem {
    pub code: String,
    pub message: String,
    pub repairable: bool,
}

impl StepProblem {
    fn new(code: &str, message: impl Into<String>, repairable: bool) -> Self {
        Self {
            code: code.into(),
            message: message.into(),
            repairable,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Extracted {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<IterationPlan>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub phase: Phase,
    pub artifact_edits: Vec<ArtifactEdit>,
    pub commentary: String,
    pub extracted: Extracted,
    pub audit: AuditReport,
    pub problems: Vec<StepProblem>,
    /// The engine rejected the output itself and will send a repair prompt.
    pub needs_repair: bool,
    pub staging: Option<StagingId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingGate {
    pub staging: Option<StagingId>,
    pub problems: Vec<StepProblem>,
    /// Set at the last step of the last planned iteration.
    pub proposes_finish: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub phase: Phase,
    pub mode: DesignMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plan: Option<IterationPlan>,
    pub gate_log: Vec<GateDecision>,
    pub repair_count: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub awaiting: Option<PendingGate>,
    /// Reason for the next prompt being a repair prompt.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_repair: Option<String>,
    /// Template of a prompt sent and not yet answered.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outstanding: Option<TemplateId>,
    /// An approving decision whose commit has started. Lets a reopened
    /// session finish or drop a gate cut short by a crash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub committing: Option<GateDecision>,
    pub next_seq: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub phase: Phase,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<u8>,
    pub awaiting_gate: bool,
    pub repair_count: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending_repair: Option<String>,
    pub planned_iterations: usize,
    pub proposes_finish: bool,
    pub problems: Vec<StepProblem>,
    pub events: u64,
}

/// Architecture sections most relevant to each step; the others follow.
fn step_sections(step: u8) -> &'static [SectionKind] {
    use SectionKind::*;
    match step {
        2 => &[ArchitecturalDrivers],
        3 => &[ContainerDiagram, ComponentDiagrams],
        4 => &[ContainerDiagram, ComponentDiagrams, DesignDecisions],
        5 => &[ContextDiagram, ContainerDiagram, ComponentDiagrams, SequenceDiagrams, Interfaces],
        6 => &[DesignDecisions, ContainerDiagram, ComponentDiagrams, SequenceDiagrams],
        _ => &[],
    }
}

fn phase_requires_edits(phase: Phase) -> bool {
    !matches!(phase, Phase::ReviewDrivers | Phase::Finished)
}

fn validate_plan(text: &str) -> Result<IterationPlan, EngineError> {
    let plan = parse_iteration_plan(text)
        .map_err(|e| EngineError::InvalidPlan(e.to_string()))?
        .value;
    if plan.is_empty() {
        return Err(EngineError::InvalidPlan("the plan has no iterations".into()));
    }
    for (i, it) in plan.iterations.iter().enumerate() {
        if it.number as usize != i + 1 {
            return Err(EngineError::InvalidPlan(format!(
                "iterations must be numbered 1 to {}; found {} in position {}",
                plan.len(),
                it.number,
                i + 1
            )));
        }
    }
    Ok(plan)
}

/// A design session bound to a workspace.
#[derive(Debug)]
pub struct Session {
    ws: Workspace,
    prompts: PromptLibrary,
    state: SessionState,
    journal: Vec<JournalEvent>,
}

impl Session {
    /// Starts a session in a workspace that has a drivers document.
    pub fn start(ws: Workspace, mode: DesignMode) -> Result<Self, EngineError> {
        if ws.path(SESSION_FILE).exists() {
            return Err(EngineError::SessionExists);
        }
        let prompts = PromptLibrary::load(&ws.prompts_dir())?;
        let has_drivers_doc = ws
            .artifacts()?
            .iter()
            .any(|p| p.as_str() == DRIVERS_FILE || p.as_str().starts_with("Drivers/"));
        if !has_drivers_doc {
            return Err(EngineError::NoDriversDocument("no ArchitecturalDrivers.md or Drivers/*.md".into()));
        }
        let (corpus, issues) = Corpus::from_contents(&ws.live_contents()?, None);
        if let Some(issue) = issues.iter().find(|i| i.artifact == DRIVERS_FILE || i.artifact.starts_with("Drivers/")) {
            return Err(EngineError::NoDriversDocument(issue.to_string()));
        }
        if corpus.drivers.is_none() {
            return Err(EngineError::NoDriversDocument("the drivers document declares no drivers".into()));
        }
        ws.ensure_baseline()?;
        let mut session = Self {
            ws,
            prompts,
            state: SessionState {
                phase: Phase::ReviewDrivers,
                mode,
                plan: None,
                gate_log: Vec::new(),
                repair_count: 0,
                awaiting: None,
                pending_repair: None,
                outstanding: None,
                committing: None,
                next_seq: 1,
            },
            journal: Vec::new(),
        };
        session.emit(EventPayload::PhaseChanged {
            from: None,
            to: Phase::ReviewDrivers,
        })?;
        session.save()?;
        Ok(session)
    }

    /// Reopens the session stored in a workspace.
    pub fn open(ws: Workspace) -> Result<Self, EngineError> {
        let text = std::fs::read_to_string(ws.path(SESSION_FILE)).map_err(|_| EngineError::NoSession)?;
        let state: SessionState = serde_json::from_str(&text).map_err(|e| EngineError::Journal(e.to_string()))?;
        let journal = read_journal(&ws.path(EVENTS_FILE)).map_err(EngineError::Journal)?;
        let prompts = PromptLibrary::load(&ws.prompts_dir())?;
        let mut session = Self {
            ws,
            prompts,
            state,
            journal,
        };
        session.recover()?;
        Ok(session)
    }

    /// Reconciles the stored state with the journal and the store after an
    /// interruption.
    fn recover(&mut self) -> Result<(), EngineError> {
        // The marker is saved right before the commit, so the stored
        // sequence number is the one the commit was labelled with.
        let label = format!("gate:{}", self.state.next_seq);
        if let Some(last) = self.journal.last() {
            self.state.next_seq = self.state.next_seq.max(last.seq + 1);
        }
        let Some(decision) = self.state.committing.clone() else {
            return Ok(());
        };
        let landed = self
            .ws
            .snapshots()?
            .into_iter()
            .rev()
            .find(|s| s.gate.as_deref() == Some(label.as_str()));
        match landed {
            Some(snapshot) => self.complete_gate(decision, snapshot.id),
            None => {
                self.state.committing = None;
                self.save()
            }
        }
    }

    pub fn open_or_start(ws: Workspace, mode: DesignMode) -> Result<Self, EngineError> {
        if ws.path(SESSION_FILE).exists() {
            Self::open(ws)
        } else {
            Self::start(ws, mode)
        }
    }

    pub fn workspace(&self) -> &Workspace {
        &self.ws
    }

    pub fn workspace_mut(&mut self) -> &mut Workspace {
        &mut self.ws
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn phase(&self) -> Phase {
        self.state.phase
    }

    pub fn journal(&self) -> &[JournalEvent] {
        &self.journal
    }

    pub fn prompts(&self) -> &PromptLibrary {
        &self.prompts
    }

    pub fn is_awaiting_gate(&self) -> bool {
        self.state.awaiting.is_some()
    }

    pub fn summary(&self) -> SessionSummary {
        let awaiting = self.state.awaiting.as_ref();
        SessionSummary {
            phase: self.state.phase,
            iteration: self.state.phase.iteration(),
            step: self.state.phase.step(),
            awaiting_gate: awaiting.is_some(),
            repair_count: self.state.repair_count,
            pending_repair: self.state.pending_repair.clone(),
            planned_iterations: self.state.plan.as_ref().map_or(0, IterationPlan::len),
            proposes_finish: awaiting.is_some_and(|a| a.proposes_finish),
            problems: awaiting.map(|a| a.problems.clone()).unwrap_or_default(),
            events: self.journal.len() as u64,
        }
    }

    fn save(&self) -> Result<(), EngineError> {
        let text = serde_json::to_string_pretty(&self.state).expect("state serializes");
        crate::store::write_atomic(&self.ws.path(SESSION_FILE), text.as_bytes())?;
        Ok(())
    }

    fn emit(&mut self, payload: EventPayload) -> Result<(), EngineError> {
        let event = JournalEvent {
            seq: self.state.next_seq,
            timestamp: Utc::now(),
            phase: self.state.phase,
            payload_digest: payload.digest(),
            payload,
        };
        journal::append_event(&self.ws.path(EVENTS_FILE), &event).map_err(|e| EngineError::Journal(e.to_string()))?;
        self.state.next_seq += 1;
        self.journal.push(event);
        Ok(())
    }

    fn audit_options(&self) -> AuditOptions {
        AuditOptions::from_overrides(&self.ws.config().severity_overrides)
    }

    /// The prompt the engine would send next.
    pub fn next_action(&self) -> Result<PlannedAction, EngineError> {
        let phase = self.state.phase;
        if phase == Phase::Finished {
            return Err(EngineError::SessionFinished);
        }
        if self.state.awaiting.is_some() {
            return Err(EngineError::AwaitingGate(phase));
        }
        let mut context = self.context_spec(phase);
        if let Some(reason) = &self.state.pending_repair {
            return Ok(PlannedAction {
                template: TemplateId::Repair,
                bindings: bindings([("activity", phase.activity()), ("reason", reason.clone())]),
                context,
            });
        }
        let (template, b) = match phase {
            Phase::ReviewDrivers => (TemplateId::ReviewDrivers, Bindings::new()),
            Phase::DomainModel => match self.state.mode {
                DesignMode::Ddd => (TemplateId::DomainModelDdd, Bindings::new()),
                DesignMode::Plain => (TemplateId::DomainModelPlain, Bindings::new()),
            },
            Phase::IterationPlanning => (TemplateId::IterationPlan, Bindings::new()),
            Phase::Skeleton => (TemplateId::Skeleton, Bindings::new()),
            Phase::Iterating { iteration, step } if step == FIRST_STEP => {
                (TemplateId::IterateStart, bindings([("iteration", iteration.to_string())]))
            }
            Phase::Iterating { iteration, step } => (
                TemplateId::StepAdvance,
                bindings([
                    ("iteration", iteration.to_string()),
                    ("previous_step", (step - 1).to_string()),
                    ("step_heading", step_heading(step)),
                    ("step_text", self.prompts.step_text(step)),
                ]),
            ),
            Phase::Finished => unreachable!(),
        };
        if phase == Phase::ReviewDrivers {
            context.extra.retain(|p| p.as_str() == DRIVERS_FILE || p.as_str().starts_with("Drivers/"));
        }
        Ok(PlannedAction {
            template,
            bindings: b,
            context,
        })
    }

    fn context_spec(&self, phase: Phase) -> ContextSpec {
        let mut spec = ContextSpec::default();
        let live = self.ws.artifacts().unwrap_or_default();
        let has = |p: &str| live.iter().any(|a| a.as_str() == p);
        if let Phase::Iterating { iteration, step } = phase {
            let record = ArtifactPath::iteration(iteration);
            if live.contains(&record) {
                spec.iteration_record = Some(record);
            }
            let first = step_sections(step);
            spec.sections = first.to_vec();
            spec.sections.extend(SectionKind::ALL.into_iter().filter(|k| !first.contains(k)));
            if let Some(it) = self.state.plan.as_ref().and_then(|p| p.get(iteration)) {
                spec.focus = it.driver_refs.clone();
            }
        } else if phase == Phase::Skeleton && has(ARCHITECTURE_FILE) {
            spec.sections = SectionKind::ALL.to_vec();
        }
        for p in [PLAN_FILE, DOMAIN_MODEL_FILE] {
            if has(p) {
                spec.extra.push(ArtifactPath::parse(p).unwrap());
            }
        }
        spec.extra.extend(
            live.iter()
                .filter(|p| p.as_str() == DRIVERS_FILE || p.as_str().starts_with("Drivers/"))
                .cloned(),
        );
        spec
    }

    /// Builds the context bundle for an action from the committed workspace.
    pub fn assemble(&self, action: &PlannedAction) -> Result<ContextBundle, EngineError> {
        let contents = self.ws.live_contents()?;
        let (corpus, _) = Corpus::from_contents(&contents, None);
        let text = |p: &ArtifactPath| contents.get(p).cloned().unwrap_or_default();
        let mut source = ContextSource {
            process_description: Some(self.prompts.process_description.clone()),
            persona: self.prompts.persona.source.clone(),
            iteration_record: action
                .context
                .iteration_record
                .as_ref()
                .map(|p| (p.to_string(), text(p))),
            drivers: corpus.drivers.unwrap_or_default(),
            focus: action.context.focus.clone(),
            extra: action.context.extra.iter().map(|p| (p.to_string(), text(p))).collect(),
            ..ContextSource::default()
        };
        if let Some(arch) = contents.get(&ArtifactPath::parse(ARCHITECTURE_FILE).unwrap()) {
            let lines: Vec<&str> = arch.lines().collect();
            let spans = section_spans(arch);
            for kind in &action.context.sections {
                if let Some((_, start, end)) = spans.iter().find(|(k, _, _)| k == kind) {
                    let body = lines[start - 1..(end - 1).min(lines.len())].join("\n");
                    source.sections.push((format!("{ARCHITECTURE_FILE}#{}", kind.slug()), body));
                }
            }
        }
        Ok(assemble_context(&source, self.ws.config().context_budget)?)
    }

    fn system_text(&self, process: Option<&str>) -> String {
        let mut parts = vec![self.prompts.persona.source.trim_end().to_string()];
        if let Some(p) = process {
            parts.push(p.trim_end().to_string());
        }
        parts.push(self.prompts.edit_protocol.clone());
        parts.join("\n\n")
    }

    pub fn build_request(&self, action: &PlannedAction) -> Result<ModelRequest, EngineError> {
        let bundle = self.assemble(action)?;
        let user = self.prompts.render(action.template, &action.bindings)?;
        Ok(ModelRequest {
            system: self.system_text(bundle.process_description.as_deref()),
            user,
            attachments: bundle.items,
            model_id: self.ws.config().model_id.clone(),
            temperature: self.ws.config().temperature,
            metadata: BTreeMap::from([("phase".to_string(), self.state.phase.to_string())]),
        })
    }

    fn importing_plan(&self) -> bool {
        self.state.phase == Phase::IterationPlanning
            && self.state.pending_repair.is_none()
            && self.ws.config().import_plan
            && self.ws.path(PLAN_FILE).exists()
    }

    /// Runs one engine action: sends the next prompt and applies the
    /// response. With plan import enabled, the planning phase takes the
    /// existing plan instead of calling the model.
    pub fn advance(&mut self, gateway: &mut Gateway) -> Result<StepOutcome, EngineError> {
        let action = self.next_action()?;
        if self.importing_plan() {
            return self.import_plan();
        }
        let request = self.build_request(&action)?;
        self.emit(EventPayload::PromptSent {
            template: action.template,
            request_digest: digest(&request),
            prompt: request.user.clone(),
        })?;
        self.state.outstanding = Some(action.template);
        self.save()?;
        let response = gateway.complete(&request)?;
        self.apply_response(&response)
    }

    fn import_plan(&mut self) -> Result<StepOutcome, EngineError> {
        let text = std::fs::read_to_string(self.ws.path(PLAN_FILE)).map_err(|e| EngineError::InvalidPlan(e.to_string()))?;
        let plan = validate_plan(&text)?;
        let pending = PendingGate {
            staging: None,
            problems: Vec::new(),
            proposes_finish: false,
        };
        self.emit(EventPayload::AwaitingGate {
            staging: None,
            problems: vec!["plan imported from the workspace".into()],
        })?;
        self.state.awaiting = Some(pending);
        self.save()?;
        Ok(StepOutcome {
            phase: self.state.phase,
            artifact_edits: Vec::new(),
            commentary: String::new(),
            extracted: Extracted {
                plan: Some(plan),
                record: None,
            },
            audit: AuditReport::default(),
            problems: Vec::new(),
            needs_repair: false,
            staging: None,
        })
    }

    /// Stages the edits of a response, checks the step output and either
    /// waits for a gate or schedules an automatic repair.
    pub fn apply_response(&mut self, response: &ModelResponse) -> Result<StepOutcome, EngineError> {
        if self.state.outstanding.is_none() {
            return Err(EngineError::NoPromptSent);
        }
        if response.finish_reason != FinishReason::Stop {
            return Err(EngineError::UnusableResponse(response.finish_reason));
        }
        let phase = self.state.phase;
        let parsed = parse_response(response.text.as_deref().unwrap_or_default());
        let mut problems = Vec::new();
        let mut edits = Vec::new();
        for raw in parsed.edits {
            match ArtifactPath::parse(&raw.path) {
                Ok(path) => edits.push(ArtifactEdit {
                    path,
                    content: raw.content,
                }),
                Err(e) => problems.push(StepProblem::new(e.code(), format!("cannot write {}: the file is not a workspace artifact", raw.path), true)),
            }
        }
        if edits.is_empty() && phase_requires_edits(phase) {
            problems.push(StepProblem::new(
                "NO_EDITS_FOUND",
                "the response changes no file; return every created or changed file in a file block",
                true,
            ));
        }
        let staging = self.ws.stage_edits(&edits)?;
        let view = self.ws.staged_view(staging)?;
        let (mut corpus, issues) = Corpus::from_contents(&view, Some(self.journal.clone()));
        corpus.in_progress = Some(phase);
        for issue in issues.iter().filter(|i| edits.iter().any(|e| e.path.as_str() == i.artifact)) {
            problems.push(StepProblem::new("MALFORMED_STEP_OUTPUT", issue.to_string(), true));
        }
        let mut extracted = Extracted::default();
        match phase {
            Phase::ReviewDrivers if corpus.drivers.is_none() => problems.push(StepProblem::new(
                "MALFORMED_STEP_OUTPUT",
                "the drivers document no longer declares any driver",
                true,
            )),
            Phase::IterationPlanning => match view.get(&ArtifactPath::parse(PLAN_FILE).unwrap()) {
                Some(text) => match validate_plan(text) {
                    Ok(plan) => extracted.plan = Some(plan),
                    Err(e) => problems.push(StepProblem::new("MALFORMED_STEP_OUTPUT", e.to_string(), true)),
                },
                None => problems.push(StepProblem::new(
                    "MALFORMED_STEP_OUTPUT",
                    format!("no {PLAN_FILE} was written"),
                    true,
                )),
            },
            Phase::Iterating { iteration, .. } => {
                extracted.record = corpus.record(iteration).map(|r| r.record.clone());
            }
            _ => {}
        }
        let report = audit(&corpus, &AuditScope::Step(phase), &self.audit_options());
        for f in report.findings.iter().filter(|f| f.severity == Severity::Error) {
            let code = if matches!(f.rule_id, Rule::Step4Table | Rule::Step5Table) {
                "MALFORMED_STEP_OUTPUT".to_string()
            } else {
                f.rule_id.id().trim_start_matches("R-").to_string()
            };
            problems.push(StepProblem {
                code,
                message: format!("{} ({}): {}", f.rule_id, f.location, f.message),
                repairable: f.repairable,
            });
        }
        self.state.outstanding = None;
        self.emit(EventPayload::ResponseApplied {
            edits: edits.iter().map(|e| e.path.clone()).collect(),
            commentary: parsed.commentary.clone(),
        })?;
        self.emit(EventPayload::AuditCompleted {
            errors: report.count(Severity::Error),
            warnings: report.count(Severity::Warning),
            infos: report.count(Severity::Info),
            rules: report.evaluated.iter().map(|r| r.id().to_string()).collect(),
        })?;
        let needs_repair = problems.iter().any(|p| p.repairable) && self.state.repair_count < MAX_REPAIRS;
        if needs_repair {
            let reason = problems
                .iter()
                .filter(|p| p.repairable)
                .map(|p| format!("- {}: {}", p.code, p.message))
                .collect::<Vec<_>>()
                .join("\n");
            self.ws.discard(staging)?;
            self.state.repair_count += 1;
            self.state.pending_repair = Some(reason.clone());
            self.emit(EventPayload::GateRecorded {
                decision: GateKind::RejectWithComment,
                comment: Some(reason),
                automatic: true,
                snapshot: None,
                architecture_digest: None,
                decision_rows: None,
            })?;
        } else {
            let proposes_finish = matches!(phase, Phase::Iterating { iteration, step: LAST_STEP }
                if self.state.plan.as_ref().and_then(|p| p.after(iteration)).is_none());
            self.emit(EventPayload::AwaitingGate {
                staging: Some(staging),
                problems: problems.iter().map(|p| format!("{}: {}", p.code, p.message)).collect(),
            })?;
            self.state.awaiting = Some(PendingGate {
                staging: Some(staging),
                problems: problems.clone(),
                proposes_finish,
            });
        }
        self.save()?;
        Ok(StepOutcome {
            phase,
            artifact_edits: edits,
            commentary: parsed.commentary,
            extracted,
            audit: report,
            problems,
            needs_repair,
            staging: (!needs_repair).then_some(staging),
        })
    }

    /// Staged content of the step waiting for a gate.
    pub fn staged_edits(&self) -> Result<Vec<ArtifactEdit>, EngineError> {
        match self.state.awaiting.as_ref().and_then(|a| a.staging) {
            Some(id) => Ok(self.ws.staged(id)?),
            None => Ok(Vec::new()),
        }
    }

    /// Records the human decision on the step waiting for a gate.
    pub fn record_gate(&mut self, decision: GateDecision) -> Result<(), EngineError> {
        let Some(pending) = self.state.awaiting.clone() else {
            return Err(EngineError::NotAwaitingGate);
        };
        decision.validate()?;
        let phase = self.state.phase;
        if decision.kind == GateKind::Finish && phase.step() != Some(LAST_STEP) {
            return Err(EngineError::FinishNotLegalHere(phase));
        }
        if decision.kind == GateKind::RejectWithComment {
            if let Some(id) = pending.staging {
                self.ws.discard(id)?;
            }
            self.state.awaiting = None;
            self.state.pending_repair = decision.comment.clone();
            self.emit(EventPayload::GateRecorded {
                decision: decision.kind,
                comment: decision.comment.clone(),
                automatic: false,
                snapshot: None,
                architecture_digest: None,
                decision_rows: None,
            })?;
            self.state.gate_log.push(decision);
            self.save()?;
            return Ok(());
        }

        let staging = match pending.staging {
            Some(id) => id,
            None => self.ws.stage_edits(&[])?,
        };
        if !decision.edits.is_empty() {
            let mut merged: Vec<ArtifactEdit> = self
                .ws
                .staged(staging)?
                .into_iter()
                .filter(|e| !decision.edits.iter().any(|d| d.path == e.path))
                .collect();
            merged.extend(decision.edits.iter().cloned());
            self.ws.restage(staging, &merged)?;
        }
        let view = self.ws.staged_view(staging)?;
        if phase == Phase::IterationPlanning {
            match view.get(&ArtifactPath::parse(PLAN_FILE).unwrap()) {
                Some(t) => {
                    validate_plan(t)?;
                }
                None => return Err(EngineError::InvalidPlan(format!("no {PLAN_FILE} to approve"))),
            }
        }

        self.state.committing = Some(decision.clone());
        self.save()?;
        let snapshot = self.ws.commit(staging, format!("gate:{}", self.state.next_seq))?;
        self.complete_gate(decision, snapshot.id)
    }

    /// Everything an approving gate does once its snapshot exists. Parts
    /// already journaled before an interruption are not repeated.
    fn complete_gate(&mut self, decision: GateDecision, snapshot: SnapshotId) -> Result<(), EngineError> {
        let phase = self.state.phase;
        let recorded = self.journal.iter().any(|e| {
            matches!(e.payload, EventPayload::GateRecorded { snapshot: Some(s), .. } if s == snapshot)
        });
        if !recorded {
            let arch = self.ws.read(&ArtifactPath::parse(ARCHITECTURE_FILE).unwrap())?;
            let decision_rows = arch
                .as_deref()
                .map(|t| crate::doc::parse_architecture_document_lenient(t).value.decision_rows().len());
            self.emit(EventPayload::GateRecorded {
                decision: decision.kind,
                comment: decision.comment.clone(),
                automatic: false,
                snapshot: Some(snapshot),
                architecture_digest: arch.as_deref().map(content_digest),
                decision_rows,
            })?;
        }
        if phase >= Phase::IterationPlanning {
            let committed = self.ws.read(&ArtifactPath::parse(PLAN_FILE).unwrap())?;
            if let Some(plan) = committed.as_deref().and_then(|t| validate_plan(t).ok()) {
                self.state.plan = Some(plan);
            }
        }

        let next_iteration = match phase {
            Phase::Skeleton => self.state.plan.as_ref().and_then(|p| p.first()).map(|i| i.number),
            Phase::Iterating { iteration, .. } => self
                .state
                .plan
                .as_ref()
                .and_then(|p| p.after(iteration))
                .map(|i| i.number),
            _ => None,
        };
        let next = if decision.kind == GateKind::Finish {
            Phase::Finished
        } else {
            phase.after_approval(next_iteration)
        };
        let announced = matches!(
            self.journal.last().map(|e| &e.payload),
            Some(EventPayload::PhaseChanged { from: Some(f), to }) if *f == phase && *to == next
        );
        self.state.gate_log.push(decision);
        self.state.awaiting = None;
        self.state.pending_repair = None;
        self.state.repair_count = 0;
        self.state.committing = None;
        self.state.phase = next;
        if !announced {
            self.emit(EventPayload::PhaseChanged {
                from: Some(phase),
                to: next,
            })?;
        }
        self.save()?;
        Ok(())
    }

    /// Audits the committed workspace together with the journal.
    pub fn audit(&self) -> Result<AuditReport, EngineError> {
        let (mut corpus, _) = Corpus::from_workspace(&self.ws).map_err(|e| EngineError::Journal(e.to_string()))?;
        corpus.journal = Some(self.journal.clone());
        Ok(audit(&corpus, &AuditScope::All, &self.audit_options()))
    }
}

/// Result of a run without the design process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRun {
    pub mode: BaselineMode,
    pub prompt: String,
    pub request_digest: String,
    pub output: ArtifactPath,
    pub snapshot: SnapshotId,
}

/// Sends one of the no-process prompts and writes the resulting
/// architecture document.
pub fn run_baseline(ws: &Workspace, mode: BaselineMode, gateway: &mut Gateway) -> Result<BaselineRun, EngineError> {
    let prompts = PromptLibrary::load(&ws.prompts_dir())?;
    let contents = ws.live_contents()?;
    let mut attachments: Vec<crate::prompt::ContextItem> = contents
        .iter()
        .filter(|(p, _)| p.as_str() == DRIVERS_FILE || p.as_str().starts_with("Drivers/"))
        .map(|(p, c)| crate::prompt::ContextItem {
            name: p.to_string(),
            content: c.clone(),
            truncated: false,
        })
        .collect();
    if attachments.is_empty() {
        return Err(EngineError::NoDriversDocument("no ArchitecturalDrivers.md or Drivers/*.md".into()));
    }
    if let Some(template) = prompts.baseline_attachment(mode) {
        attachments.push(crate::prompt::ContextItem {
            name: ARCHITECTURE_FILE.into(),
            content: template.to_string(),
            truncated: false,
        });
    }
    let prompt = prompts.baseline_prompt(mode);
    let request = ModelRequest {
        system: format!("{}\n\n{}", prompts.persona.source.trim_end(), prompts.edit_protocol),
        user: prompt.clone(),
        attachments,
        model_id: ws.config().model_id.clone(),
        temperature: ws.config().temperature,
        metadata: BTreeMap::from([("baseline".to_string(), mode.to_string())]),
    };
    let response = gateway.complete(&request)?;
    if response.finish_reason != FinishReason::Stop {
        return Err(EngineError::UnusableResponse(response.finish_reason));
    }
    let text = response.text.unwrap_or_default();
    let parsed = parse_response(&text);
    let output = ArtifactPath::parse(ARCHITECTURE_FILE).unwrap();
    let content = parsed
        .edits
        .into_iter()
        .find(|e| e.path == ARCHITECTURE_FILE)
        .map(|e| e.content)
        .unwrap_or(text);
    ws.ensure_baseline()?;
    let staging = ws.stage_edits(&[ArtifactEdit {
        path: output.clone(),
        content,
    }])?;
    let snapshot = ws.commit(staging, format!("baseline:{mode}"))?;
    Ok(BaselineRun {
        mode,
        prompt,
        request_digest: digest(&request).0,
        output,
        snapshot: snapshot.id,
    })
}
