//! Local HTTP API over one session. Reads run concurrently; gate and
//! advance are serialized by the session's write lock.

use std::convert::Infallible;
use std::sync::{Arc, Mutex, RwLock};

use add_core::doc::ParseWarning;
use add_core::engine::{EngineError, EventKind, EventPayload, GateDecision, GateKind, JournalEvent, Phase, Session};
use add_core::gateway::Gateway;
use add_core::store::{ArtifactEdit, ArtifactPath, SnapshotId};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::{DateTime, Utc};
use futures::Stream;
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast;

use crate::{artifact_warnings, audit_workspace};

pub const DEFAULT_PORT: u16 = 7843;

pub struct AppState {
    session: RwLock<Session>,
    gateway: Mutex<Gateway>,
    /// Wakes event streams after a mutation; carries the newest sequence.
    notify: broadcast::Sender<u64>,
}

impl AppState {
    pub fn new(session: Session, gateway: Gateway) -> Arc<Self> {
        let (notify, _) = broadcast::channel(64);
        Arc::new(Self {
            session: RwLock::new(session),
            gateway: Mutex::new(gateway),
            notify,
        })
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/session", get(get_session))
        .route("/api/artifacts/{*name}", get(get_artifact))
        .route("/api/audit", get(get_audit))
        .route("/api/gate", post(post_gate))
        .route("/api/advance", post(post_advance))
        .route("/api/events", get(get_events))
        .with_state(state)
}

#[derive(Debug, Serialize)]
pub struct ApiError {
    pub code: String,
    pub message: String,
    #[serde(skip)]
    status: StatusCode,
}

impl ApiError {
    fn new(status: StatusCode, code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
            status,
        }
    }

    fn internal(message: impl ToString) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, "INTERNAL", message.to_string())
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let code = e.code();
        let status = match code {
            "AWAITING_GATE" | "NOT_AWAITING_GATE" | "SESSION_FINISHED" | "FINISH_NOT_LEGAL_HERE" => StatusCode::CONFLICT,
            "INVALID_GATE" | "INVALID_PLAN" | "ILLEGAL_PATH" => StatusCode::UNPROCESSABLE_ENTITY,
            "UNKNOWN_SNAPSHOT" | "UNKNOWN_STAGING" => StatusCode::NOT_FOUND,
            "TRANSPORT_ERROR" | "REPLAY_MISS" | "REPLAY_ORDER" | "UNUSABLE_RESPONSE" => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        Self::new(status, code, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

fn read_session(state: &AppState) -> std::sync::RwLockReadGuard<'_, Session> {
    state.session.read().unwrap_or_else(|e| e.into_inner())
}

async fn get_session(State(state): State<Arc<AppState>>) -> ApiResult<add_core::engine::SessionSummary> {
    Ok(Json(read_session(&state).summary()))
}

#[derive(Debug, Serialize)]
pub struct ArtifactView {
    pub name: String,
    pub content: Option<String>,
    /// Content waiting for the current gate, when it changes this artifact.
    pub staged: Option<String>,
    pub warnings: Vec<ParseWarning>,
    pub parse_error: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct DiffQuery {
    pub from: Option<u64>,
    pub to: Option<u64>,
}

async fn get_artifact(
    State(state): State<Arc<AppState>>,
    Path(name): Path<String>,
    Query(q): Query<DiffQuery>,
) -> Result<Response, ApiError> {
    let (name, diff) = match name.strip_suffix("/diff") {
        Some(n) => (n.to_string(), true),
        None => (name, false),
    };
    let path = ArtifactPath::parse(&name)
        .map_err(|e| ApiError::new(StatusCode::NOT_FOUND, e.code(), e.to_string()))?;
    let session = read_session(&state);
    let ws = session.workspace();
    if diff {
        let snapshots = ws.snapshots().map_err(|e| ApiError::from(EngineError::from(e)))?;
        let latest = snapshots.last().map_or(0, |s| s.id.0);
        let to = q.to.unwrap_or(latest);
        let from = q.from.unwrap_or(to.saturating_sub(1));
        let d = ws
            .diff(SnapshotId(from), SnapshotId(to), &path)
            .map_err(|e| ApiError::from(EngineError::from(e)))?;
        return Ok(Json(d).into_response());
    }
    let content = ws.read(&path).map_err(|e| ApiError::from(EngineError::from(e)))?;
    let staged = session
        .staged_edits()
        .map_err(ApiError::from)?
        .into_iter()
        .find(|e| e.path == path)
        .map(|e| e.content);
    if content.is_none() && staged.is_none() {
        return Err(ApiError::new(StatusCode::NOT_FOUND, "UNKNOWN_ARTIFACT", format!("{name} does not exist")));
    }
    let (warnings, parse_error) = match content.as_deref().map(|t| artifact_warnings(&path, t)) {
        Some(Ok(w)) => (w, None),
        Some(Err(e)) => (Vec::new(), Some(e)),
        None => (Vec::new(), None),
    };
    Ok(Json(ArtifactView {
        name,
        content,
        staged,
        warnings,
        parse_error,
    })
    .into_response())
}

async fn get_audit(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let session = read_session(&state);
    let out = audit_workspace(session.workspace())
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "LOAD_FAILED", e.to_string()))?;
    Ok(Json(out).into_response())
}

#[derive(Debug, Deserialize)]
pub struct GateRequest {
    pub kind: GateKind,
    #[serde(default)]
    pub comment: Option<String>,
    #[serde(default)]
    pub edits: Vec<ArtifactEdit>,
}

/// Runs a mutation on a blocking thread under the write lock and wakes
/// event streams afterwards.
async fn mutate<T: Send + 'static>(
    state: Arc<AppState>,
    f: impl FnOnce(&mut Session, &mut Gateway) -> Result<T, EngineError> + Send + 'static,
) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(move || {
        let mut session = state.session.write().unwrap_or_else(|e| e.into_inner());
        let mut gateway = state.gateway.lock().unwrap_or_else(|e| e.into_inner());
        let out = f(&mut session, &mut gateway);
        let last = session.journal().last().map_or(0, |e| e.seq);
        let _ = state.notify.send(last);
        out
    })
    .await
    .map_err(ApiError::internal)?
    .map_err(ApiError::from)
}

async fn post_gate(
    State(state): State<Arc<AppState>>,
    Json(req): Json<GateRequest>,
) -> ApiResult<add_core::engine::SessionSummary> {
    let decision = GateDecision {
        kind: req.kind,
        comment: req.comment,
        edits: req.edits,
        timestamp: Utc::now(),
    };
    let summary = mutate(state, move |s, _| {
        s.record_gate(decision)?;
        Ok(s.summary())
    })
    .await?;
    Ok(Json(summary))
}

async fn post_advance(State(state): State<Arc<AppState>>) -> Result<Response, ApiError> {
    let outcome = mutate(state, |s, gw| s.advance(gw)).await?;
    Ok(Json(outcome).into_response())
}

/// One journal event as the console sees it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiEvent {
    pub seq: u64,
    pub kind: EventKind,
    pub phase: Phase,
    pub timestamp: DateTime<Utc>,
    pub payload_digest: String,
    pub payload: EventPayload,
}

impl From<&JournalEvent> for ApiEvent {
    fn from(e: &JournalEvent) -> Self {
        Self {
            seq: e.seq,
            kind: e.kind(),
            phase: e.phase,
            timestamp: e.timestamp,
            payload_digest: e.payload_digest.clone(),
            payload: e.payload.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
pub struct EventsQuery {
    /// First sequence number to send; 1 replays the whole journal.
    #[serde(default)]
    pub from: Option<u64>,
    /// Keep the stream open for new events (default) or end after the
    /// backlog.
    #[serde(default)]
    pub follow: Option<bool>,
}

fn events_since(state: &AppState, from: u64) -> Vec<ApiEvent> {
    read_session(state)
        .journal()
        .iter()
        .filter(|e| e.seq >= from)
        .map(ApiEvent::from)
        .collect()
}

fn to_sse(e: &ApiEvent) -> Event {
    Event::default()
        .id(e.seq.to_string())
        .event(e.kind.as_str())
        .json_data(e)
        .expect("events serialize")
}

async fn get_events(
    State(state): State<Arc<AppState>>,
    Query(q): Query<EventsQuery>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let from = q.from.unwrap_or(1).max(1);
    let follow = q.follow.unwrap_or(true);
    // Subscribing before reading the backlog means no event can fall
    // between the two.
    let rx = state.notify.subscribe();
    let stream = futures::stream::unfold(
        (state, rx, from, Vec::<ApiEvent>::new().into_iter(), false),
        move |(state, mut rx, next, mut pending, mut drained)| async move {
            loop {
                if let Some(e) = pending.next() {
                    let ev = to_sse(&e);
                    return Some((Ok(ev), (state, rx, e.seq + 1, pending, drained)));
                }
                let fresh = events_since(&state, next);
                if !fresh.is_empty() {
                    pending = fresh.into_iter();
                    continue;
                }
                if drained && !follow {
                    return None;
                }
                if !follow {
                    drained = true;
                    continue;
                }
                match rx.recv().await {
                    Ok(_) | Err(broadcast::error::RecvError::Lagged(_)) => {}
                    Err(broadcast::error::RecvError::Closed) => return None,
                }
            }
        },
    );
    Sse::new(stream).keep_alive(KeepAlive::default())
}
