//! Routes and handlers.

use std::collections::HashMap;
use std::convert::Infallible;
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::rejection::{JsonRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use novobo_core::agents::ChunkSink;
use novobo_core::knowledge::TaxonomyKind;
use novobo_core::session::store::SessionStore;
use novobo_core::session::{Rating, Session, SessionError, SkeletalRecording};
use novobo_core::{Engine, ScenarioCatalog, TeachingScenario};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::{mpsc, oneshot, Mutex};

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Stub,
    Live,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Stub => "stub",
            Mode::Live => "live",
        }
    }
}

/// One session: the committed document plus a lock that queues mutations.
struct Slot {
    committed: RwLock<Session>,
    writer: Mutex<()>,
}

impl Slot {
    fn new(session: Session) -> Arc<Self> {
        Arc::new(Self {
            committed: RwLock::new(session),
            writer: Mutex::new(()),
        })
    }

    fn snapshot(&self) -> Session {
        self.committed.read().unwrap_or_else(|p| p.into_inner()).clone()
    }
}

pub struct AppState {
    engine: Engine,
    catalog: ScenarioCatalog,
    store: SessionStore,
    mode: Mode,
    sessions: RwLock<HashMap<String, Arc<Slot>>>,
}

impl AppState {
    pub fn new(engine: Engine, catalog: ScenarioCatalog, store: SessionStore, mode: Mode, sessions: Vec<Session>) -> Self {
        let sessions = sessions.into_iter().map(|s| (s.id.clone(), Slot::new(s))).collect();
        Self {
            engine,
            catalog,
            store,
            mode,
            sessions: RwLock::new(sessions),
        }
    }

    fn slot(&self, id: &str) -> Result<Arc<Slot>, ApiError> {
        self.sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("SessionNotFound", format!("no session `{id}`")))
    }

    /// Rewrites every snapshot. Used on shutdown.
    pub async fn flush(&self) -> Result<usize, novobo_core::session::store::StoreError> {
        let slots: Vec<Arc<Slot>> = self
            .sessions
            .read()
            .unwrap_or_else(|p| p.into_inner())
            .values()
            .cloned()
            .collect();
        for slot in &slots {
            let _queued = slot.writer.lock().await;
            self.store.write_snapshot(&slot.snapshot())?;
        }
        Ok(slots.len())
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/healthz", get(health))
        .route("/scenarios", get(scenarios))
        .route("/knowledge/{kind}/{key}", get(knowledge))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/scenario", post(post_scenario))
        .route("/sessions/{id}/ratings", post(post_ratings))
        .route("/sessions/{id}/demonstration", post(post_demonstration))
        .route("/sessions/{id}/explanation", post(post_explanation))
        .fallback(|| async { ApiError::not_found("NotFound", "no such route") })
        .method_not_allowed_fallback(|| async {
            ApiError::new(StatusCode::METHOD_NOT_ALLOWED, "MethodNotAllowed", "method not allowed on this route")
        })
        .with_state(state)
}

async fn health(State(state): State<Arc<AppState>>) -> Json<Value> {
    let kb = state.engine.kb();
    Json(json!({
        "status": "ok",
        "gesture_types": kb.gesture_types().count(),
        "intentions": kb.intentions().count(),
        "exemplars": kb.exemplars().len(),
        "scenarios": state.catalog.len(),
        "mode": state.mode.as_str(),
    }))
}

async fn scenarios(State(state): State<Arc<AppState>>) -> Json<Value> {
    Json(json!({ "scenarios": state.catalog.entries }))
}

async fn knowledge(
    State(state): State<Arc<AppState>>,
    Path((kind, key)): Path<(String, String)>,
) -> Result<Json<Value>, ApiError> {
    let kind: TaxonomyKind = kind
        .parse()
        .map_err(|_| ApiError::not_found("UnknownKind", format!("no taxonomy `{kind}`")))?;
    let entry = state
        .engine
        .kb()
        .lookup_definition(kind, &key)
        .map_err(|e| ApiError::not_found("NotFound", e.to_string()))?;
    Ok(Json(serde_json::to_value(entry).expect("definition serializes")))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct CreateSession {
    #[serde(default)]
    group_label: Option<String>,
}

async fn create_session(State(state): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let request: CreateSession = if body.iter().all(u8::is_ascii_whitespace) {
        CreateSession::default()
    } else {
        serde_json::from_slice(&body).map_err(|e| ApiError::new(StatusCode::BAD_REQUEST, "ParseError", e.to_string()))?
    };
    let session = Session::new(request.group_label.filter(|l| !l.trim().is_empty()));
    state.store.save(&session, "create")?;
    let body = json!({ "id": session.id, "session": session });
    state
        .sessions
        .write()
        .unwrap_or_else(|p| p.into_inner())
        .insert(session.id.clone(), Slot::new(session));
    Ok((StatusCode::CREATED, Json(body)).into_response())
}

async fn get_session(State(state): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Session>, ApiError> {
    Ok(Json(state.slot(&id)?.snapshot()))
}

#[derive(Debug, Default, Deserialize)]
struct StreamQuery {
    #[serde(default)]
    stream: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CustomScenario {
    #[serde(default)]
    subject: String,
    #[serde(default)]
    grade_level: String,
    #[serde(default)]
    lesson_topic: String,
    scenario_text: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioRequest {
    #[serde(default)]
    catalog_id: Option<String>,
    #[serde(default)]
    scenario: Option<CustomScenario>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatingsRequest {
    ratings: Vec<Rating>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplanationRequest {
    text: String,
}

enum Op {
    Scenario(TeachingScenario),
    Ratings(Vec<Rating>),
    Demonstration(SkeletalRecording),
    Explanation(String),
}

impl Op {
    fn name(&self) -> &'static str {
        match self {
            Op::Scenario(_) => "submit_scenario",
            Op::Ratings(_) => "submit_commentary",
            Op::Demonstration(_) => "attach_demonstration",
            Op::Explanation(_) => "submit_explanation",
        }
    }
}

/// Runs `op` against a copy of the session. Returns the response body and
/// whether the copy should be committed.
async fn apply(engine: &Engine, session: &mut Session, op: Op, sink: Option<&ChunkSink>) -> Result<(Value, bool), SessionError> {
    match op {
        Op::Scenario(scenario) => match engine.submit_scenario(session, scenario, sink).await {
            Ok((proposals, message)) => Ok((
                json!({
                    "stage": session.stage,
                    "round_index": session.rounds.len() - 1,
                    "proposals": proposals,
                    "message": message,
                }),
                true,
            )),
            Err(SessionError::NoGestureNeeded { message }) => Ok((
                json!({
                    "stage": session.stage,
                    "round_index": null,
                    "proposals": [],
                    "message": message,
                    "no_gesture_needed": true,
                }),
                false,
            )),
            Err(e) => Err(e),
        },
        Op::Ratings(ratings) => {
            let message = engine.submit_commentary(session, ratings, sink).await?;
            Ok((json!({ "stage": session.stage, "message": message }), true))
        }
        Op::Demonstration(recording) => {
            let message = engine.attach_demonstration(session, recording, sink).await?;
            Ok((json!({ "stage": session.stage, "message": message }), true))
        }
        Op::Explanation(text) => {
            let (summary, message) = engine.submit_explanation(session, &text, sink).await?;
            Ok((
                json!({ "stage": session.stage, "summary": summary, "message": message }),
                true,
            ))
        }
    }
}

async fn run(state: &AppState, slot: &Slot, op: Op, sink: Option<&ChunkSink>) -> Result<Value, ApiError> {
    let _queued = slot.writer.lock().await;
    let mut working = slot.snapshot();
    let name = op.name();
    let (body, commit) = apply(&state.engine, &mut working, op, sink).await?;
    if commit {
        state.store.save(&working, name)?;
        *slot.committed.write().unwrap_or_else(|p| p.into_inner()) = working;
    }
    Ok(body)
}

fn sse_event(name: &str, data: &impl serde::Serialize) -> Event {
    Event::default()
        .event(name)
        .json_data(data)
        .expect("event payload serializes")
}

fn streamed(state: Arc<AppState>, slot: Arc<Slot>, op: Op) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let (tx, rx) = mpsc::unbounded_channel::<String>();
    let (done_tx, done_rx) = oneshot::channel();
    tokio::spawn(async move {
        let result = run(&state, &slot, op, Some(&tx)).await;
        drop(tx);
        let _ = done_tx.send(result);
    });
    let chunks = stream::unfold(rx, |mut rx| async move {
        let chunk = rx.recv().await?;
        Some((Ok(sse_event("chunk", &json!({ "text": chunk }))), rx))
    });
    let last = stream::once(async move {
        Ok(match done_rx.await {
            Ok(Ok(body)) => sse_event("done", &body),
            Ok(Err(e)) => sse_event("error", &e.body),
            Err(_) => sse_event(
                "error",
                &json!({"code": "Internal", "message": "operation aborted"}),
            ),
        })
    });
    Sse::new(chunks.chain(last))
}

async fn dispatch(state: Arc<AppState>, id: &str, query: StreamQuery, op: Op) -> Result<Response, ApiError> {
    let slot = state.slot(id)?;
    if query.stream {
        return Ok(streamed(state, slot, op).into_response());
    }
    let body = run(&state, &slot, op, None).await?;
    Ok(Json(body).into_response())
}

async fn post_scenario(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<StreamQuery>, QueryRejection>,
    body: Result<Json<ScenarioRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(request) = body?;
    let scenario = match (request.catalog_id, request.scenario) {
        (Some(cid), None) => state
            .catalog
            .get(&cid)
            .cloned()
            .ok_or_else(|| ApiError::not_found("ScenarioNotFound", format!("no catalog scenario `{cid}`")))?,
        (None, Some(c)) => TeachingScenario {
            subject: c.subject,
            grade_level: c.grade_level,
            lesson_topic: c.lesson_topic,
            ..TeachingScenario::custom(c.scenario_text)
        },
        _ => {
            return Err(ApiError::new(
                StatusCode::BAD_REQUEST,
                "ParseError",
                "provide exactly one of `catalog_id` or `scenario`",
            ))
        }
    };
    dispatch(state, &id, query?.0, Op::Scenario(scenario)).await
}

async fn post_ratings(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<StreamQuery>, QueryRejection>,
    body: Result<Json<RatingsRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(request) = body?;
    dispatch(state, &id, query?.0, Op::Ratings(request.ratings)).await
}

async fn post_demonstration(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<StreamQuery>, QueryRejection>,
    body: Result<Json<SkeletalRecording>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(recording) = body?;
    dispatch(state, &id, query?.0, Op::Demonstration(recording)).await
}

async fn post_explanation(
    State(state): State<Arc<AppState>>,
    Path(id): Path<String>,
    query: Result<Query<StreamQuery>, QueryRejection>,
    body: Result<Json<ExplanationRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(request) = body?;
    dispatch(state, &id, query?.0, Op::Explanation(request.text)).await
}
