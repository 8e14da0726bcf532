//! JSON/HTTP service over explanation sessions and property checks.
//!
//! Sessions live in an in-memory table keyed by random ids. Queries on one
//! session are serialized by a per-session lock; distinct sessions and
//! checks proceed concurrently.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::{Mutex, RwLock};
use uuid::Uuid;
use xnmr_core::scenario::ScenarioInfo;
use xnmr_core::session::{Commitment, SessionSummary};
use xnmr_core::{
    CheckRequest, EntailmentKind, Level, Point, Property, Scenario, ScenarioError, ScenarioFile, SessionError,
    SessionState,
};

/// A scenario given by bundled name or inline. Filesystem paths are not
/// accepted over the network.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Name(String),
    Inline(Box<ScenarioFile>),
}

impl ScenarioRef {
    fn load(&self, entailment: Option<EntailmentKind>) -> Result<Scenario, ApiError> {
        let scenario = match self {
            ScenarioRef::Name(name) => Scenario::bundled(name)
                .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("unknown scenario `{name}`")))?
                .map_err(ApiError::from)?,
            ScenarioRef::Inline(file) => Scenario::from_file((**file).clone())?,
        };
        Ok(match entailment {
            Some(kind) => scenario.with_entailment(kind),
            None => scenario,
        })
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub scenario: ScenarioRef,
    #[serde(default)]
    pub entailment: Option<EntailmentKind>,
}

#[derive(Debug, Serialize)]
pub struct Created {
    pub session_id: Uuid,
    pub scenario: ScenarioInfo,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryBody {
    pub x: Point,
}

#[derive(Debug, Serialize)]
pub struct SessionView {
    pub session_id: Uuid,
    #[serde(flatten)]
    pub summary: SessionSummary,
    pub reports: Vec<xnmr_core::StepReport>,
}

#[derive(Debug, Serialize)]
pub struct CommitmentsView {
    pub session_id: Uuid,
    pub step: usize,
    pub commitments: Vec<Commitment>,
}

fn default_bound() -> usize {
    2
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecksBody {
    pub scenario: ScenarioRef,
    #[serde(default)]
    pub entailment: Option<EntailmentKind>,
    pub property: Property,
    #[serde(default)]
    pub level: Option<Level>,
    #[serde(default = "default_bound")]
    pub bound: usize,
    #[serde(default)]
    pub points: Option<Vec<Point>>,
    #[serde(default)]
    pub unrestricted: bool,
    #[serde(default)]
    pub samples: Option<usize>,
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ChecksBody {
    fn request(&self) -> CheckRequest {
        CheckRequest {
            property: self.property,
            level: self.level,
            bound: self.bound,
            points: self.points.clone(),
            unrestricted: self.unrestricted,
            samples: self.samples,
            seed: self.seed,
            expect: None,
        }
    }
}

/// Error responses carry `{"error": message}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError {
            status,
            message: message.into(),
        }
    }
}

impl From<ScenarioError> for ApiError {
    fn from(e: ScenarioError) -> Self {
        let status = if e.is_validation() {
            StatusCode::UNPROCESSABLE_ENTITY
        } else {
            StatusCode::INTERNAL_SERVER_ERROR
        };
        ApiError::new(status, e.to_string())
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(e.status(), e.body_text())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

type Shared<T> = Arc<Mutex<T>>;

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<Uuid, Shared<SessionState>>>>,
}

impl AppState {
    async fn session(&self, id: &str) -> Result<(Uuid, Shared<SessionState>), ApiError> {
        let not_found = || ApiError::new(StatusCode::NOT_FOUND, format!("no session {id}"));
        let id = Uuid::parse_str(id).map_err(|_| not_found())?;
        let session = self
            .sessions
            .read()
            .await
            .get(&id)
            .cloned()
            .ok_or_else(not_found)?;
        Ok((id, session))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/query", post(query))
        .route("/sessions/{id}/transcript", get(transcript))
        .route("/sessions/{id}/commitments", get(commitments))
        .route("/checks", post(checks))
        .route("/scenarios", get(scenarios))
        .with_state(state)
}

pub fn app() -> Router {
    router(AppState::default())
}

/// Serves until the process is stopped.
pub async fn serve(addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app()).await
}

async fn create_session(
    State(state): State<AppState>,
    body: Result<Json<CreateSession>, JsonRejection>,
) -> Result<(StatusCode, Json<Created>), ApiError> {
    let Json(body) = body?;
    let scenario = Arc::new(body.scenario.load(body.entailment)?);
    let info = scenario.info();
    let id = Uuid::new_v4();
    let session = Arc::new(Mutex::new(SessionState::start(scenario)));
    state.sessions.write().await.insert(id, session);
    Ok((
        StatusCode::CREATED,
        Json(Created {
            session_id: id,
            scenario: info,
        }),
    ))
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<Json<SessionView>, ApiError> {
    let (id, session) = state.session(&id).await?;
    let session = session.lock().await;
    Ok(Json(SessionView {
        session_id: id,
        summary: session.summary(),
        reports: session.reports().to_vec(),
    }))
}

async fn query(
    State(state): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<QueryBody>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let (_, session) = state.session(&id).await?;
    let mut session = session.lock().await;
    let report = session.query(&body.x)?;
    Ok(Json(report).into_response())
}

async fn transcript(State(state): State<AppState>, Path(id): Path<String>) -> Result<Response, ApiError> {
    let (_, session) = state.session(&id).await?;
    let text = session.lock().await.transcript();
    Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], text).into_response())
}

async fn commitments(
    State(state): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<CommitmentsView>, ApiError> {
    let (id, session) = state.session(&id).await?;
    let session = session.lock().await;
    Ok(Json(CommitmentsView {
        session_id: id,
        step: session.step(),
        commitments: session.commitment_list(),
    }))
}

async fn checks(body: Result<Json<ChecksBody>, JsonRejection>) -> Result<Response, ApiError> {
    let Json(body) = body?;
    let scenario = body.scenario.load(body.entailment)?;
    let request = body.request();
    let report = tokio::task::spawn_blocking(move || scenario.run_check(&request))
        .await
        .map_err(|e| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))??;
    Ok(Json(report).into_response())
}

async fn scenarios() -> Result<Json<Vec<ScenarioInfo>>, ApiError> {
    Scenario::bundled_names()
        .into_iter()
        .map(|name| Ok(Scenario::bundled(name).expect("listed").map_err(ApiError::from)?.info()))
        .collect::<Result<Vec<_>, _>>()
        .map(Json)
}
