//! HTTP front end for the generate / refine / export workflow.
//!
//! Sessions are persisted as one JSON file each under the data directory.
//! Operations on one session are serialized by a per-session lock; provider
//! calls run on the blocking pool.

mod openapi;
pub mod store;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;
use tower_http::cors::{AllowOrigin, Any, CorsLayer};

use crate::diagnostics::{Diagnostic, Severity};
use crate::dsl::render;
use crate::llm::{
    self, build_provider, optimize_output, ChatProvider, FailureReason, GenerationConfig, GenerationSession,
    HttpProvider, LlmError, ProviderConfig, ProviderError, ProviderKind, SessionStatus,
};
use crate::powl::{ModelJson, Node};
use crate::translation::{to_bpmn, BpmnGraph};

pub use crate::translation::ExportFormat;

pub use store::{ProviderChoice, SessionRecord, SessionStore, StoreError, Version, VersionOrigin};

/// Header carrying a per-request API key. It is never persisted.
pub const API_KEY_HEADER: &str = "x-api-key";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub default_provider: ProviderKind,
    pub default_model: String,
    /// Reply script used when a session asks for the mock provider.
    pub mock_script: Option<PathBuf>,
    pub generation: GenerationConfig,
    pub output_retry_limit: u32,
    /// Allowed browser origin; any origin when unset.
    pub cors_origin: Option<String>,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            data_dir: data_dir.into(),
            default_provider: ProviderKind::OpenAi,
            default_model: "gpt-4o".into(),
            mock_script: None,
            generation: GenerationConfig::default(),
            output_retry_limit: 5,
            cors_origin: None,
        }
    }
}

pub type ProviderFactory =
    Arc<dyn Fn(&ProviderChoice, Option<String>) -> Result<Arc<dyn ChatProvider>, ProviderError> + Send + Sync>;

/// Builds HTTP providers from the choice, or the scripted provider for `mock`.
pub fn default_factory(mock_script: Option<PathBuf>) -> ProviderFactory {
    Arc::new(move |choice: &ProviderChoice, key: Option<String>| {
        let mut cfg = ProviderConfig::new(choice.provider, choice.model_name.clone());
        if choice.provider == ProviderKind::Mock {
            cfg.mock_script = mock_script.clone();
            return build_provider(&cfg).map(Arc::from);
        }
        cfg.check()?;
        Ok(match key {
            Some(k) => Arc::new(HttpProvider::with_key(cfg, k)) as Arc<dyn ChatProvider>,
            None => Arc::new(HttpProvider::new(cfg)),
        })
    })
}

#[derive(Clone)]
pub struct AppState {
    inner: Arc<Inner>,
}

struct Inner {
    store: SessionStore,
    config: ServiceConfig,
    factory: ProviderFactory,
}

impl AppState {
    pub fn new(config: ServiceConfig, factory: ProviderFactory) -> std::io::Result<Self> {
        let store = SessionStore::open(&config.data_dir)?;
        Ok(AppState { inner: Arc::new(Inner { store, config, factory }) })
    }

    pub fn store(&self) -> &SessionStore {
        &self.inner.store
    }
}

pub fn router(state: AppState) -> Router {
    let cors = match &state.inner.config.cors_origin {
        Some(origin) => match HeaderValue::from_str(origin) {
            Ok(v) => CorsLayer::new().allow_origin(AllowOrigin::exact(v)),
            Err(_) => CorsLayer::new(),
        },
        None => CorsLayer::new().allow_origin(Any),
    }
    .allow_methods(Any)
    .allow_headers(Any);
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/feedback", post(feedback))
        .route("/sessions/{id}/optimize", post(optimize))
        .route("/sessions/{id}/export", get(export))
        .route("/spec", get(spec))
        .layer(cors)
        .with_state(state)
}

pub async fn serve(config: ServiceConfig, addr: SocketAddr) -> std::io::Result<()> {
    let factory = default_factory(config.mock_script.clone());
    let app = router(AppState::new(config, factory)?);
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, app).await
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
    session_id: Option<String>,
    diagnostics: Vec<Diagnostic>,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        ApiError { status, message: message.into(), session_id: None, diagnostics: Vec::new() }
    }

    fn not_found() -> Self {
        Self::new(StatusCode::NOT_FOUND, "session not found")
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound => ApiError::not_found(),
            e => ApiError::internal(e),
        }
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, e.body_text())
    }
}

impl From<ProviderError> for ApiError {
    fn from(e: ProviderError) -> Self {
        match e {
            ProviderError::Config(_) => ApiError::new(StatusCode::BAD_REQUEST, e.to_string()),
            e => ApiError::new(StatusCode::BAD_GATEWAY, e.to_string()),
        }
    }
}

impl From<LlmError> for ApiError {
    fn from(e: LlmError) -> Self {
        match e {
            LlmError::EmptyDescription | LlmError::EmptyFeedback => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
            }
            LlmError::NotSucceeded => ApiError::new(StatusCode::CONFLICT, e.to_string()),
            LlmError::Provider(p) => p.into(),
            LlmError::Diagnostic(d) => {
                ApiError { diagnostics: vec![d.clone()], ..ApiError::new(StatusCode::CONFLICT, d.message) }
            }
            e => ApiError::internal(e),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let mut body = json!({ "error": self.message, "status": "error" });
        if let Some(id) = self.session_id {
            body["session_id"] = json!(id);
        }
        if !self.diagnostics.is_empty() {
            body["diagnostics"] = json!(self.diagnostics);
        }
        (self.status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Model payload for clients: the tree, the BPMN graph to draw, and the script.
#[derive(Debug, Clone, Serialize)]
pub struct ModelView {
    pub tree: ModelJson,
    pub graph: BpmnGraph,
    pub script: String,
}

impl ModelView {
    fn of(model: &Node) -> ApiResult<Self> {
        Ok(ModelView {
            tree: ModelJson::from_node(model),
            graph: to_bpmn(model).map_err(ApiError::internal)?,
            script: render(model),
        })
    }
}

#[derive(Debug, Serialize)]
pub struct ModelResponse {
    pub session_id: String,
    pub version: u32,
    pub status: SessionStatus,
    pub model: ModelView,
    pub diagnostics: Vec<Diagnostic>,
    /// Attempts the latest round took.
    pub iterations: u32,
}

#[derive(Debug, Deserialize)]
pub struct CreateRequest {
    pub description: String,
    #[serde(default)]
    pub provider: Option<ProviderKind>,
    #[serde(default)]
    pub model_name: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct FeedbackRequest {
    pub text: String,
}

fn api_key(headers: &HeaderMap) -> Option<String> {
    headers
        .get(API_KEY_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
}

fn last_round_diagnostics(session: &GenerationSession) -> Vec<Diagnostic> {
    session.iterations.last().map(|r| r.diagnostics.clone()).unwrap_or_default()
}

/// Maps a session that ended without a model to the matching error.
fn failed_session(session: &GenerationSession, id: Option<String>) -> ApiError {
    match &session.failure {
        Some(FailureReason::Provider(detail)) => ApiError::new(StatusCode::BAD_GATEWAY, detail.clone()),
        _ => ApiError {
            session_id: id,
            diagnostics: last_round_diagnostics(session)
                .into_iter()
                .filter(|d| d.severity != Severity::Warning)
                .collect(),
            ..ApiError::new(StatusCode::CONFLICT, "no acceptable model within the attempt budget")
        },
    }
}

fn model_response(rec: &SessionRecord) -> ApiResult<ModelResponse> {
    let model = rec.session.model.as_ref().ok_or_else(|| ApiError::internal("session has no model"))?;
    Ok(ModelResponse {
        session_id: rec.id.clone(),
        version: rec.versions.last().map_or(0, |v| v.version),
        status: rec.session.status,
        model: ModelView::of(model)?,
        diagnostics: last_round_diagnostics(&rec.session),
        iterations: rec.session.last_round_iterations(),
    })
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> ApiResult<T> {
    tokio::task::spawn_blocking(f).await.map_err(ApiError::internal)
}

async fn create_session(
    State(state): State<AppState>,
    headers: HeaderMap,
    body: Result<Json<CreateRequest>, JsonRejection>,
) -> ApiResult<Json<ModelResponse>> {
    let Json(req) = body?;
    if req.description.trim().is_empty() {
        return Err(LlmError::EmptyDescription.into());
    }
    let cfg = &state.inner.config;
    let choice = ProviderChoice {
        provider: req.provider.unwrap_or(cfg.default_provider),
        model_name: req.model_name.filter(|m| !m.trim().is_empty()).unwrap_or_else(|| cfg.default_model.clone()),
    };
    let provider = (state.inner.factory)(&choice, api_key(&headers))?;
    let gen_cfg = cfg.generation.clone();
    let description = req.description;
    let session = blocking(move || llm::generate(&description, provider.as_ref(), &gen_cfg)).await??;

    if matches!(session.failure, Some(FailureReason::Provider(_))) {
        return Err(failed_session(&session, None));
    }
    let id = uuid::Uuid::new_v4().to_string();
    let now = store::now_ms();
    let mut rec = SessionRecord { id: id.clone(), provider: choice, created_at: now, updated_at: now, session, versions: Vec::new() };
    let iterations = rec.session.last_round_iterations();
    rec.push_version(VersionOrigin::Generate, iterations, None);
    let lock = state.store().lock(&id);
    let _guard = lock.lock().await;
    state.store().save(&rec)?;
    if !rec.session.succeeded() {
        return Err(failed_session(&rec.session, Some(id)));
    }
    Ok(Json(model_response(&rec)?))
}

async fn feedback(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Result<Json<FeedbackRequest>, JsonRejection>,
) -> ApiResult<Json<ModelResponse>> {
    let lock = state.store().lock(&id);
    let _guard = lock.lock().await;
    let mut rec = state.store().load(&id)?;
    let Json(req) = body?;
    if req.text.trim().is_empty() {
        return Err(LlmError::EmptyFeedback.into());
    }
    rec.session.model_or_err()?;
    let provider = (state.inner.factory)(&rec.provider, api_key(&headers))?;
    let gen_cfg = state.inner.config.generation.clone();
    let mut session = rec.session.clone();
    let text = req.text.clone();
    let session = blocking(move || {
        llm::refine(&mut session, &text, provider.as_ref(), &gen_cfg).map(|()| session)
    })
    .await??;
    // A failed round is reported but not committed; the stored session keeps
    // its last accepted version.
    if !session.succeeded() {
        return Err(failed_session(&session, Some(id)));
    }
    rec.session = session;
    let iterations = rec.session.last_round_iterations();
    rec.push_version(VersionOrigin::Feedback, iterations, Some(req.text));
    state.store().save(&rec)?;
    Ok(Json(model_response(&rec)?))
}

#[derive(Debug, Serialize)]
pub struct OptimizeResponse {
    #[serde(flatten)]
    pub result: ModelResponse,
    pub changed: bool,
    pub sends: u32,
}

async fn optimize(
    State(state): State<AppState>,
    Path(id): Path<String>,
    headers: HeaderMap,
) -> ApiResult<Json<OptimizeResponse>> {
    let lock = state.store().lock(&id);
    let _guard = lock.lock().await;
    let mut rec = state.store().load(&id)?;
    rec.session.model_or_err()?;
    let provider = (state.inner.factory)(&rec.provider, api_key(&headers))?;
    let limit = state.inner.config.output_retry_limit;
    let mut session = rec.session.clone();
    let (session, outcome) =
        blocking(move || optimize_output(&mut session, provider.as_ref(), limit).map(|o| (session, o))).await??;
    rec.session = session;
    if outcome.changed {
        rec.push_version(VersionOrigin::Optimize, outcome.sends, None);
    } else {
        rec.updated_at = store::now_ms();
    }
    state.store().save(&rec)?;
    Ok(Json(OptimizeResponse { result: model_response(&rec)?, changed: outcome.changed, sends: outcome.sends }))
}

#[derive(Debug, Serialize)]
struct VersionView<'a> {
    version: u32,
    origin: VersionOrigin,
    created_at: u64,
    iterations: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    feedback: Option<&'a str>,
    model: &'a ModelJson,
}

async fn get_session(State(state): State<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let rec = state.store().load(&id)?;
    let s = &rec.session;
    let versions: Vec<VersionView> = rec
        .versions
        .iter()
        .map(|v| VersionView {
            version: v.version,
            origin: v.origin,
            created_at: v.created_at,
            iterations: v.iterations,
            feedback: v.feedback.as_deref(),
            model: &v.model,
        })
        .collect();
    let body = json!({
        "session_id": rec.id,
        "provider": rec.provider,
        "created_at": rec.created_at,
        "updated_at": rec.updated_at,
        "description": s.description,
        "status": s.status,
        "failure": s.failure,
        "rounds": s.rounds,
        "versions": versions,
        "timeline": s.iterations,
        "conversation": s.conversation,
    });
    Ok(Json(body).into_response())
}

#[derive(Debug, Deserialize)]
pub struct ExportQuery {
    pub format: String,
    #[serde(default)]
    pub version: Option<u32>,
}

async fn export(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<ExportQuery>,
) -> ApiResult<Response> {
    let format = ExportFormat::parse(&q.format)
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, format!("unknown export format '{}'", q.format)))?;
    let rec = state.store().load(&id)?;
    let v = rec
        .version(q.version)
        .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, "no such version"))?;
    let model = v.model.to_node().map_err(ApiError::internal)?;
    let doc = format.render(&model).map_err(ApiError::internal)?;
    let disposition = format!("attachment; filename=\"{}-v{}.{}\"", rec.id, v.version, format.extension());
    Ok((
        [(header::CONTENT_TYPE, format.content_type().to_string()), (header::CONTENT_DISPOSITION, disposition)],
        doc,
    )
        .into_response())
}

async fn spec() -> Json<serde_json::Value> {
    Json(openapi::document())
}
