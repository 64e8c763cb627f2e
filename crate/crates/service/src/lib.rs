//! HTTP JSON API over the corpus store: review queue, gate mutation,
//! corpus browsing and pattern mining. Optionally serves the review UI's
//! static files under `/ui/`.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path as UrlPath, Query, Request, State};
use axum::http::StatusCode;
use axum::middleware::{self, Next};
use axum::response::{IntoResponse, Redirect, Response};
use axum::routing::get;
use axum::{Json, Router};
use chrono::Utc;
use emodial_core::curation::{AutoEvidence, CurationError, Disposition, FkglBand, GateRecord, IedViolation, Qoi, ReviewDecision};
use emodial_core::store::{CorpusFilter, CorpusRecord, CorpusStore, StoreError};
use emodial_core::transcript::Dialogue;
use emodial_core::{CefrLevel, Emotion, Role};
use serde::{Deserialize, Serialize};
use tokio::sync::RwLock;
use tower_http::services::ServeDir;

pub const TOKEN_HEADER: &str = "x-emodial-token";

/// Error body `{code, message}` with its status.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
}

#[derive(Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError {
            status,
            code,
            message: message.into(),
        }
    }

    fn invalid(message: impl Into<String>) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, "invalid_request", message)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = ErrorBody {
            code: self.code.to_string(),
            message: self.message,
        };
        (self.status, Json(body)).into_response()
    }
}

impl From<StoreError> for ApiError {
    fn from(e: StoreError) -> Self {
        match e {
            StoreError::NotFound(_) => ApiError::new(StatusCode::NOT_FOUND, "not_found", e.to_string()),
            StoreError::Curation(CurationError::AlreadyDisposed(_)) => {
                ApiError::new(StatusCode::CONFLICT, "already_disposed", e.to_string())
            }
            StoreError::Curation(CurationError::Invariant(_)) => ApiError::invalid(e.to_string()),
            StoreError::Locked(_) => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store_locked", e.to_string()),
            _ => ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "store_error", e.to_string()),
        }
    }
}

enum Backend {
    Ready(CorpusStore),
    /// Another process holds the write lock; retried on every request.
    Locked(PathBuf),
}

#[derive(Clone)]
pub struct AppState {
    backend: Arc<RwLock<Backend>>,
    token: Option<Arc<str>>,
}

impl AppState {
    /// Opens `path` for writing. If another writer holds it, the service
    /// still starts and answers 500 `store_locked` until the lock frees up.
    pub fn open(path: impl AsRef<Path>, token: Option<String>) -> Result<Self, StoreError> {
        let path = path.as_ref();
        let backend = match CorpusStore::open(path) {
            Ok(store) => Backend::Ready(store),
            Err(StoreError::Locked(p)) => {
                tracing::warn!(path = %p.display(), "corpus is locked by another writer; running degraded");
                Backend::Locked(p)
            }
            Err(e) => return Err(e),
        };
        Ok(Self::with_backend(backend, token))
    }

    pub fn from_store(store: CorpusStore, token: Option<String>) -> Self {
        Self::with_backend(Backend::Ready(store), token)
    }

    fn with_backend(backend: Backend, token: Option<String>) -> Self {
        AppState {
            backend: Arc::new(RwLock::new(backend)),
            token: token.filter(|t| !t.is_empty()).map(Arc::from),
        }
    }

    async fn ensure_open(&self) -> Result<(), ApiError> {
        let path = match &*self.backend.read().await {
            Backend::Ready(_) => return Ok(()),
            Backend::Locked(p) => p.clone(),
        };
        let mut guard = self.backend.write().await;
        if let Backend::Locked(_) = &*guard {
            *guard = Backend::Ready(CorpusStore::open(&path)?);
        }
        Ok(())
    }

    async fn read<T>(&self, f: impl FnOnce(&CorpusStore) -> Result<T, ApiError>) -> Result<T, ApiError> {
        self.ensure_open().await?;
        match &*self.backend.read().await {
            Backend::Ready(store) => f(store),
            Backend::Locked(p) => Err(StoreError::Locked(p.clone()).into()),
        }
    }

    async fn write<T>(&self, f: impl FnOnce(&mut CorpusStore) -> Result<T, ApiError>) -> Result<T, ApiError> {
        self.ensure_open().await?;
        match &mut *self.backend.write().await {
            Backend::Ready(store) => f(store),
            Backend::Locked(p) => Err(StoreError::Locked(p.clone()).into()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TaskEvidence {
    pub emotional_coherence: Option<bool>,
    pub complexity_coherence: Option<bool>,
    pub ied_violations: Vec<IedViolation>,
    pub fkgl: Option<f64>,
    pub band: Option<FkglBand>,
    pub emotion_match: Option<String>,
    pub complexity_error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Pending,
    Done,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewTask {
    pub dialogue_id: String,
    pub dialogue: Dialogue,
    pub evidence: TaskEvidence,
    pub status: TaskStatus,
}

impl ReviewTask {
    fn from_record(r: &CorpusRecord) -> Self {
        let g = &r.gate;
        let AutoEvidence {
            emotion_match,
            fkgl,
            band,
            complexity_error,
        } = g.evidence.clone();
        ReviewTask {
            dialogue_id: r.id().to_string(),
            dialogue: r.dialogue.clone(),
            evidence: TaskEvidence {
                emotional_coherence: g.emotional_coherence,
                complexity_coherence: g.complexity_coherence,
                ied_violations: g.ied_violations.clone(),
                fkgl,
                band,
                emotion_match,
                complexity_error,
            },
            status: if g.disposition == Disposition::Pending {
                TaskStatus::Pending
            } else {
                TaskStatus::Done
            },
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RecordSummary {
    pub id: String,
    pub emotion: Emotion,
    pub cefr: CefrLevel,
    pub implicit: bool,
    pub disposition: Disposition,
    pub qoi: Option<Qoi>,
    pub turn_count: usize,
    pub fkgl: Option<f64>,
}

impl RecordSummary {
    fn from_record(r: &CorpusRecord) -> Self {
        let m = r.dialogue.meta();
        RecordSummary {
            id: r.id().to_string(),
            emotion: m.target_emotion,
            cefr: m.cefr,
            implicit: m.implicit,
            disposition: r.gate.disposition,
            qoi: r.gate.qoi,
            turn_count: r.dialogue.turns().len(),
            fkgl: r.gate.evidence.fkgl,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PatternView {
    pub pattern: String,
    pub links: Vec<emodial_core::ChainLink>,
    pub support: usize,
    pub emotion: Option<Emotion>,
    pub cefr: Option<CefrLevel>,
}

#[derive(Debug, Deserialize)]
struct ReviewBody {
    qoi: String,
    reviewer: String,
    #[serde(default)]
    emotional_coherence: Option<bool>,
    #[serde(default)]
    complexity_coherence: Option<bool>,
}

fn param<T: FromStr>(q: &HashMap<String, String>, key: &str) -> Result<Option<T>, ApiError>
where
    T::Err: std::fmt::Display,
{
    match q.get(key).map(|v| v.trim()).filter(|v| !v.is_empty()) {
        None => Ok(None),
        Some(v) => v
            .parse()
            .map(Some)
            .map_err(|e| ApiError::invalid(format!("bad `{key}`: {e}"))),
    }
}

fn corpus_filter(q: &HashMap<String, String>) -> Result<CorpusFilter, ApiError> {
    Ok(CorpusFilter {
        emotion: param(q, "emotion")?,
        cefr: param(q, "cefr")?,
        implicit: param(q, "implicit")?,
        role_presence: param::<Role>(q, "role")?,
        disposition: param(q, "disposition")?,
        qoi: param(q, "qoi")?,
    })
}

async fn review_next(State(s): State<AppState>) -> Result<Response, ApiError> {
    s.read(|store| {
        Ok(match store.next_pending() {
            Some(r) => Json(ReviewTask::from_record(r)).into_response(),
            None => StatusCode::NO_CONTENT.into_response(),
        })
    })
    .await
}

async fn review_post(
    State(s): State<AppState>,
    UrlPath(id): UrlPath<String>,
    body: Result<Json<ReviewBody>, JsonRejection>,
) -> Result<Json<GateRecord>, ApiError> {
    let Json(body) = body.map_err(|e| ApiError::invalid(e.body_text()))?;
    let qoi: Qoi = body.qoi.parse().map_err(|e| ApiError::invalid(format!("bad `qoi`: {e}")))?;
    if body.reviewer.trim().is_empty() {
        return Err(ApiError::invalid("`reviewer` must not be empty"));
    }
    let decision = ReviewDecision {
        qoi,
        reviewer: body.reviewer.trim().to_string(),
        emotional_coherence: body.emotional_coherence,
        complexity_coherence: body.complexity_coherence,
    };
    s.write(|store| {
        let rec = store.review(&id, &decision, Utc::now())?;
        tracing::info!(id = %id, qoi = %qoi, disposition = %rec.gate.disposition, "review recorded");
        Ok(Json(rec.gate.clone()))
    })
    .await
}

async fn corpus_list(
    State(s): State<AppState>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<Vec<RecordSummary>>, ApiError> {
    let filter = corpus_filter(&q)?;
    s.read(|store| Ok(Json(store.query(&filter).into_iter().map(RecordSummary::from_record).collect())))
        .await
}

async fn corpus_get(State(s): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<CorpusRecord>, ApiError> {
    s.read(|store| {
        store
            .get(&id)
            .cloned()
            .map(Json)
            .ok_or_else(|| StoreError::NotFound(id.clone()).into())
    })
    .await
}

async fn patterns(
    State(s): State<AppState>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Json<Vec<PatternView>>, ApiError> {
    let n = param(&q, "n")?.unwrap_or(2);
    let min_support = param(&q, "min_support")?.unwrap_or(1);
    let filter = CorpusFilter {
        emotion: param(&q, "emotion")?,
        cefr: param(&q, "cefr")?,
        ..Default::default()
    };
    s.read(|store| {
        let found = store
            .mine(&filter, n, min_support)
            .map_err(|e| ApiError::invalid(e.to_string()))?;
        Ok(Json(
            found
                .into_iter()
                .map(|p| PatternView {
                    pattern: p.to_string(),
                    support: p.support,
                    emotion: p.stratum.emotion,
                    cefr: p.stratum.cefr,
                    links: p.links,
                })
                .collect(),
        ))
    })
    .await
}

async fn health(State(s): State<AppState>) -> Result<Json<serde_json::Value>, ApiError> {
    s.read(|store| {
        Ok(Json(serde_json::json!({
            "status": "ok",
            "records": store.len(),
            "pending": store.records().iter().filter(|r| r.gate.disposition == Disposition::Pending).count(),
        })))
    })
    .await
}

async fn require_token(State(s): State<AppState>, req: Request, next: Next) -> Response {
    if let Some(expected) = &s.token {
        let given = req.headers().get(TOKEN_HEADER).and_then(|v| v.to_str().ok());
        if given != Some(expected) {
            return ApiError::new(StatusCode::UNAUTHORIZED, "unauthorized", format!("missing or wrong {TOKEN_HEADER} header"))
                .into_response();
        }
    }
    next.run(req).await
}

async fn api_not_found() -> ApiError {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint")
}

/// The full application. `ui_dir`, when given, is served at `/ui/`.
pub fn router(state: AppState, ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/review/next", get(review_next))
        .route("/review/{id}", axum::routing::post(review_post))
        .route("/corpus", get(corpus_list))
        .route("/corpus/{id}", get(corpus_get))
        .route("/patterns", get(patterns))
        .route("/health", get(health))
        .fallback(api_not_found)
        .route_layer(middleware::from_fn_with_state(state.clone(), require_token))
        .with_state(state);
    let mut app = Router::new().nest("/api", api);
    if let Some(dir) = ui_dir {
        app = app
            .nest_service("/ui", ServeDir::new(dir).append_index_html_on_directories(true))
            .route("/", get(|| async { Redirect::temporary("/ui/") }));
    }
    app
}

/// Serves until `shutdown` resolves; in-flight requests finish first.
pub async fn serve<F>(listener: tokio::net::TcpListener, app: Router, shutdown: F) -> std::io::Result<()>
where
    F: std::future::Future<Output = ()> + Send + 'static,
{
    axum::serve(listener, app).with_graceful_shutdown(shutdown).await
}
