//! HTTP grading service for blinded studies.
//!
//! Graders see only an item count and images in display order. Every
//! session change is appended and synced to the session's event log before
//! the response is sent. Ground truth is read only by the admin results
//! endpoint.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post, put};
use axum::{Json, Router};
use elastoct_core::session::{self, DurableSession, Session, SessionError, SessionSummary, Verdict};
use elastoct_core::stats::{analyze_study, RateReport, StatsError};
use elastoct_core::study::{StudyError, StudyManifest};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;
use tokio::net::TcpListener;

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    /// Study directories, each holding `manifest.json` and `images/`.
    pub studies: Vec<PathBuf>,
    /// Where session logs live; existing logs are replayed at startup.
    pub sessions_dir: PathBuf,
    /// Bearer token for `/admin`; admin routes answer 403 when unset.
    pub admin_token: Option<String>,
}

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("unknown study `{0}`")]
    UnknownStudy(String),
    #[error("unknown session `{0}`")]
    UnknownSession(String),
    #[error("study `{0}` is loaded twice")]
    DuplicateStudy(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("admin token required")]
    Unauthorized,
    #[error("admin access is disabled")]
    AdminDisabled,
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Study(#[from] StudyError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("worker task failed: {0}")]
    Join(String),
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            Self::UnknownStudy(_) | Self::UnknownSession(_) => StatusCode::NOT_FOUND,
            Self::BadRequest(_) => StatusCode::BAD_REQUEST,
            Self::Unauthorized => StatusCode::UNAUTHORIZED,
            Self::AdminDisabled => StatusCode::FORBIDDEN,
            Self::Session(e) => match e {
                SessionError::IndexOutOfRange { .. } => StatusCode::NOT_FOUND,
                SessionError::Finished | SessionError::Incomplete { .. } => StatusCode::CONFLICT,
                SessionError::NotFinished => StatusCode::CONFLICT,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            },
            Self::Stats(StatsError::Unfinished(_)) => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        if status == StatusCode::INTERNAL_SERVER_ERROR {
            tracing::error!(error = %self, "request failed");
        }
        let body = match &self {
            Self::Session(SessionError::Incomplete { missing }) => {
                json!({ "error": "incomplete", "missing": missing })
            }
            Self::Session(SessionError::Finished) => json!({ "error": "finished" }),
            other => json!({ "error": other.to_string() }),
        };
        (status, Json(body)).into_response()
    }
}

struct LoadedStudy {
    dir: PathBuf,
    manifest: StudyManifest,
}

type SessionHandle = Arc<Mutex<DurableSession>>;

pub struct AppState {
    studies: HashMap<String, Arc<LoadedStudy>>,
    sessions: RwLock<HashMap<String, SessionHandle>>,
    sessions_dir: PathBuf,
    admin_token: Option<String>,
}

impl AppState {
    /// Loads every study and reopens every session log in `sessions_dir`.
    pub fn load(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let mut studies = HashMap::new();
        for dir in &config.studies {
            let manifest = StudyManifest::load_dir(dir)?;
            let id = manifest.study_id.clone();
            let study = LoadedStudy {
                dir: dir.clone(),
                manifest,
            };
            if studies.insert(id.clone(), Arc::new(study)).is_some() {
                return Err(ServiceError::DuplicateStudy(id));
            }
        }
        fs::create_dir_all(&config.sessions_dir).map_err(|source| ServiceError::Io {
            path: config.sessions_dir.clone(),
            source,
        })?;
        let mut sessions = HashMap::new();
        for path in session_logs(&config.sessions_dir)? {
            let durable = DurableSession::open(&path)?;
            let s = durable.session();
            match studies.get(s.study_id()) {
                Some(st) if st.manifest.item_count() == s.item_count() => {
                    sessions.insert(s.session_id().to_string(), Arc::new(Mutex::new(durable)));
                }
                _ => tracing::warn!(path = %path.display(), "skipping session for a study that is not loaded"),
            }
        }
        tracing::info!(studies = studies.len(), sessions = sessions.len(), "state loaded");
        Ok(Self {
            studies,
            sessions: RwLock::new(sessions),
            sessions_dir: config.sessions_dir.clone(),
            admin_token: config.admin_token.clone(),
        })
    }

    fn study(&self, id: &str) -> Result<Arc<LoadedStudy>, ServiceError> {
        self.studies
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownStudy(id.to_string()))
    }

    fn session(&self, id: &str) -> Result<SessionHandle, ServiceError> {
        self.sessions
            .read()
            .expect("session map lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    fn check_admin(&self, headers: &HeaderMap) -> Result<(), ServiceError> {
        let Some(expected) = &self.admin_token else {
            return Err(ServiceError::AdminDisabled);
        };
        let given = headers
            .get(header::AUTHORIZATION)
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.strip_prefix("Bearer "));
        match given {
            Some(token) if token.as_bytes() == expected.as_bytes() => Ok(()),
            _ => Err(ServiceError::Unauthorized),
        }
    }
}

fn session_logs(dir: &Path) -> Result<Vec<PathBuf>, ServiceError> {
    let io = |source| ServiceError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.extension().is_some_and(|e| e == session::LOG_EXTENSION) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Runs blocking work (file reads, fsync) off the async workers.
async fn blocking<T, F>(f: F) -> Result<T, ServiceError>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Join(e.to_string()))?
}

fn parse_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> Result<T, ServiceError> {
    serde_json::from_slice(body).map_err(|e| ServiceError::BadRequest(e.to_string()))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/studies/{study_id}/sessions", post(create_session))
        .route("/sessions/{sid}/items/{index}", get(get_item))
        .route("/sessions/{sid}/items/{index}/verdict", put(put_verdict))
        .route("/sessions/{sid}/state", get(get_state))
        .route("/sessions/{sid}/finish", post(finish_session))
        .route("/admin/studies/{study_id}/results", get(get_results))
        .with_state(state)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

#[derive(Debug, Deserialize)]
struct CreateSession {
    grader_id: String,
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SessionCreated {
    pub session_id: String,
    pub item_count: usize,
}

async fn create_session(
    State(state): State<Arc<AppState>>,
    UrlPath(study_id): UrlPath<String>,
    body: Bytes,
) -> Result<(StatusCode, Json<SessionCreated>), ServiceError> {
    let study = state.study(&study_id)?;
    let req: CreateSession = parse_body(&body)?;
    let grader = req.grader_id.trim().to_string();
    if grader.is_empty() {
        return Err(ServiceError::BadRequest("grader_id must not be empty".into()));
    }
    let session_id = uuid::Uuid::new_v4().simple().to_string();
    let item_count = study.manifest.item_count();
    let dir = state.sessions_dir.clone();
    let sid = session_id.clone();
    let durable = blocking(move || {
        Ok(DurableSession::create(
            &dir,
            &sid,
            &grader,
            &study.manifest.study_id,
            item_count,
        )?)
    })
    .await?;
    state
        .sessions
        .write()
        .expect("session map lock poisoned")
        .insert(session_id.clone(), Arc::new(Mutex::new(durable)));
    tracing::info!(session = %session_id, study = %study_id, "session created");
    Ok((
        StatusCode::CREATED,
        Json(SessionCreated {
            session_id,
            item_count,
        }),
    ))
}

async fn get_item(
    State(state): State<Arc<AppState>>,
    UrlPath((sid, index)): UrlPath<(String, usize)>,
) -> Result<Response, ServiceError> {
    let handle = state.session(&sid)?;
    let study_id = handle.lock().expect("session lock poisoned").session().study_id().to_string();
    let study = state.study(&study_id)?;
    let bytes = blocking(move || {
        let mut s = handle.lock().expect("session lock poisoned");
        let item = study
            .manifest
            .displayed(index)
            .ok_or(SessionError::IndexOutOfRange {
                index,
                item_count: study.manifest.item_count(),
            })?;
        let path = study.manifest.image_path(&study.dir, item);
        let bytes = fs::read(&path).map_err(|source| ServiceError::Io { path, source })?;
        if !s.session().is_finished() {
            s.view(index)?;
        }
        Ok(bytes)
    })
    .await?;
    let headers = [
        (header::CONTENT_TYPE, HeaderValue::from_static("image/png")),
        (header::CACHE_CONTROL, HeaderValue::from_static("no-store")),
    ];
    Ok((headers, bytes).into_response())
}

#[derive(Debug, Deserialize)]
struct VerdictBody {
    verdict: String,
}

async fn put_verdict(
    State(state): State<Arc<AppState>>,
    UrlPath((sid, index)): UrlPath<(String, usize)>,
    body: Bytes,
) -> Result<StatusCode, ServiceError> {
    let handle = state.session(&sid)?;
    let req: VerdictBody = parse_body(&body)?;
    let verdict: Verdict = req.verdict.parse().map_err(ServiceError::BadRequest)?;
    blocking(move || {
        handle
            .lock()
            .expect("session lock poisoned")
            .put_verdict(index, verdict)?;
        Ok(())
    })
    .await?;
    Ok(StatusCode::NO_CONTENT)
}

#[derive(Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct SessionState {
    pub cursor: usize,
    pub answered: Vec<usize>,
    pub item_count: usize,
    pub finished: bool,
}

async fn get_state(
    State(state): State<Arc<AppState>>,
    UrlPath(sid): UrlPath<String>,
) -> Result<Json<SessionState>, ServiceError> {
    let handle = state.session(&sid)?;
    let guard = handle.lock().expect("session lock poisoned");
    let s = guard.session();
    Ok(Json(SessionState {
        cursor: s.cursor(),
        answered: s.answered(),
        item_count: s.item_count(),
        finished: s.is_finished(),
    }))
}

async fn finish_session(
    State(state): State<Arc<AppState>>,
    UrlPath(sid): UrlPath<String>,
) -> Result<Json<SessionSummary>, ServiceError> {
    let handle = state.session(&sid)?;
    let summary = blocking(move || Ok(handle.lock().expect("session lock poisoned").finish()?)).await?;
    tracing::info!(session = %sid, "session finished");
    Ok(Json(summary))
}

#[derive(Debug, Deserialize)]
struct ResultsQuery {
    format: Option<String>,
}

/// Finished sessions of one study, oldest first.
fn finished_sessions(state: &AppState, study_id: &str) -> Vec<Session> {
    let handles: Vec<SessionHandle> = state
        .sessions
        .read()
        .expect("session map lock poisoned")
        .values()
        .cloned()
        .collect();
    let mut sessions: Vec<Session> = handles
        .iter()
        .map(|h| h.lock().expect("session lock poisoned").session().clone())
        .filter(|s| s.study_id() == study_id && s.is_finished())
        .collect();
    sessions.sort_by(|a, b| {
        a.created_at()
            .cmp(&b.created_at())
            .then_with(|| a.session_id().cmp(b.session_id()))
    });
    sessions
}

async fn get_results(
    State(state): State<Arc<AppState>>,
    UrlPath(study_id): UrlPath<String>,
    Query(query): Query<ResultsQuery>,
    headers: HeaderMap,
) -> Result<Response, ServiceError> {
    state.check_admin(&headers)?;
    let study = state.study(&study_id)?;
    let sessions = finished_sessions(&state, &study_id);
    let report: RateReport = analyze_study(&study.manifest, &sessions)?;
    match query.format.as_deref() {
        None | Some("json") => Ok(Json(report).into_response()),
        Some("text") => Ok((
            [(header::CONTENT_TYPE, "text/plain; charset=utf-8")],
            report.render_table(),
        )
            .into_response()),
        Some(other) => Err(ServiceError::BadRequest(format!("unknown format `{other}`"))),
    }
}
