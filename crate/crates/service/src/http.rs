use std::collections::BTreeMap;
use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use tokio_stream::wrappers::WatchStream;
use tokio_stream::{Stream, StreamExt};
use tower_http::cors::CorsLayer;
use tower_http::services::ServeDir;

use crate::api::*;
use crate::session::{SessionHandle, SessionParams};
use crate::ServiceError;

/// Session registry. Holds handles only; each session's state lives on its
/// own worker.
#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<Mutex<BTreeMap<SessionId, SessionHandle>>>,
    next_id: Arc<AtomicU64>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    fn get(&self, id: SessionId) -> Result<SessionHandle, ServiceError> {
        self.sessions
            .lock()
            .expect("registry lock")
            .get(&id)
            .cloned()
            .ok_or(ServiceError::UnknownSession(id))
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::Invalid { .. } => StatusCode::UNPROCESSABLE_ENTITY,
            ServiceError::Conflict(_) => StatusCode::CONFLICT,
            ServiceError::Internal(_) => StatusCode::INTERNAL_SERVER_ERROR,
        };
        let violations = match &self {
            ServiceError::Invalid { violations, .. } => violations.clone(),
            _ => Vec::new(),
        };
        let body = ErrorBody {
            api_version: API_VERSION,
            error: self.to_string(),
            violations,
        };
        (status, Json(body)).into_response()
    }
}

fn bad_json(e: JsonRejection) -> ServiceError {
    ServiceError::invalid(e.body_text(), Vec::new())
}

async fn create(
    State(app): State<AppState>,
    body: Option<Json<serde_json::Value>>,
) -> Result<(StatusCode, Json<SessionSummary>), ServiceError> {
    let req: CreateSession = match body {
        Some(Json(v)) => serde_json::from_value(v).map_err(|e| ServiceError::invalid(e.to_string(), Vec::new()))?,
        None => CreateSession::default(),
    };
    let params = SessionParams::from_request(req)?;
    let id = app.next_id.fetch_add(1, Ordering::Relaxed) + 1;
    let handle = SessionHandle::spawn(id, params)?;
    app.sessions.lock().expect("registry lock").insert(id, handle.clone());
    Ok((StatusCode::CREATED, Json(handle.summary().await?)))
}

async fn list(State(app): State<AppState>) -> Json<serde_json::Value> {
    let ids: Vec<SessionId> = app.sessions.lock().expect("registry lock").keys().copied().collect();
    Json(serde_json::json!({ "api_version": API_VERSION, "sessions": ids }))
}

async fn command(
    State(app): State<AppState>,
    Path(id): Path<SessionId>,
    body: Result<Json<SessionCommand>, JsonRejection>,
) -> Result<(StatusCode, Json<CommandAck>), ServiceError> {
    let handle = app.get(id)?;
    let Json(cmd) = body.map_err(bad_json)?;
    let accepted = handle.command(cmd).await?;
    Ok((StatusCode::ACCEPTED, Json(CommandAck { api_version: API_VERSION, accepted })))
}

async fn summary(State(app): State<AppState>, Path(id): Path<SessionId>) -> Result<Json<SessionSummary>, ServiceError> {
    Ok(Json(app.get(id)?.summary().await?))
}

#[derive(Deserialize)]
struct LogQuery {
    #[serde(default)]
    format: Option<String>,
}

async fn log(
    State(app): State<AppState>,
    Path(id): Path<SessionId>,
    Query(q): Query<LogQuery>,
) -> Result<Response, ServiceError> {
    let export = app.get(id)?.log().await?;
    Ok(match q.format.as_deref() {
        Some("json") => Json(export).into_response(),
        None | Some("toml") => (
            [
                (header::CONTENT_TYPE, "application/toml; charset=utf-8".to_string()),
                (
                    header::CONTENT_DISPOSITION,
                    format!("attachment; filename=\"session-{id}-epoch-{}.toml\"", export.epoch),
                ),
            ],
            export.to_toml(),
        )
            .into_response(),
        Some(other) => {
            return Err(ServiceError::invalid(
                format!("unknown log format {other:?}; expected toml or json"),
                Vec::new(),
            ))
        }
    })
}

#[derive(Deserialize)]
struct MetricsQuery {
    #[serde(default)]
    since: u64,
}

async fn metrics(
    State(app): State<AppState>,
    Path(id): Path<SessionId>,
    Query(q): Query<MetricsQuery>,
) -> Result<Json<serde_json::Value>, ServiceError> {
    let frames = app.get(id)?.metrics(q.since).await?;
    Ok(Json(serde_json::json!({ "api_version": API_VERSION, "session": id, "frames": frames })))
}

async fn delete(State(app): State<AppState>, Path(id): Path<SessionId>) -> Result<StatusCode, ServiceError> {
    let handle = app
        .sessions
        .lock()
        .expect("registry lock")
        .remove(&id)
        .ok_or(ServiceError::UnknownSession(id))?;
    handle.shutdown();
    Ok(StatusCode::NO_CONTENT)
}

async fn events(
    State(app): State<AppState>,
    Path(id): Path<SessionId>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ServiceError> {
    let rx = app.get(id)?.subscribe();
    let stream = WatchStream::new(rx).filter_map(|frame| {
        let f = frame?;
        let data = serde_json::to_string(&*f).ok()?;
        Some(Ok(Event::default().event("frame").id(format!("{}:{}", f.epoch, f.tick)).data(data)))
    });
    Ok(Sse::new(stream).keep_alive(KeepAlive::default()))
}

/// The full HTTP surface over `state`.
pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create).get(list))
        .route("/sessions/{id}", get(summary).delete(delete))
        .route("/sessions/{id}/commands", post(command))
        .route("/sessions/{id}/log", get(log))
        .route("/sessions/{id}/metrics", get(metrics))
        .route("/sessions/{id}/events", get(events))
        .with_state(state)
}

#[derive(Debug, Clone)]
pub struct ServeOptions {
    pub addr: SocketAddr,
    /// Static files (a built dashboard) served for every other path.
    pub static_dir: Option<PathBuf>,
}

/// Binds `opts.addr` and serves until the process ends. `on_bound` receives
/// the actual address, which matters when binding port 0.
pub async fn serve(opts: ServeOptions, on_bound: impl FnOnce(SocketAddr)) -> std::io::Result<()> {
    let mut app = router(AppState::new()).layer(CorsLayer::permissive());
    if let Some(dir) = opts.static_dir {
        app = app.fallback_service(ServeDir::new(dir));
    }
    let listener = tokio::net::TcpListener::bind(opts.addr).await?;
    on_bound(listener.local_addr()?);
    axum::serve(listener, app).await
}
