//! HTTP chat API.
//!
//! * `POST /sessions` → `201 {"session_id"}`
//! * `POST /sessions/{id}/messages` with `{"question", "mode"}`: in
//!   `STREAMING` mode (the default) a `text/event-stream` of `chunk` events
//!   (`{"text"}`) closed by one `done` event carrying the full answer, or an
//!   `error` event; in `STRUCTURED` mode a JSON structured answer.
//! * `GET /sessions/{id}` → the session transcript
//! * `GET /healthz`
//!
//! Unknown sessions are 404. Errors are JSON `{"error"}`.

use std::convert::Infallible;
use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::Stream;
use serde::Deserialize;
use serde_json::json;
use tokio::sync::mpsc;
use tower_http::cors::CorsLayer;

use diavgeia_core::rag::{AnswerMode, RagError, RagService, SessionError};

#[derive(Clone)]
struct AppState {
    service: Arc<RagService>,
    documents: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MessageRequest {
    pub question: String,
    #[serde(default)]
    pub mode: AnswerMode,
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({"error": self.1}))).into_response()
    }
}

impl From<RagError> for ApiError {
    fn from(e: RagError) -> Self {
        let status = match &e {
            RagError::Session(SessionError::NotFound(_)) => StatusCode::NOT_FOUND,
            RagError::Session(SessionError::StoreUnavailable(_)) => StatusCode::SERVICE_UNAVAILABLE,
            RagError::GenerationFailed(_) => StatusCode::BAD_GATEWAY,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(status, e.to_string())
    }
}

fn internal(e: impl std::fmt::Display) -> ApiError {
    ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
}

/// Runs blocking service code off the async workers.
async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f).await.map_err(internal)?
}

/// `documents` is reported by `/healthz`.
pub fn router(service: Arc<RagService>, documents: usize) -> Router {
    Router::new()
        .route("/healthz", get(healthz))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/messages", post(post_message))
        .layer(CorsLayer::permissive())
        .with_state(AppState { service, documents })
}

pub async fn serve(listener: tokio::net::TcpListener, service: Arc<RagService>, documents: usize) -> anyhow::Result<()> {
    axum::serve(listener, router(service, documents))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    Ok(())
}

async fn healthz(State(s): State<AppState>) -> Json<serde_json::Value> {
    Json(json!({"status": "ok", "documents": s.documents, "generator": s.service.generator_name()}))
}

async fn create_session(State(s): State<AppState>) -> Result<impl IntoResponse, ApiError> {
    let id = blocking(move || s.service.create_session().map_err(ApiError::from)).await?;
    Ok((StatusCode::CREATED, Json(json!({"session_id": id}))))
}

async fn get_session(State(s): State<AppState>, Path(id): Path<String>) -> Result<impl IntoResponse, ApiError> {
    let session = blocking(move || s.service.session(&id).map_err(ApiError::from)).await?;
    Ok(Json(session))
}

async fn post_message(
    State(s): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<MessageRequest>, JsonRejection>,
) -> Result<Response, ApiError> {
    let Json(req) = body.map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.body_text()))?;
    if req.question.trim().is_empty() {
        return Err(ApiError(StatusCode::BAD_REQUEST, "question is empty".into()));
    }
    let service = s.service.clone();
    let check_id = id.clone();
    if !blocking(move || service.session_exists(&check_id).map_err(ApiError::from)).await? {
        return Err(ApiError(StatusCode::NOT_FOUND, format!("session {id} not found")));
    }
    match req.mode {
        AnswerMode::Structured => {
            let answer =
                blocking(move || s.service.answer(&id, &req.question, AnswerMode::Structured, &mut |_| {}).map_err(ApiError::from))
                    .await?;
            let structured = answer.structured.ok_or_else(|| internal("structured answer missing"))?;
            Ok(Json(structured).into_response())
        }
        AnswerMode::Streaming => Ok(Sse::new(stream_answer(s.service, id, req.question)).keep_alive(KeepAlive::default()).into_response()),
    }
}

fn stream_answer(service: Arc<RagService>, id: String, question: String) -> impl Stream<Item = Result<Event, Infallible>> {
    let (tx, rx) = mpsc::unbounded_channel::<Event>();
    tokio::task::spawn_blocking(move || {
        let chunk_tx = tx.clone();
        let result = service.answer(&id, &question, AnswerMode::Streaming, &mut |chunk| {
            let _ = chunk_tx.send(Event::default().event("chunk").data(json!({"text": chunk}).to_string()));
        });
        let last = match result {
            Ok(answer) => Event::default().event("done").data(serde_json::to_string(&answer).unwrap_or_default()),
            Err(e) => Event::default().event("error").data(json!({"error": e.to_string()}).to_string()),
        };
        let _ = tx.send(last);
    });
    futures::stream::unfold(rx, |mut rx| async move { rx.recv().await.map(|e| (Ok(e), rx)) })
}
