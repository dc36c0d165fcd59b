//! Review service over HTTP. All bodies are JSON.
//!
//! | Method | Path | Body / query | Success |
//! |---|---|---|---|
//! | GET | `/items` | `status`, `page` (1-based, default 1), `size` (default 50) | `Page` |
//! | POST | `/items/{id}/decision` | `DecisionBody`, `X-Reviewer` header | `Ack` |
//! | GET | `/export` | `allow_pending=true` to skip the pending check | `ExportResponse` |
//! | GET | `/stats` | | `Stats` |
//!
//! Errors come back as `{"error": kind, "message": text}` with 400 for bad
//! requests, 404 for unknown items, 409 for an export with pending items
//! and 422 for invalid decisions.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::sync::Arc;

use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use chrono::Utc;
use serde::{Deserialize, Serialize};

use forge_core::cvbench::Status;
use forge_core::review::{Decision, DecisionRecord, Edits, ExportBundle, ReviewError, ReviewStore};

pub const REVIEWER_HEADER: &str = "x-reviewer";
pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";
pub const DEFAULT_PAGE_SIZE: usize = 50;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecisionBody {
    pub decision: Decision,
    #[serde(flatten)]
    pub edits: Edits,
    #[serde(default)]
    pub idempotency_key: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExportResponse {
    #[serde(flatten)]
    pub bundle: ExportBundle,
    /// Per-task sample counts as a text table.
    pub summary: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ApiError {
    pub error: String,
    pub message: String,
}

struct Failure(StatusCode, &'static str, String);

impl IntoResponse for Failure {
    fn into_response(self) -> Response {
        let body = ApiError {
            error: self.1.into(),
            message: self.2,
        };
        (self.0, Json(body)).into_response()
    }
}

impl From<ReviewError> for Failure {
    fn from(e: ReviewError) -> Self {
        let (code, kind) = match &e {
            ReviewError::NotFound(_) => (StatusCode::NOT_FOUND, "not_found"),
            ReviewError::Validation(_) => (StatusCode::UNPROCESSABLE_ENTITY, "validation"),
            ReviewError::BadPage(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            ReviewError::Pending { .. } => (StatusCode::CONFLICT, "pending"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        };
        Failure(code, kind, e.to_string())
    }
}

fn bad_request(msg: impl Into<String>) -> Failure {
    Failure(StatusCode::BAD_REQUEST, "bad_request", msg.into())
}

fn parse_usize(q: &HashMap<String, String>, key: &str, default: usize) -> Result<usize, Failure> {
    match q.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| bad_request(format!("{key} must be a non-negative integer, got {v:?}"))),
    }
}

fn parse_status(s: &str) -> Result<Status, Failure> {
    serde_json::from_value(serde_json::Value::String(s.to_string()))
        .map_err(|_| bad_request(format!("unknown status {s:?}")))
}

async fn list_items(
    State(store): State<Arc<ReviewStore>>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, Failure> {
    let status = q.get("status").map(|s| parse_status(s)).transpose()?;
    let page = parse_usize(&q, "page", 1)?;
    let size = parse_usize(&q, "size", DEFAULT_PAGE_SIZE)?;
    Ok(Json(store.list(status, page, size)?).into_response())
}

async fn submit_decision(
    State(store): State<Arc<ReviewStore>>,
    Path(id): Path<String>,
    headers: HeaderMap,
    body: Result<Json<DecisionBody>, axum::extract::rejection::JsonRejection>,
) -> Result<Response, Failure> {
    let reviewer = headers
        .get(REVIEWER_HEADER)
        .and_then(|v| v.to_str().ok())
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .ok_or_else(|| bad_request("missing X-Reviewer header"))?
        .to_string();
    let Json(body) = body.map_err(|e| bad_request(e.body_text()))?;
    let key = body.idempotency_key.or_else(|| {
        headers
            .get(IDEMPOTENCY_HEADER)
            .and_then(|v| v.to_str().ok())
            .map(str::to_string)
    });
    let record = DecisionRecord {
        item_id: id,
        decision: body.decision,
        edits: body.edits,
        reviewer,
        timestamp: Utc::now(),
        idempotency_key: key,
    };
    // The journal append does file IO under a lock.
    let ack = tokio::task::spawn_blocking(move || store.submit(record))
        .await
        .map_err(|e| Failure(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()))??;
    Ok(Json(ack).into_response())
}

async fn export(
    State(store): State<Arc<ReviewStore>>,
    Query(q): Query<HashMap<String, String>>,
) -> Result<Response, Failure> {
    let allow = match q.get("allow_pending").map(String::as_str) {
        None | Some("false") | Some("0") => false,
        Some("true") | Some("1") => true,
        Some(v) => return Err(bad_request(format!("allow_pending must be true or false, got {v:?}"))),
    };
    let bundle = store.export(allow)?;
    let summary = bundle.composition.to_string();
    Ok(Json(ExportResponse { bundle, summary }).into_response())
}

async fn stats(State(store): State<Arc<ReviewStore>>) -> Json<forge_core::review::Stats> {
    Json(store.stats())
}

pub fn router(store: Arc<ReviewStore>) -> Router {
    Router::new()
        .route("/items", get(list_items))
        .route("/items/{id}/decision", post(submit_decision))
        .route("/export", get(export))
        .route("/stats", get(stats))
        .with_state(store)
}

/// Serves until ctrl-c.
pub async fn serve(store: Arc<ReviewStore>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("review service listening on {}", listener.local_addr()?);
    axum::serve(listener, router(store))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
