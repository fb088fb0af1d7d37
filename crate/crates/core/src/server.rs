//! JSON-over-HTTP API for a running campaign.
//!
//! | method | path | |
//! |---|---|---|
//! | GET | `/api/tasks/next?judge=ID&type=KIND` | lease the next task |
//! | POST | `/api/submissions` | submit a leased task |
//! | GET | `/api/documents/{id}` | tokens and heatmap |
//! | GET | `/api/reports/{section}?format=csv\|records` | report tables |

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use crate::protocol::TaskKind;
use crate::report::{campaign_report, Format, ReportError};
use crate::store::{Campaign, Clock, StoreError, Submission};

#[derive(Clone)]
pub struct AppState {
    campaign: Arc<Mutex<Campaign>>,
    clock: Arc<dyn Clock>,
}

impl AppState {
    pub fn new(campaign: Campaign, clock: Arc<dyn Clock>) -> Self {
        Self {
            campaign: Arc::new(Mutex::new(campaign)),
            clock,
        }
    }

    /// Shared handle to the campaign, e.g. for inspecting state in tests.
    pub fn campaign(&self) -> Arc<Mutex<Campaign>> {
        Arc::clone(&self.campaign)
    }
}

#[derive(Debug, Serialize)]
struct ApiError {
    error: &'static str,
    message: String,
}

fn error(status: StatusCode, kind: &'static str, message: impl ToString) -> Response {
    (
        status,
        Json(ApiError {
            error: kind,
            message: message.to_string(),
        }),
    )
        .into_response()
}

fn store_error(e: StoreError) -> Response {
    match e {
        StoreError::UnknownTask(_) => error(StatusCode::NOT_FOUND, "unknown_task", e),
        StoreError::NotLeased { .. } => error(StatusCode::CONFLICT, "not_leased", e),
        StoreError::LeaseExpired(_) => error(StatusCode::CONFLICT, "lease_expired", e),
        StoreError::Io(_) | StoreError::Corrupt { .. } => error(StatusCode::INTERNAL_SERVER_ERROR, "storage", e),
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/api/tasks/next", get(next_task))
        .route("/api/submissions", post(submit))
        .route("/api/documents/{id}", get(document))
        .route("/api/reports/{section}", get(report))
        .with_state(state)
}

#[derive(Debug, Deserialize)]
struct NextQuery {
    judge: Option<String>,
    #[serde(rename = "type")]
    kind: Option<String>,
}

async fn next_task(State(state): State<AppState>, Query(q): Query<NextQuery>) -> Response {
    let Some(judge) = q.judge.filter(|j| !j.is_empty()) else {
        return error(StatusCode::BAD_REQUEST, "bad_request", "missing judge parameter");
    };
    let kind: TaskKind = match q.kind.as_deref().unwrap_or("highlight").parse() {
        Ok(k) => k,
        Err(e) => return error(StatusCode::BAD_REQUEST, "unknown_task_type", e),
    };
    let now = state.clock.now();
    let next = state.campaign.lock().unwrap().serve_next_task(&judge, kind, now);
    Json(next).into_response()
}

async fn submit(State(state): State<AppState>, body: Result<Json<Submission>, JsonRejection>) -> Response {
    let Json(submission) = match body {
        Ok(b) => b,
        Err(e) => return error(StatusCode::BAD_REQUEST, "bad_request", e.body_text()),
    };
    let now = state.clock.now();
    let verdict = state.campaign.lock().unwrap().submit(submission, now);
    match verdict {
        Ok(v) => Json(v).into_response(),
        Err(e) => store_error(e),
    }
}

async fn document(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.campaign.lock().unwrap().document_view(&id) {
        Some(view) => Json(view).into_response(),
        None => error(StatusCode::NOT_FOUND, "unknown_document", format!("unknown document {id:?}")),
    }
}

#[derive(Debug, Deserialize)]
struct ReportQuery {
    format: Option<String>,
}

async fn report(State(state): State<AppState>, Path(section): Path<String>, Query(q): Query<ReportQuery>) -> Response {
    let format: Format = match q.format.as_deref().map_or(Ok(Format::Records), str::parse) {
        Ok(f) => f,
        Err(e) => return error(StatusCode::BAD_REQUEST, "bad_request", e),
    };
    let rendered = campaign_report(&state.campaign.lock().unwrap()).and_then(|r| r.render_section(&section, format));
    match rendered {
        Ok(body) => {
            let content_type = match format {
                Format::Csv => "text/csv; charset=utf-8",
                Format::Records => "application/json",
            };
            ([(header::CONTENT_TYPE, content_type)], body).into_response()
        }
        Err(e @ ReportError::UnknownSection(_)) => error(StatusCode::NOT_FOUND, "unknown_report", e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "report", e),
    }
}

/// Binds `addr` and serves until the returned future is dropped or ctrl-c.
pub async fn serve(addr: SocketAddr, state: AppState) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    eprintln!("listening on http://{}", listener.local_addr()?);
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}
