//! JSON HTTP API over a [`JobManager`].

use std::net::SocketAddr;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Multipart, Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};

use super::{JobManager, ServiceError, DATASET_SCHEME};
use crate::app::{parse_report_text, FieldError, JobSpec};

type Shared = Arc<JobManager>;

pub fn router(manager: Shared) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/datasets", post(upload_dataset))
        .route("/api/jobs", post(submit_job).get(list_jobs))
        .route("/api/jobs/:id", get(job_status))
        .route("/api/jobs/:id/report", get(job_report))
        .with_state(manager)
}

/// Serves until ctrl-c.
pub async fn serve(manager: Shared, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    log::info!("listening on {}", listener.local_addr()?);
    axum::serve(listener, router(manager))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

fn error_body(status: StatusCode, message: String) -> Response {
    (status, Json(json!({ "error": message }))).into_response()
}

fn field_errors(errors: &[FieldError]) -> Response {
    (
        StatusCode::BAD_REQUEST,
        Json(json!({ "error": "invalid job spec", "field_errors": errors })),
    )
        .into_response()
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        match &self {
            ServiceError::UnknownJob(_) => error_body(StatusCode::NOT_FOUND, self.to_string()),
            ServiceError::SpecValidation(errors) => field_errors(errors),
            ServiceError::ReportUnavailable(_) => error_body(StatusCode::CONFLICT, self.to_string()),
            ServiceError::Io(_) => error_body(StatusCode::INTERNAL_SERVER_ERROR, self.to_string()),
        }
    }
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn upload_dataset(State(m): State<Shared>, mut multipart: Multipart) -> Response {
    loop {
        let field = match multipart.next_field().await {
            Ok(Some(f)) => f,
            Ok(None) => return error_body(StatusCode::BAD_REQUEST, "no file in upload".into()),
            Err(e) => return error_body(StatusCode::BAD_REQUEST, e.to_string()),
        };
        let Some(name) = field.file_name().map(str::to_string) else {
            continue;
        };
        let bytes = match field.bytes().await {
            Ok(b) => b,
            Err(e) => return error_body(StatusCode::BAD_REQUEST, e.to_string()),
        };
        return match m.store_dataset(&name, &bytes) {
            Ok(id) => Json(json!({ "dataset_id": id, "path": format!("{DATASET_SCHEME}{id}") })).into_response(),
            Err(e) => error_body(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
        };
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SubmitBody {
    spec: JobSpec,
}

async fn submit_job(State(m): State<Shared>, body: Bytes) -> Response {
    let spec = match serde_json::from_slice::<SubmitBody>(&body) {
        Ok(b) => b.spec,
        Err(e) => return field_errors(&[FieldError::new("spec", &e.to_string())]),
    };
    match m.submit(spec) {
        Ok(id) => (StatusCode::ACCEPTED, Json(json!({ "job_id": id }))).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn list_jobs(State(m): State<Shared>) -> Response {
    Json(json!({ "jobs": m.list() })).into_response()
}

async fn job_status(State(m): State<Shared>, Path(id): Path<String>) -> Response {
    match m.status(&id) {
        Ok(r) => Json(r).into_response(),
        Err(e) => e.into_response(),
    }
}

async fn job_report(State(m): State<Shared>, Path(id): Path<String>) -> Response {
    match m.report(&id) {
        Ok(text) => Json(json!({
            "job_id": id,
            "sections": parse_report_text(&text),
            "text": text,
        }))
        .into_response(),
        Err(e) => e.into_response(),
    }
}
