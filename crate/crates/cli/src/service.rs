//! Stateless HTTP preview service.
//!
//! `POST /v1/reconstruct` answers with a `multipart/mixed` body: the run
//! report as JSON, then the mesh as binary glTF. Reconstructions run on the
//! blocking pool behind a semaphore so at most `workers` solves execute at
//! once.

use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use anno3d_core::annotation::{parse, validate_with_resolution, ParseError, ValidationReport, Violation};
use anno3d_core::io::encode_glb;
use anno3d_core::{reconstruct, Error, ReconstructionConfig};
use axum::body::{Body, Bytes};
use axum::extract::{DefaultBodyLimit, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};
use tokio::sync::Semaphore;

use crate::settings::merge_config;

pub const BODY_LIMIT: usize = 10 * 1024 * 1024;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);
pub const MULTIPART_BOUNDARY: &str = "anno3d-preview";
pub const GLB_CONTENT_TYPE: &str = "model/gltf-binary";

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub base: ReconstructionConfig,
    pub workers: usize,
    pub timeout: Duration,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            base: ReconstructionConfig::default(),
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

#[derive(Clone)]
struct AppState {
    base: Arc<ReconstructionConfig>,
    pool: Arc<Semaphore>,
    timeout: Duration,
}

pub fn router(config: ServiceConfig) -> Router {
    let state = AppState {
        base: Arc::new(config.base),
        pool: Arc::new(Semaphore::new(config.workers.max(1))),
        timeout: config.timeout,
    };
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/validate", post(validate))
        .route("/v1/reconstruct", post(reconstruct_handler))
        .layer(DefaultBodyLimit::max(BODY_LIMIT))
        .with_state(state)
}

pub async fn serve(listener: tokio::net::TcpListener, config: ServiceConfig) -> std::io::Result<()> {
    axum::serve(listener, router(config))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok", "version": env!("CARGO_PKG_VERSION") }))
}

fn parse_report(e: &ParseError) -> ValidationReport {
    ValidationReport {
        violations: vec![Violation {
            code: e.code.clone(),
            location: e.path.clone(),
            message: e.message.clone(),
        }],
        warnings: Vec::new(),
    }
}

fn report_response(status: StatusCode, report: &ValidationReport) -> Response {
    (status, Json(report)).into_response()
}

#[derive(Serialize)]
struct Failure<'a> {
    code: &'a str,
    message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<Value>,
}

fn failure(status: StatusCode, code: &str, message: String, diagnostics: Option<Value>) -> Response {
    (
        status,
        Json(Failure {
            code,
            message,
            diagnostics,
        }),
    )
        .into_response()
}

async fn validate(State(state): State<AppState>, body: Bytes) -> Response {
    let doc = match parse(&body) {
        Ok(d) => d,
        Err(e) => return report_response(StatusCode::BAD_REQUEST, &parse_report(&e)),
    };
    let report = validate_with_resolution(&doc, state.base.working_resolution);
    let status = if report.is_valid() {
        StatusCode::OK
    } else {
        StatusCode::BAD_REQUEST
    };
    report_response(status, &report)
}

/// Splits a request body into document bytes and config overrides. A JSON
/// object with a `document` key is a wrapper; anything else is the
/// document itself.
fn split_request(body: &Bytes) -> (Vec<u8>, Value) {
    if let Ok(Value::Object(mut map)) = serde_json::from_slice::<Value>(body) {
        if let Some(doc) = map.remove("document") {
            let overrides = map.remove("config").unwrap_or(Value::Null);
            return (serde_json::to_vec(&doc).expect("value serializes"), overrides);
        }
    }
    (body.to_vec(), Value::Null)
}

async fn reconstruct_handler(State(state): State<AppState>, body: Bytes) -> Response {
    let started = Instant::now();
    let (doc_bytes, overrides) = split_request(&body);
    let doc = match parse(&doc_bytes) {
        Ok(d) => d,
        Err(e) => return report_response(StatusCode::BAD_REQUEST, &parse_report(&e)),
    };
    let config = match merge_config(&state.base, &overrides) {
        Ok(c) => c,
        Err(e) => return failure(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string(), None),
    };

    let progress: Arc<Mutex<Option<ValidationReport>>> = Arc::default();
    let task_progress = Arc::clone(&progress);
    let pool = Arc::clone(&state.pool);
    let work = async move {
        let permit = pool.acquire_owned().await.expect("semaphore never closed");
        tokio::task::spawn_blocking(move || {
            let _permit = permit;
            let report = validate_with_resolution(&doc, config.working_resolution);
            let valid = report.is_valid();
            *task_progress.lock().expect("progress lock") = Some(report.clone());
            if !valid {
                return Err(Error::Invalid(report));
            }
            reconstruct(&doc, &config).map(|rec| (rec.report, encode_glb(&rec.mesh)))
        })
        .await
    };

    let outcome = match tokio::time::timeout(state.timeout, work).await {
        Ok(Ok(r)) => r,
        Ok(Err(join)) => {
            return failure(
                StatusCode::INTERNAL_SERVER_ERROR,
                "internal",
                format!("reconstruction task failed: {join}"),
                None,
            )
        }
        Err(_) => {
            let validation = progress.lock().expect("progress lock").clone();
            let diagnostics = json!({
                "elapsed_ms": started.elapsed().as_secs_f64() * 1e3,
                "timeout_ms": state.timeout.as_secs_f64() * 1e3,
                "stage": if validation.is_some() { "reconstruct" } else { "queued" },
                "validation": validation,
            });
            return failure(
                StatusCode::GATEWAY_TIMEOUT,
                "timeout",
                format!("reconstruction exceeded {} ms", state.timeout.as_millis()),
                Some(diagnostics),
            );
        }
    };
    match outcome {
        Ok((report, glb)) => {
            let json = serde_json::to_vec(&report).expect("report serializes");
            let body = multipart_body(&[("application/json", &json), (GLB_CONTENT_TYPE, &glb)]);
            (
                StatusCode::OK,
                [(
                    header::CONTENT_TYPE,
                    format!("multipart/mixed; boundary={MULTIPART_BOUNDARY}"),
                )],
                Body::from(body),
            )
                .into_response()
        }
        Err(Error::Invalid(report)) => report_response(StatusCode::BAD_REQUEST, &report),
        Err(e) => failure(StatusCode::UNPROCESSABLE_ENTITY, e.code(), e.to_string(), None),
    }
}

fn multipart_body(parts: &[(&str, &[u8])]) -> Vec<u8> {
    let mut out = Vec::new();
    for (content_type, data) in parts {
        out.extend_from_slice(format!("--{MULTIPART_BOUNDARY}\r\n").as_bytes());
        out.extend_from_slice(format!("Content-Type: {content_type}\r\n").as_bytes());
        out.extend_from_slice(format!("Content-Length: {}\r\n\r\n", data.len()).as_bytes());
        out.extend_from_slice(data);
        out.extend_from_slice(b"\r\n");
    }
    out.extend_from_slice(format!("--{MULTIPART_BOUNDARY}--\r\n").as_bytes());
    out
}

/// Splits a body produced by this service into `(content type, bytes)` parts.
pub fn split_multipart(body: &[u8]) -> Option<Vec<(String, Vec<u8>)>> {
    let mut parts = Vec::new();
    let mut rest = body;
    let delim = format!("--{MULTIPART_BOUNDARY}");
    loop {
        rest = rest.strip_prefix(delim.as_bytes())?;
        if rest.starts_with(b"--") {
            return Some(parts);
        }
        rest = rest.strip_prefix(b"\r\n")?;
        let header_end = rest.windows(4).position(|w| w == b"\r\n\r\n")?;
        let headers = std::str::from_utf8(&rest[..header_end]).ok()?;
        let mut content_type = String::new();
        let mut len = None;
        for line in headers.split("\r\n") {
            let (k, v) = line.split_once(':')?;
            match k.trim().to_ascii_lowercase().as_str() {
                "content-type" => content_type = v.trim().to_string(),
                "content-length" => len = v.trim().parse::<usize>().ok(),
                _ => {}
            }
        }
        let start = header_end + 4;
        let len = len?;
        parts.push((content_type, rest.get(start..start + len)?.to_vec()));
        rest = rest[start + len..].strip_prefix(b"\r\n")?;
    }
}
