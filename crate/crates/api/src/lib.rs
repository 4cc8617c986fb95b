//! HTTP JSON front end. Request bodies are the same JSON documents the
//! command-line tool accepts with `--input`; responses wrap the engine output
//! as `{engine_version, elapsed_ms, warnings, result}`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::Router;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tower_http::cors::{AllowOrigin, CorsLayer};

use repshare_core::service::format::to_json;
use repshare_core::service::{
    run_compare, run_error_profile, run_mc_validate, run_power, run_thresholds, McValidateRequest, Output,
    ENGINE_VERSION,
};

/// MC requests above this many replicates run as background jobs.
pub const SYNC_REPLICATE_LIMIT: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub host: String,
    pub port: u16,
    /// Worker threads for numerical work; all cores when absent.
    pub threads: Option<usize>,
    /// Allowed CORS origin, or "*" for any. No CORS headers when absent.
    pub cors_origin: Option<String>,
}

impl Default for Config {
    fn default() -> Self {
        Self { host: "127.0.0.1".into(), port: 8080, threads: None, cors_origin: None }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let c: Config = toml::from_str(text).map_err(|e| e.to_string())?;
        if c.threads == Some(0) {
            return Err("threads must be positive".into());
        }
        c.cors()?;
        Ok(c)
    }

    pub fn cors(&self) -> Result<Option<CorsLayer>, String> {
        let Some(origin) = &self.cors_origin else { return Ok(None) };
        let allow = if origin == "*" {
            AllowOrigin::any()
        } else {
            AllowOrigin::exact(HeaderValue::from_str(origin).map_err(|e| format!("cors_origin: {e}"))?)
        };
        Ok(Some(
            CorsLayer::new()
                .allow_origin(allow)
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([header::CONTENT_TYPE]),
        ))
    }
}

enum Job {
    Running,
    Done(StatusCode, String),
}

#[derive(Clone, Default)]
pub struct AppState {
    jobs: Arc<Mutex<Jobs>>,
}

#[derive(Default)]
struct Jobs {
    next: u64,
    table: HashMap<String, Job>,
}

impl AppState {
    fn create_job(&self) -> String {
        let mut jobs = self.jobs.lock().expect("job table poisoned");
        jobs.next += 1;
        let id = format!("job-{}", jobs.next);
        jobs.table.insert(id.clone(), Job::Running);
        id
    }

    fn finish_job(&self, id: &str, status: StatusCode, body: String) {
        self.jobs.lock().expect("job table poisoned").table.insert(id.to_string(), Job::Done(status, body));
    }
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    engine_version: &'a str,
    elapsed_ms: u64,
    warnings: &'a [String],
    result: &'a T,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: &'a str,
    kind: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    path: Option<&'a str>,
}

fn json(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn error(status: StatusCode, kind: &str, message: &str, path: Option<&str>) -> (StatusCode, String) {
    (status, to_json(&ErrorBody { error: message, kind, path }))
}

fn parse<T: DeserializeOwned>(body: &[u8]) -> Result<T, (StatusCode, String)> {
    let mut de = serde_json::Deserializer::from_slice(body);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        error(StatusCode::BAD_REQUEST, "schema", &e.inner().to_string(), Some(&path))
    })?;
    de.end().map_err(|e| error(StatusCode::BAD_REQUEST, "schema", &e.to_string(), None))?;
    Ok(value)
}

fn envelope<T: Serialize>(out: repshare_core::Result<Output<T>>, start: Instant) -> (StatusCode, String) {
    match out {
        Ok(o) => {
            let elapsed_ms = start.elapsed().as_millis() as u64;
            let env = Envelope { engine_version: ENGINE_VERSION, elapsed_ms, warnings: &o.warnings, result: &o.result };
            (StatusCode::OK, to_json(&env))
        }
        Err(e) if e.is_input_error() => error(StatusCode::UNPROCESSABLE_ENTITY, "invalid_input", &e.to_string(), None),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "solver_failure", &e.to_string(), None),
    }
}

async fn compute<Req, T>(req: Req, exec: fn(&Req) -> repshare_core::Result<Output<T>>) -> (StatusCode, String)
where
    Req: Send + 'static,
    T: Serialize + Send + 'static,
{
    let start = Instant::now();
    match tokio::task::spawn_blocking(move || envelope(exec(&req), start)).await {
        Ok(r) => r,
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, "solver_failure", &e.to_string(), None),
    }
}

async fn respond<Req, T>(body: Bytes, exec: fn(&Req) -> repshare_core::Result<Output<T>>) -> Response
where
    Req: DeserializeOwned + Send + 'static,
    T: Serialize + Send + 'static,
{
    let (status, body) = match parse::<Req>(&body) {
        Ok(req) => compute(req, exec).await,
        Err(e) => e,
    };
    json(status, body)
}

async fn thresholds(body: Bytes) -> Response {
    respond(body, run_thresholds).await
}

async fn power_curve(body: Bytes) -> Response {
    respond(body, run_power).await
}

async fn error_profile(body: Bytes) -> Response {
    respond(body, run_error_profile).await
}

async fn compare(body: Bytes) -> Response {
    respond(body, run_compare).await
}

#[derive(Serialize)]
struct JobTicket<'a> {
    job_id: &'a str,
    status: &'a str,
    poll: String,
}

async fn mc_validate(State(state): State<AppState>, body: Bytes) -> Response {
    let req: McValidateRequest = match parse(&body) {
        Ok(r) => r,
        Err((status, body)) => return json(status, body),
    };
    if req.replicates <= SYNC_REPLICATE_LIMIT {
        let (status, body) = compute(req, run_mc_validate).await;
        return json(status, body);
    }
    let id = state.create_job();
    let job_state = state.clone();
    let job_id = id.clone();
    tokio::spawn(async move {
        let (status, body) = compute(req, run_mc_validate).await;
        job_state.finish_job(&job_id, status, body);
    });
    let ticket = JobTicket { job_id: &id, status: "running", poll: format!("/v1/jobs/{id}") };
    json(StatusCode::ACCEPTED, to_json(&ticket))
}

async fn job(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let jobs = state.jobs.lock().expect("job table poisoned");
    match jobs.table.get(&id) {
        Some(Job::Running) => {
            let ticket = JobTicket { job_id: &id, status: "running", poll: format!("/v1/jobs/{id}") };
            json(StatusCode::ACCEPTED, to_json(&ticket))
        }
        Some(Job::Done(status, body)) => json(*status, body.clone()),
        None => {
            let (status, body) = error(StatusCode::NOT_FOUND, "unknown_job", &format!("no job {id}"), None);
            json(status, body)
        }
    }
}

#[derive(Serialize)]
struct Health {
    status: &'static str,
    version: &'static str,
}

async fn health() -> Response {
    json(StatusCode::OK, to_json(&Health { status: "ok", version: ENGINE_VERSION }))
}

pub fn router(state: AppState, cors: Option<CorsLayer>) -> Router {
    let r = Router::new()
        .route("/v1/health", get(health))
        .route("/v1/thresholds", post(thresholds))
        .route("/v1/power-curve", post(power_curve))
        .route("/v1/error-profile", post(error_profile))
        .route("/v1/compare", post(compare))
        .route("/v1/mc-validate", post(mc_validate))
        .route("/v1/jobs/{id}", get(job))
        .with_state(state);
    match cors {
        Some(layer) => r.layer(layer),
        None => r,
    }
}
