//! HTTP trial service for human participants.
//!
//! Chains advance through [`HumanBridge`]; every state change is appended to
//! the trial log, which is replayed on restart. Judgment records go to their
//! own JSONL files in the same directory.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::json;

use swp_core::agents::human::{HumanBridge, SubmitOutcome};
use swp_core::engine::{read_log, Clock, EngineError, Experiment, JsonlSink, SharedExperiment, SystemClock, TrialId};
use swp_core::ratings::{FeatureRecord, RatingRecord, SimilarityRecord};

use crate::config::Config;
use crate::error::{CliError, Classify};
use crate::instructions::{merged, Instructions};
use crate::stages::{ensure_dir, FEATURES_FILE, RATINGS_FILE, SIMILARITY_FILE, TRIALS_FILE};

pub struct AppState {
    bridge: HumanBridge,
    dir: PathBuf,
    experiment_id: String,
    instructions: BTreeMap<String, Instructions>,
    /// Serializes appends to the judgment files.
    write_lock: Mutex<()>,
}

impl AppState {
    pub fn experiment(&self) -> &SharedExperiment {
        self.bridge.experiment()
    }
}

/// Opens the experiment in `out`, replaying an existing trial log so chains
/// resume where they stopped.
pub fn open(cfg: &Config, out: &Path, clock: Arc<dyn Clock>) -> Result<Arc<AppState>, CliError> {
    cfg.validate()?;
    ensure_dir(out)?;
    let log = out.join(TRIALS_FILE);
    let records = if log.exists() {
        read_log(&log).map_err(|e| CliError::Input(format!("refusing to resume from {}: {e}", log.display())))?
    } else {
        Vec::new()
    };
    let sink = JsonlSink::append(&log).runtime(log.display())?;
    let exp = Experiment::replay(cfg.experiment.clone(), cfg.validator()?, records, Box::new(sink))
        .map_err(|e| CliError::Input(format!("refusing to resume from {}: {e}", log.display())))?;
    let state = AppState {
        bridge: HumanBridge::new(SharedExperiment::new(exp), clock),
        dir: out.to_path_buf(),
        experiment_id: cfg.experiment_id.clone(),
        instructions: merged(&cfg.server.instructions),
        write_lock: Mutex::new(()),
    };
    Ok(Arc::new(state))
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/api/health", get(health))
        .route("/api/participant/{id}/next-trial", get(next_trial))
        .route("/api/trial/{id}/response", post(submit))
        .route("/api/rating", post(rating))
        .route("/api/similarity", post(similarity))
        .route("/api/feature-rating", post(feature))
        .route("/api/instructions/{kind}", get(instructions))
        .with_state(state)
}

pub fn app(cfg: &Config, out: &Path, clock: Arc<dyn Clock>) -> Result<Router, CliError> {
    Ok(router(open(cfg, out, clock)?))
}

/// Serves until ctrl-c.
pub async fn serve(cfg: &Config, out: &Path, bind: Option<&str>) -> Result<(), CliError> {
    let router = app(cfg, out, Arc::new(SystemClock))?;
    let addr = bind.unwrap_or(&cfg.server.bind);
    let addr: SocketAddr = addr.parse().config(format!("bind address {addr:?}"))?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .runtime(format!("binding {addr}"))?;
    eprintln!("serving {} on http://{addr}", out.display());
    axum::serve(listener, router)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .runtime("server")
}

struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(json!({ "error": self.1 }))).into_response()
    }
}

impl From<EngineError> for ApiError {
    fn from(e: EngineError) -> Self {
        let code = match e {
            EngineError::UnknownTrial(_) => StatusCode::NOT_FOUND,
            EngineError::TrialNotOpen(_) | EngineError::ChainComplete(_) => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(code, e.to_string())
    }
}

type Api = Result<Response, ApiError>;

async fn health(State(s): State<Arc<AppState>>) -> Json<serde_json::Value> {
    let exp = s.bridge.experiment().lock();
    Json(json!({
        "status": "ok",
        "complete": exp.is_complete(),
        "accepted": exp.accepted_count(),
        "chains": exp.chains().len(),
    }))
}

async fn next_trial(State(s): State<Arc<AppState>>, UrlPath(id): UrlPath<String>) -> Api {
    Ok(Json(s.bridge.poll(&id)?).into_response())
}

#[derive(Deserialize)]
struct ResponseBody {
    response: String,
}

async fn submit(State(s): State<Arc<AppState>>, UrlPath(id): UrlPath<TrialId>, Json(body): Json<ResponseBody>) -> Api {
    let outcome = s.bridge.submit(id, &body.response)?;
    let code = match outcome {
        SubmitOutcome::Accepted => StatusCode::OK,
        _ => StatusCode::UNPROCESSABLE_ENTITY,
    };
    Ok((code, Json(outcome)).into_response())
}

impl AppState {
    fn append<T: Serialize>(&self, file: &str, mut rec: T, stamp: impl FnOnce(&mut T, &str)) -> Api {
        stamp(&mut rec, &self.experiment_id);
        let line = serde_json::to_string(&rec).map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        let _guard = self.write_lock.lock().unwrap_or_else(|p| p.into_inner());
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.dir.join(file))
            .and_then(|mut f| writeln!(f, "{line}"))
            .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?;
        Ok((StatusCode::CREATED, Json(json!({ "status": "recorded" }))).into_response())
    }
}

fn invalid(msg: String) -> ApiError {
    ApiError(StatusCode::UNPROCESSABLE_ENTITY, msg)
}

async fn rating(State(s): State<Arc<AppState>>, Json(r): Json<RatingRecord>) -> Api {
    if !(1..=5).contains(&r.value) {
        return Err(invalid(format!("rating {} outside 1..=5", r.value)));
    }
    s.append(RATINGS_FILE, r, |r, id| r.experiment = id.into())
}

async fn similarity(State(s): State<Arc<AppState>>, Json(r): Json<SimilarityRecord>) -> Api {
    if !r.value.is_valid() {
        return Err(invalid(format!("similarity {:?} out of range", r.value)));
    }
    if r.tone_a == r.tone_b {
        return Err(invalid("similarity needs two distinct tones".into()));
    }
    s.append(SIMILARITY_FILE, r, |r, id| r.experiment = id.into())
}

async fn feature(State(s): State<Arc<AppState>>, Json(r): Json<FeatureRecord>) -> Api {
    if !(1..=5).contains(&r.value) {
        return Err(invalid(format!("rating {} outside 1..=5", r.value)));
    }
    s.append(FEATURES_FILE, r, |r, id| r.experiment = id.into())
}

async fn instructions(State(s): State<Arc<AppState>>, UrlPath(kind): UrlPath<String>) -> Api {
    match s.instructions.get(&kind) {
        Some(page) => Ok(Json(page).into_response()),
        None => Err(ApiError(StatusCode::NOT_FOUND, format!("no instructions for {kind:?}"))),
    }
}
