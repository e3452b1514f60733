//! HTTP job service.
//!
//! Jobs are kept in memory only and are lost on restart. Each worker runs
//! one job at a time on the blocking thread pool; submissions beyond the
//! queue bound are refused with 429.

use std::collections::HashMap;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::mpsc;

use crate::job::{run_request, RunEvent, RunProgress, StopReason, SynthesisRequest};
use crate::kinematics::{trace, Linkage};
use crate::solution::Solution;

/// Environment variable that overrides the worker count.
pub const WORKERS_ENV: &str = "LINKFORGE_WORKERS";

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceConfig {
    pub workers: usize,
    /// Jobs that may wait for a worker before submissions are refused.
    pub queue_capacity: usize,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            workers: 2,
            queue_capacity: 16,
        }
    }
}

impl ServiceConfig {
    /// Apply [`WORKERS_ENV`] when it holds a positive integer.
    pub fn with_env(mut self) -> Self {
        if let Some(n) = std::env::var(WORKERS_ENV)
            .ok()
            .and_then(|v| v.trim().parse().ok())
            .filter(|&n| n > 0)
        {
            self.workers = n;
        }
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "camelCase")]
pub enum JobState {
    Queued,
    Running { progress: RunProgress },
    Done { objective: f64, stop: StopReason },
    Failed { error: String },
    Cancelled,
}

impl JobState {
    pub fn is_terminal(&self) -> bool {
        matches!(
            self,
            JobState::Done { .. } | JobState::Failed { .. } | JobState::Cancelled
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IncumbentRecord {
    /// Seconds since the job started running.
    pub wall_clock: f64,
    pub objective: f64,
    pub linkage: Linkage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct IncumbentSummary {
    pub wall_clock: f64,
    pub objective: f64,
    pub nodes: usize,
}

/// What `GET /api/jobs/{id}` returns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct JobView {
    pub id: String,
    pub request: SynthesisRequest,
    #[serde(flatten)]
    pub state: JobState,
    pub incumbents: Vec<IncumbentSummary>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ApiError {
    pub error: String,
    /// Machine-readable cause.
    pub reason: String,
}

struct Job {
    request: SynthesisRequest,
    state: JobState,
    incumbents: Vec<IncumbentRecord>,
    solution: Option<Solution>,
    cancel: Arc<AtomicBool>,
}

impl Job {
    fn view(&self, id: &str) -> JobView {
        JobView {
            id: id.to_string(),
            request: self.request.clone(),
            state: self.state.clone(),
            incumbents: self
                .incumbents
                .iter()
                .map(|i| IncumbentSummary {
                    wall_clock: i.wall_clock,
                    objective: i.objective,
                    nodes: i.linkage.len(),
                })
                .collect(),
        }
    }
}

type Jobs = Arc<Mutex<HashMap<String, Job>>>;

#[derive(Clone)]
pub struct AppState {
    jobs: Jobs,
    queue: mpsc::Sender<String>,
    next_id: Arc<AtomicU64>,
}

fn fail(status: StatusCode, reason: &str, error: impl Into<String>) -> Response {
    (
        status,
        Json(ApiError {
            error: error.into(),
            reason: reason.into(),
        }),
    )
        .into_response()
}

fn unknown(id: &str) -> Response {
    fail(
        StatusCode::NOT_FOUND,
        "unknownJob",
        format!("no job with id {id}"),
    )
}

/// Build the router and start `cfg.workers` job workers on the current
/// tokio runtime.
pub fn app(cfg: &ServiceConfig) -> Router {
    let (tx, rx) = mpsc::channel(cfg.queue_capacity.max(1));
    let state = AppState {
        jobs: Arc::default(),
        queue: tx,
        next_id: Arc::new(AtomicU64::new(1)),
    };
    let rx = Arc::new(tokio::sync::Mutex::new(rx));
    for _ in 0..cfg.workers.max(1) {
        tokio::spawn(worker(state.jobs.clone(), rx.clone()));
    }
    Router::new()
        .route(
            "/api/health",
            get(|| async { Json(serde_json::json!({ "status": "ok" })) }),
        )
        .route("/api/jobs", post(submit))
        .route("/api/jobs/{id}", get(job))
        .route("/api/jobs/{id}/solution", get(solution))
        .route("/api/jobs/{id}/trace", get(latest_trace))
        .route("/api/jobs/{id}/cancel", post(cancel))
        .with_state(state)
}

/// Serve on `listener` until the process ends.
pub async fn serve(listener: tokio::net::TcpListener, cfg: ServiceConfig) -> std::io::Result<()> {
    log::info!(
        "serving on {} with {} workers",
        listener.local_addr()?,
        cfg.workers
    );
    axum::serve(listener, app(&cfg)).await
}

async fn worker(jobs: Jobs, queue: Arc<tokio::sync::Mutex<mpsc::Receiver<String>>>) {
    loop {
        let Some(id) = queue.lock().await.recv().await else {
            return;
        };
        let jobs = jobs.clone();
        let _ = tokio::task::spawn_blocking(move || run_job(&jobs, &id)).await;
    }
}

fn run_job(jobs: &Jobs, id: &str) {
    let (request, cancel) = {
        let mut all = jobs.lock().unwrap();
        let Some(job) = all.get_mut(id) else { return };
        if job.state != JobState::Queued {
            return;
        }
        job.state = JobState::Running {
            progress: RunProgress::default(),
        };
        (job.request.clone(), job.cancel.clone())
    };
    let started = Instant::now();
    let result = run_request(&request, Some(cancel), 1, |event| {
        let mut all = jobs.lock().unwrap();
        let Some(job) = all.get_mut(id) else { return };
        match event {
            RunEvent::Progress(p) => {
                if let JobState::Running { progress } = &mut job.state {
                    *progress = p;
                }
            }
            RunEvent::Incumbent { objective, linkage } => {
                if job
                    .incumbents
                    .last()
                    .is_none_or(|last| objective < last.objective)
                {
                    job.incumbents.push(IncumbentRecord {
                        wall_clock: started.elapsed().as_secs_f64(),
                        objective,
                        linkage: linkage.clone(),
                    });
                }
            }
        }
    });
    let mut all = jobs.lock().unwrap();
    let Some(job) = all.get_mut(id) else { return };
    job.state = match result {
        Ok(out) if out.stop == StopReason::Cancelled => JobState::Cancelled,
        Ok(out) => match out.solution {
            Some(s) => {
                let state = JobState::Done {
                    objective: s.objective.total,
                    stop: out.stop,
                };
                job.solution = Some(s);
                state
            }
            None => JobState::Failed {
                error: "no feasible design was found within the budget".into(),
            },
        },
        Err(e) => JobState::Failed {
            error: e.to_string(),
        },
    };
    log::info!("job {id} finished: {:?}", job.state);
}

async fn submit(State(state): State<AppState>, body: Bytes) -> Response {
    let request: SynthesisRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return fail(StatusCode::BAD_REQUEST, "invalidJson", e.to_string()),
    };
    if let Err(e) = request.synthesis_config() {
        return fail(StatusCode::BAD_REQUEST, "invalidRequest", e.to_string());
    }
    let id = format!("job-{:06}", state.next_id.fetch_add(1, Ordering::Relaxed));
    let job = Job {
        request,
        state: JobState::Queued,
        incumbents: Vec::new(),
        solution: None,
        cancel: Arc::new(AtomicBool::new(false)),
    };
    state.jobs.lock().unwrap().insert(id.clone(), job);
    if state.queue.try_send(id.clone()).is_err() {
        state.jobs.lock().unwrap().remove(&id);
        return fail(
            StatusCode::TOO_MANY_REQUESTS,
            "queueFull",
            "the job queue is full; retry later",
        );
    }
    (StatusCode::CREATED, Json(serde_json::json!({ "id": id }))).into_response()
}

async fn job(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    match state.jobs.lock().unwrap().get(&id) {
        Some(job) => Json(job.view(&id)).into_response(),
        None => unknown(&id),
    }
}

async fn solution(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let all = state.jobs.lock().unwrap();
    let Some(job) = all.get(&id) else {
        return unknown(&id);
    };
    match &job.solution {
        Some(s) => Json(s).into_response(),
        None => fail(
            StatusCode::NOT_FOUND,
            "notDone",
            format!("job {id} has no solution yet"),
        ),
    }
}

#[derive(Deserialize)]
struct TraceQuery {
    samples: Option<usize>,
}

async fn latest_trace(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Query(q): Query<TraceQuery>,
) -> Response {
    let (linkage, default_samples) = {
        let all = state.jobs.lock().unwrap();
        let Some(job) = all.get(&id) else {
            return unknown(&id);
        };
        match job.incumbents.last() {
            Some(inc) => (inc.linkage.clone(), job.request.t),
            None => {
                return fail(
                    StatusCode::NOT_FOUND,
                    "noIncumbent",
                    format!("job {id} has no incumbent yet"),
                )
            }
        }
    };
    let samples = q.samples.unwrap_or(default_samples);
    if samples == 0 {
        return fail(
            StatusCode::BAD_REQUEST,
            "invalidSamples",
            "samples must be positive",
        );
    }
    match trace(&linkage, samples) {
        Ok(tr) => Json(tr).into_response(),
        Err(e) => fail(
            StatusCode::UNPROCESSABLE_ENTITY,
            "traceFailed",
            e.to_string(),
        ),
    }
}

async fn cancel(State(state): State<AppState>, Path(id): Path<String>) -> Response {
    let mut all = state.jobs.lock().unwrap();
    let Some(job) = all.get_mut(&id) else {
        return unknown(&id);
    };
    if job.state.is_terminal() {
        return fail(
            StatusCode::CONFLICT,
            "terminal",
            format!("job {id} already finished"),
        );
    }
    job.cancel.store(true, Ordering::Relaxed);
    if job.state == JobState::Queued {
        job.state = JobState::Cancelled;
    }
    (StatusCode::ACCEPTED, Json(job.view(&id))).into_response()
}
