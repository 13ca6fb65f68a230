//! HTTP/JSON gateway. Every run owns a stepped simulation clock; mutating
//! calls on a run are serialised through its lock, reads take snapshots.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Notify;

use pipebot_core::events::RunEvent;
use pipebot_core::mission::parse_mission;
use pipebot_core::replanner::{MissionRun, RunConfig};
use pipebot_core::sewer::{PipeId, SewerGraph};
use pipebot_core::simulator::{GroundTruth, ObstacleKind};

/// Longest a client may park on the events endpoint.
const MAX_WAIT_MS: u64 = 60_000;
const DEFAULT_WAIT_MS: u64 = 20_000;

struct Slot {
    run: MissionRun,
    running: bool,
}

struct RunHandle {
    slot: Mutex<Slot>,
    changed: Notify,
}

impl RunHandle {
    fn lock(&self) -> MutexGuard<'_, Slot> {
        self.slot.lock().unwrap_or_else(|e| e.into_inner())
    }
}

struct Inner {
    world: SewerGraph,
    runs: Mutex<BTreeMap<u64, Arc<RunHandle>>>,
    next_id: AtomicU64,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(world: SewerGraph) -> Self {
        AppState(Arc::new(Inner { world, runs: Mutex::new(BTreeMap::new()), next_id: AtomicU64::new(1) }))
    }

    fn run(&self, id: u64) -> Result<Arc<RunHandle>, ApiError> {
        let runs = self.0.runs.lock().unwrap_or_else(|e| e.into_inner());
        runs.get(&id).cloned().ok_or(ApiError::NotFound(id))
    }
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(u64),
    Conflict(String),
    Invalid(String),
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (code, msg) = match self {
            ApiError::NotFound(id) => (StatusCode::NOT_FOUND, format!("no run {id}")),
            ApiError::Conflict(m) => (StatusCode::CONFLICT, m),
            ApiError::Invalid(m) => (StatusCode::UNPROCESSABLE_ENTITY, m),
        };
        (code, Json(json!({ "error": msg }))).into_response()
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/world", get(world))
        .route("/mission", post(create_mission))
        .route("/run/{id}/start", post(start))
        .route("/run/{id}/pause", post(pause))
        .route("/run/{id}/step", post(step))
        .route("/run/{id}/fault", post(fault))
        .route("/run/{id}/events", get(events))
        .route("/run/{id}/state", get(run_state))
        .with_state(state)
}

async fn world(State(st): State<AppState>) -> Json<SewerGraph> {
    Json(st.0.world.clone())
}

#[derive(Deserialize)]
struct CreateParams {
    seed: Option<u64>,
}

async fn create_mission(
    State(st): State<AppState>,
    Query(q): Query<CreateParams>,
    body: String,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let world = &st.0.world;
    let mission = parse_mission(&body, world).map_err(|e| ApiError::Invalid(e.to_string()))?;
    let gt = GroundTruth::new(world.clone(), q.seed.unwrap_or(0));
    let run = MissionRun::new(mission, world.clone(), gt, Vec::new(), RunConfig::default());
    let status = run.status;
    let id = st.0.next_id.fetch_add(1, Ordering::Relaxed);
    let handle = Arc::new(RunHandle { slot: Mutex::new(Slot { run, running: false }), changed: Notify::new() });
    st.0.runs.lock().unwrap_or_else(|e| e.into_inner()).insert(id, handle);
    Ok((StatusCode::CREATED, Json(json!({ "id": id, "status": status }))))
}

fn control_reply(slot: &Slot) -> Json<Value> {
    Json(json!({ "status": slot.run.status, "running": slot.running, "clock_s": slot.run.sim.robot.clock_s }))
}

fn ensure_live(slot: &Slot) -> Result<(), ApiError> {
    if slot.run.status.is_terminal() {
        return Err(ApiError::Conflict(format!("run already finished with {:?}", slot.run.status)));
    }
    Ok(())
}

async fn drive(handle: Arc<RunHandle>) {
    loop {
        {
            let mut slot = handle.lock();
            if !slot.running {
                break;
            }
            if !slot.run.tick() {
                slot.running = false;
            }
        }
        handle.changed.notify_waiters();
        tokio::task::yield_now().await;
    }
    handle.changed.notify_waiters();
}

async fn start(State(st): State<AppState>, Path(id): Path<u64>) -> Result<Json<Value>, ApiError> {
    let handle = st.run(id)?;
    let reply = {
        let mut slot = handle.lock();
        ensure_live(&slot)?;
        if slot.running {
            return Err(ApiError::Conflict("run is already running".into()));
        }
        slot.running = true;
        control_reply(&slot)
    };
    tokio::spawn(drive(handle));
    Ok(reply)
}

async fn pause(State(st): State<AppState>, Path(id): Path<u64>) -> Result<Json<Value>, ApiError> {
    let handle = st.run(id)?;
    let mut slot = handle.lock();
    if !slot.running {
        return Err(ApiError::Conflict("run is not running".into()));
    }
    slot.running = false;
    Ok(control_reply(&slot))
}

#[derive(Deserialize)]
struct StepParams {
    n: Option<u32>,
}

async fn step(
    State(st): State<AppState>,
    Path(id): Path<u64>,
    Query(q): Query<StepParams>,
) -> Result<Json<Value>, ApiError> {
    let handle = st.run(id)?;
    let reply = {
        let mut slot = handle.lock();
        ensure_live(&slot)?;
        if slot.running {
            return Err(ApiError::Conflict("pause the run before stepping".into()));
        }
        let mut ticks = 0;
        for _ in 0..q.n.unwrap_or(1) {
            ticks += 1;
            if !slot.run.tick() {
                break;
            }
        }
        let mut reply = control_reply(&slot);
        reply["ticks"] = json!(ticks);
        reply
    };
    handle.changed.notify_waiters();
    Ok(reply)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FaultBody {
    pipe: PipeId,
    kind: ObstacleKind,
    position_cm: f64,
}

async fn fault(State(st): State<AppState>, Path(id): Path<u64>, body: String) -> Result<Json<Value>, ApiError> {
    let handle = st.run(id)?;
    let f: FaultBody = serde_json::from_str(&body).map_err(|e| ApiError::Invalid(e.to_string()))?;
    let mut slot = handle.lock();
    ensure_live(&slot)?;
    slot.run.inject_fault(f.pipe, f.kind, f.position_cm).map_err(|e| ApiError::Invalid(e.to_string()))?;
    Ok(Json(json!({ "pipe": f.pipe, "kind": f.kind, "position_cm": f.position_cm })))
}

#[derive(Deserialize)]
struct EventParams {
    since: Option<u64>,
    wait_ms: Option<u64>,
}

/// Events after `since`. With nothing new on a live run, waits up to
/// `wait_ms` for the next tick.
async fn events(
    State(st): State<AppState>,
    Path(id): Path<u64>,
    Query(q): Query<EventParams>,
) -> Result<Json<Vec<RunEvent>>, ApiError> {
    let handle = st.run(id)?;
    let since = q.since.unwrap_or(0);
    let wait = Duration::from_millis(q.wait_ms.unwrap_or(DEFAULT_WAIT_MS).min(MAX_WAIT_MS));
    let notified = handle.changed.notified();
    tokio::pin!(notified);
    notified.as_mut().enable();
    {
        let slot = handle.lock();
        let fresh = slot.run.log.since(since);
        if !fresh.is_empty() || slot.run.status.is_terminal() || wait.is_zero() {
            return Ok(Json(fresh.to_vec()));
        }
    }
    let _ = tokio::time::timeout(wait, notified).await;
    let slot = handle.lock();
    Ok(Json(slot.run.log.since(since).to_vec()))
}

async fn run_state(State(st): State<AppState>, Path(id): Path<u64>) -> Result<Json<Value>, ApiError> {
    let handle = st.run(id)?;
    let slot = handle.lock();
    let mut v = serde_json::to_value(slot.run.snapshot()).map_err(|e| ApiError::Invalid(e.to_string()))?;
    v["running"] = json!(slot.running);
    Ok(Json(v))
}
