//! HTTP control plane for anytime runs.
//!
//! | method | path | body / result |
//! |---|---|---|
//! | POST | `/instances` | canonical instance document → instance info |
//! | GET | `/instances` | list of instance info |
//! | POST | `/runs` | `{instance, config, paused?}` → run handle |
//! | GET | `/runs/{id}` | run handle |
//! | GET | `/runs/{id}/events` | server-sent events: `point` per event, then `end` |
//! | POST | `/runs/{id}/control` | `{action: pause\|resume\|stop}` → `{status}` |
//! | POST | `/runs/{id}/whatif` | `{costs?, weights?, config?}` → child run handle |
//! | GET | `/runs/{id}/archive` | current non-dominated archive |
//!
//! Errors come back as `{error, message}` with status 400 or 404.

mod registry;

use std::convert::Infallible;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use biobj_core::anytime::{RunConfig, RunStats, Termination};
use biobj_core::model::{InstanceDoc, NrpInstance, Point, Solution};
use futures::stream::{self, Stream};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use registry::{InstanceInfo, Registry, RegistryError, RunEntry, Status, StreamEvent, WhatIfEdit};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    kind: &'static str,
    message: String,
}

impl ApiError {
    fn bad_request(kind: &'static str, message: impl Into<String>) -> Self {
        ApiError { status: StatusCode::BAD_REQUEST, kind, message: message.into() }
    }
}

impl From<RegistryError> for ApiError {
    fn from(e: RegistryError) -> Self {
        let (status, kind) = match e {
            RegistryError::UnknownInstance(_) => (StatusCode::NOT_FOUND, "unknown-instance"),
            RegistryError::UnknownRun(_) => (StatusCode::NOT_FOUND, "unknown-run"),
            RegistryError::InvalidEdit(_) => (StatusCode::BAD_REQUEST, "invalid-edit"),
        };
        ApiError { status, kind, message: e.to_string() }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"error": self.kind, "message": self.message}))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunHandle {
    pub id: String,
    pub instance: String,
    pub status: Status,
    pub config: RunConfig,
    pub parent: Option<String>,
    pub edit: Option<WhatIfEdit>,
    pub children: Vec<String>,
    pub events: usize,
    pub termination: Option<Termination>,
    pub stats: Option<RunStats>,
    pub error: Option<String>,
}

fn handle(entry: &RunEntry) -> RunHandle {
    let sh = entry.shared.lock().unwrap();
    RunHandle {
        id: entry.id.clone(),
        instance: entry.instance_id.clone(),
        status: sh.status,
        config: entry.config.clone(),
        parent: entry.parent.clone(),
        edit: entry.edit.clone(),
        children: sh.children.clone(),
        events: sh.events.len(),
        termination: sh.termination,
        stats: sh.stats,
        error: sh.error.clone(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub point: Point,
    pub solution: Solution,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveView {
    pub run: String,
    pub status: Status,
    pub points: Vec<ArchiveEntry>,
    pub hv: Option<i128>,
    pub hv_fraction: Option<f64>,
}

/// Parses a JSON value into `T`, mapping failures to a 400 of the given kind.
fn parse<T: serde::de::DeserializeOwned>(v: Value, kind: &'static str) -> ApiResult<T> {
    serde_json::from_value(v).map_err(|e| ApiError::bad_request(kind, e.to_string()))
}

async fn add_instance(
    State(reg): State<Arc<Registry>>,
    Json(body): Json<Value>,
) -> ApiResult<(StatusCode, Json<InstanceInfo>)> {
    let doc: InstanceDoc = parse(body, "invalid-instance")?;
    let inst = NrpInstance::try_from(doc).map_err(|e| ApiError::bad_request("invalid-instance", e.to_string()))?;
    let reg2 = reg.clone();
    let info = tokio::task::spawn_blocking(move || reg2.add_instance(inst)).await.expect("instance registration");
    Ok((StatusCode::CREATED, Json(info)))
}

async fn list_instances(State(reg): State<Arc<Registry>>) -> Json<Vec<InstanceInfo>> {
    Json(reg.instances())
}

#[derive(Deserialize)]
struct CreateRun {
    instance: String,
    config: Value,
    #[serde(default)]
    paused: bool,
}

async fn create_run(
    State(reg): State<Arc<Registry>>,
    Json(body): Json<Value>,
) -> ApiResult<(StatusCode, Json<RunHandle>)> {
    let req: CreateRun = parse(body, "invalid-config")?;
    let config: RunConfig = parse(req.config, "invalid-config")?;
    let entry = reg.create_run(&req.instance, config, req.paused, None)?;
    Ok((StatusCode::CREATED, Json(handle(&entry))))
}

async fn get_run(State(reg): State<Arc<Registry>>, Path(id): Path<String>) -> ApiResult<Json<RunHandle>> {
    let entry = reg.run(&id)?;
    Ok(Json(handle(&entry)))
}

async fn events(
    State(reg): State<Arc<Registry>>,
    Path(id): Path<String>,
) -> ApiResult<Sse<impl Stream<Item = Result<Event, Infallible>>>> {
    let entry = reg.run(&id)?;
    let rx = entry.version.subscribe();
    // state: (entry, receiver, next index, finished)
    let s = stream::unfold((entry, rx, 0usize, false), |(entry, mut rx, next, finished)| async move {
        if finished {
            return None;
        }
        loop {
            let (item, status) = {
                let sh = entry.shared.lock().unwrap();
                (sh.events.get(next).cloned(), sh.status)
            };
            if let Some(ev) = item {
                let e =
                    Event::default().event("point").id(ev.index.to_string()).data(serde_json::to_string(&ev).unwrap());
                return Some((Ok(e), (entry, rx, next + 1, false)));
            }
            if status.is_terminal() {
                let e = Event::default().event("end").data(json!({"status": status, "events": next}).to_string());
                return Some((Ok(e), (entry, rx, next, true)));
            }
            if rx.changed().await.is_err() {
                return None;
            }
        }
    });
    Ok(Sse::new(s).keep_alive(KeepAlive::default()))
}

#[derive(Deserialize)]
#[serde(rename_all = "lowercase")]
enum Action {
    Pause,
    Resume,
    Stop,
}

#[derive(Deserialize)]
struct ControlBody {
    action: Action,
}

async fn control(
    State(reg): State<Arc<Registry>>,
    Path(id): Path<String>,
    Json(body): Json<Value>,
) -> ApiResult<Json<Value>> {
    let entry = reg.run(&id)?;
    let req: ControlBody = parse(body, "invalid-action")?;
    let status = match req.action {
        Action::Pause => entry.pause(),
        Action::Resume => entry.resume(),
        Action::Stop => entry.stop().await,
    };
    Ok(Json(json!({"id": id, "status": status})))
}

async fn whatif(
    State(reg): State<Arc<Registry>>,
    Path(id): Path<String>,
    Json(mut body): Json<Value>,
) -> ApiResult<(StatusCode, Json<RunHandle>)> {
    reg.run(&id)?;
    // config rides along with the edit; split it off before parsing the rest
    let config = match body.as_object_mut().and_then(|o| o.remove("config")) {
        Some(Value::Null) | None => None,
        Some(c) => Some(parse::<RunConfig>(c, "invalid-config")?),
    };
    let edit: WhatIfEdit = parse(body, "invalid-edit")?;
    let reg2 = reg.clone();
    let child = tokio::task::spawn_blocking(move || reg2.whatif(&id, edit, config)).await.expect("what-if fork")?;
    Ok((StatusCode::CREATED, Json(handle(&child))))
}

async fn archive(State(reg): State<Arc<Registry>>, Path(id): Path<String>) -> ApiResult<Json<ArchiveView>> {
    let entry = reg.run(&id)?;
    let reference = reg.instance(&entry.instance_id)?.reference.clone();
    let sh = entry.shared.lock().unwrap();
    let points = sh.archive.entries().iter().map(|(p, s)| ArchiveEntry { point: *p, solution: s.clone() }).collect();
    let hv = reference.as_ref().map(|r| sh.archive.hypervolume(r.nadir));
    let hv_fraction =
        reference.as_ref().zip(hv).map(|(r, hv)| if r.total_hv == 0 { 1.0 } else { hv as f64 / r.total_hv as f64 });
    Ok(Json(ArchiveView { run: id, status: sh.status, points, hv, hv_fraction }))
}

pub fn router(registry: Arc<Registry>) -> Router {
    Router::new()
        .route("/instances", post(add_instance).get(list_instances))
        .route("/runs", post(create_run))
        .route("/runs/{id}", get(get_run))
        .route("/runs/{id}/events", get(events))
        .route("/runs/{id}/control", post(control))
        .route("/runs/{id}/whatif", post(whatif))
        .route("/runs/{id}/archive", get(archive))
        .with_state(registry)
}

/// Serves until the process is killed. Events are appended to
/// `<persist_dir>/<run id>.jsonl` when a directory is given.
pub async fn serve(addr: SocketAddr, persist_dir: Option<PathBuf>) -> std::io::Result<()> {
    if let Some(d) = &persist_dir {
        std::fs::create_dir_all(d)?;
    }
    let app = router(Arc::new(Registry::new(persist_dir)));
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, app).await
}
