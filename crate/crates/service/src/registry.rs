use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use biobj_core::anytime::{run, RunConfig, RunControl, RunEvent, RunStats, Termination};
use biobj_core::bench::Reference;
use biobj_core::metrics::ParetoArchive;
use biobj_core::model::{build_bi_objective, ModelError, NrpInstance, Point, Solution};
use biobj_core::oracle::BranchAndBound;
use serde::{Deserialize, Serialize};
use tokio::sync::watch;

/// Instances with at most this many requirements get a brute-force reference
/// so events can report hypervolume fractions.
pub const REFERENCE_MAX_REQUIREMENTS: usize = 18;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    #[default]
    Queued,
    Running,
    Paused,
    Done,
    Cancelled,
}

impl Status {
    pub fn is_terminal(self) -> bool {
        matches!(self, Status::Done | Status::Cancelled)
    }
}

/// A point as streamed to clients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamEvent {
    pub index: usize,
    pub elapsed_ms: f64,
    pub point: Point,
    pub solution: Solution,
    pub oracle_calls: u64,
    pub open_boxes: usize,
    pub hv: Option<i128>,
    pub hv_fraction: Option<f64>,
}

/// Cost and weight overrides keyed by 1-based id.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhatIfEdit {
    #[serde(default)]
    pub costs: BTreeMap<usize, i64>,
    #[serde(default)]
    pub weights: BTreeMap<usize, i64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceInfo {
    pub id: String,
    pub name: String,
    pub n: usize,
    pub m: usize,
}

pub struct StoredInstance {
    pub info: InstanceInfo,
    pub instance: Arc<NrpInstance>,
    pub reference: Option<Reference>,
}

#[derive(Default)]
pub struct RunShared {
    pub status: Status,
    pub events: Vec<StreamEvent>,
    pub archive: ParetoArchive,
    pub termination: Option<Termination>,
    pub stats: Option<RunStats>,
    pub error: Option<String>,
    pub children: Vec<String>,
}

pub struct RunEntry {
    pub id: String,
    pub instance_id: String,
    pub config: RunConfig,
    pub parent: Option<String>,
    pub edit: Option<WhatIfEdit>,
    pub control: RunControl,
    pub shared: Mutex<RunShared>,
    pub version: watch::Sender<u64>,
    started: Mutex<bool>,
}

impl RunEntry {
    pub fn status(&self) -> Status {
        self.shared.lock().unwrap().status
    }

    fn bump(&self) {
        self.version.send_modify(|v| *v += 1);
    }

    /// Applies a control action; returns the status afterwards. Terminal runs
    /// ignore every action.
    pub fn pause(&self) -> Status {
        let mut sh = self.shared.lock().unwrap();
        if !sh.status.is_terminal() {
            self.control.pause();
            sh.status = Status::Paused;
        }
        let s = sh.status;
        drop(sh);
        self.bump();
        s
    }

    pub fn resume(&self) -> Status {
        let mut sh = self.shared.lock().unwrap();
        if sh.status == Status::Paused {
            self.control.resume();
            sh.status = if *self.started.lock().unwrap() { Status::Running } else { Status::Queued };
        }
        let s = sh.status;
        drop(sh);
        self.bump();
        s
    }

    /// Requests a stop and waits for the worker to settle.
    pub async fn stop(&self) -> Status {
        if self.status().is_terminal() {
            return self.status();
        }
        self.control.stop();
        self.wait_terminal(Duration::from_secs(30)).await
    }

    pub async fn wait_terminal(&self, limit: Duration) -> Status {
        let mut rx = self.version.subscribe();
        let _ = tokio::time::timeout(limit, async {
            loop {
                if self.status().is_terminal() {
                    break;
                }
                if rx.changed().await.is_err() {
                    break;
                }
            }
        })
        .await;
        self.status()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("unknown run `{0}`")]
    UnknownRun(String),
    #[error("invalid edit: {0}")]
    InvalidEdit(String),
}

pub struct Registry {
    instances: RwLock<BTreeMap<String, Arc<StoredInstance>>>,
    runs: RwLock<BTreeMap<String, Arc<RunEntry>>>,
    next_instance: AtomicU64,
    next_run: AtomicU64,
    persist_dir: Option<PathBuf>,
}

impl Registry {
    pub fn new(persist_dir: Option<PathBuf>) -> Self {
        Registry {
            instances: RwLock::new(BTreeMap::new()),
            runs: RwLock::new(BTreeMap::new()),
            next_instance: AtomicU64::new(1),
            next_run: AtomicU64::new(1),
            persist_dir,
        }
    }

    pub fn add_instance(&self, instance: NrpInstance) -> InstanceInfo {
        let id = format!("i{}", self.next_instance.fetch_add(1, Ordering::SeqCst));
        let info = InstanceInfo {
            id: id.clone(),
            name: instance.name.clone(),
            n: instance.n_requirements(),
            m: instance.n_stakeholders(),
        };
        let reference = (instance.n_requirements() <= REFERENCE_MAX_REQUIREMENTS)
            .then(|| Reference::brute_force(&instance).ok())
            .flatten();
        let stored = StoredInstance { info: info.clone(), instance: Arc::new(instance), reference };
        self.instances.write().unwrap().insert(id, Arc::new(stored));
        info
    }

    pub fn instances(&self) -> Vec<InstanceInfo> {
        self.instances.read().unwrap().values().map(|s| s.info.clone()).collect()
    }

    pub fn instance(&self, id: &str) -> Result<Arc<StoredInstance>, RegistryError> {
        self.instances.read().unwrap().get(id).cloned().ok_or_else(|| RegistryError::UnknownInstance(id.to_string()))
    }

    pub fn run(&self, id: &str) -> Result<Arc<RunEntry>, RegistryError> {
        self.runs.read().unwrap().get(id).cloned().ok_or_else(|| RegistryError::UnknownRun(id.to_string()))
    }

    /// Registers a run and starts it on a blocking worker.
    pub fn create_run(
        self: &Arc<Self>,
        instance_id: &str,
        config: RunConfig,
        start_paused: bool,
        parent: Option<(String, WhatIfEdit)>,
    ) -> Result<Arc<RunEntry>, RegistryError> {
        let stored = self.instance(instance_id)?;
        let id = format!("r{}", self.next_run.fetch_add(1, Ordering::SeqCst));
        let (version, _) = watch::channel(0);
        let (parent, edit) = match parent {
            Some((p, e)) => (Some(p), Some(e)),
            None => (None, None),
        };
        let entry = Arc::new(RunEntry {
            id: id.clone(),
            instance_id: instance_id.to_string(),
            config,
            parent,
            edit,
            control: RunControl::new(),
            shared: Mutex::new(RunShared::default()),
            version,
            started: Mutex::new(false),
        });
        if start_paused {
            entry.pause();
        }
        self.runs.write().unwrap().insert(id, entry.clone());
        let persist = self.persist_dir.as_ref().map(|d| d.join(format!("{}.jsonl", entry.id)));
        let worker = entry.clone();
        tokio::task::spawn_blocking(move || execute(&worker, &stored, persist));
        Ok(entry)
    }

    /// Applies the edit to the parent's instance and starts a linked run.
    pub fn whatif(
        self: &Arc<Self>,
        parent_id: &str,
        edit: WhatIfEdit,
        config: Option<RunConfig>,
    ) -> Result<Arc<RunEntry>, RegistryError> {
        let parent = self.run(parent_id)?;
        let base = self.instance(&parent.instance_id)?;
        let costs: Vec<(usize, i64)> = edit.costs.iter().map(|(&k, &v)| (k, v)).collect();
        let weights: Vec<(usize, i64)> = edit.weights.iter().map(|(&k, &v)| (k, v)).collect();
        let edited = base
            .instance
            .with_overrides(&costs, &weights)
            .map_err(|e: ModelError| RegistryError::InvalidEdit(e.to_string()))?;
        let mut edited = edited;
        edited.name = format!("{} (what-if of {parent_id})", base.instance.name);
        let info = self.add_instance(edited);
        let child = self.create_run(
            &info.id,
            config.unwrap_or_else(|| parent.config.clone()),
            false,
            Some((parent_id.to_string(), edit)),
        )?;
        parent.shared.lock().unwrap().children.push(child.id.clone());
        Ok(child)
    }
}

fn execute(entry: &RunEntry, stored: &StoredInstance, persist: Option<PathBuf>) {
    {
        let mut sh = entry.shared.lock().unwrap();
        *entry.started.lock().unwrap() = true;
        if sh.status == Status::Queued {
            sh.status = Status::Running;
        }
    }
    entry.bump();
    let problem = build_bi_objective(&stored.instance);
    let mut oracle = BranchAndBound::with_node_budget(entry.config.node_budget);
    let mut log = persist.and_then(|p| OpenOptions::new().create(true).append(true).open(p).ok());
    let reference = stored.reference.clone();
    let mut sink = |ev: &RunEvent| {
        let mut sh = entry.shared.lock().unwrap();
        sh.archive.insert(ev.point, ev.solution.clone());
        let hv = reference.as_ref().map(|r| sh.archive.hypervolume(r.nadir));
        let hv_fraction =
            reference.as_ref().zip(hv).map(|(r, hv)| if r.total_hv == 0 { 1.0 } else { hv as f64 / r.total_hv as f64 });
        let se = StreamEvent {
            index: ev.index,
            elapsed_ms: ev.elapsed.as_secs_f64() * 1000.0,
            point: ev.point,
            solution: ev.solution.clone(),
            oracle_calls: ev.oracle_calls,
            open_boxes: ev.open_boxes,
            hv,
            hv_fraction,
        };
        if let Some(f) = log.as_mut() {
            let _ = writeln!(f, "{}", serde_json::to_string(&se).unwrap());
        }
        sh.events.push(se);
        drop(sh);
        entry.bump();
    };
    let result = run(&problem, &entry.config, &mut oracle, &mut sink, &entry.control);
    let mut sh = entry.shared.lock().unwrap();
    match result {
        Ok(report) => {
            sh.archive = report.archive;
            sh.termination = Some(report.termination);
            sh.stats = Some(report.stats);
            sh.status = if report.termination == Termination::Cancelled { Status::Cancelled } else { Status::Done };
        }
        Err(e) => {
            sh.error = Some(e.to_string());
            sh.status = Status::Done;
        }
    }
    drop(sh);
    entry.bump();
}
