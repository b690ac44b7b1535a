//! The box-queue engine: anytime algorithms, classic baselines, run control
//! and the event stream.

mod engine;
mod queue;

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::ParetoArchive;
use crate::model::{BiObjectiveProblem, NrpInstance, Objective, Point, Solution};
use crate::oracle::{BranchAndBound, CancelToken, Oracle, OracleError, DEFAULT_NODE_BUDGET};
use crate::scalarize::BoxCorners;

pub use engine::choose_method;
pub use queue::{BoxQueue, Discipline, Method, QueuedBox};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Algorithm {
    Spf,
    AnyAugmecon(Objective),
    AnyTchebycheff,
    AnyHybrid,
    MixHt,
    MixSht,
    Econst1(Objective),
    Econst2(Objective),
    Augmecon(Objective),
    EHybridClassic,
    TchebycheffClassic,
    Ads,
}

impl Algorithm {
    /// Every configuration, objective-parameterized ones in both variants.
    pub const ALL: [Algorithm; 16] = [
        Algorithm::Spf,
        Algorithm::AnyAugmecon(Objective::Satisfaction),
        Algorithm::AnyAugmecon(Objective::Cost),
        Algorithm::AnyTchebycheff,
        Algorithm::AnyHybrid,
        Algorithm::MixHt,
        Algorithm::MixSht,
        Algorithm::Econst1(Objective::Satisfaction),
        Algorithm::Econst1(Objective::Cost),
        Algorithm::Econst2(Objective::Satisfaction),
        Algorithm::Econst2(Objective::Cost),
        Algorithm::Augmecon(Objective::Satisfaction),
        Algorithm::Augmecon(Objective::Cost),
        Algorithm::EHybridClassic,
        Algorithm::TchebycheffClassic,
        Algorithm::Ads,
    ];

    pub fn is_classic(&self) -> bool {
        matches!(
            self,
            Algorithm::Econst1(_)
                | Algorithm::Econst2(_)
                | Algorithm::Augmecon(_)
                | Algorithm::EHybridClassic
                | Algorithm::TchebycheffClassic
                | Algorithm::Ads
        )
    }

    /// Whether an exhausted run yields the whole front (SPF and ADS only
    /// find supported points).
    pub fn is_complete(&self) -> bool {
        !matches!(self, Algorithm::Spf | Algorithm::Ads)
    }

    /// Whether the run starts from the two lexicographic optima.
    pub fn uses_boxes(&self) -> bool {
        !matches!(self, Algorithm::Econst1(_) | Algorithm::Econst2(_) | Algorithm::Augmecon(_))
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Algorithm::Spf => write!(f, "SPF"),
            Algorithm::AnyAugmecon(o) => write!(f, "AnyAugmecon({})", o.index()),
            Algorithm::AnyTchebycheff => write!(f, "AnyTchebycheff"),
            Algorithm::AnyHybrid => write!(f, "AnyHybrid"),
            Algorithm::MixHt => write!(f, "MixHT"),
            Algorithm::MixSht => write!(f, "MixSHT"),
            Algorithm::Econst1(o) => write!(f, "Econst1({})", o.index()),
            Algorithm::Econst2(o) => write!(f, "Econst2({})", o.index()),
            Algorithm::Augmecon(o) => write!(f, "Augmecon({})", o.index()),
            Algorithm::EHybridClassic => write!(f, "EHybridClassic"),
            Algorithm::TchebycheffClassic => write!(f, "TchebycheffClassic"),
            Algorithm::Ads => write!(f, "ADS"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown algorithm `{0}`")]
pub struct UnknownAlgorithm(pub String);

impl FromStr for Algorithm {
    type Err = UnknownAlgorithm;

    /// Case-insensitive; punctuation is ignored, so `AnyAugmecon(2)`,
    /// `any-augmecon-2` and `anyaugmecon2` are the same.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        let with_obj = |stem: &str, make: fn(Objective) -> Algorithm| -> Option<Algorithm> {
            let rest = key.strip_prefix(stem)?;
            match rest {
                "" => Some(make(Objective::Satisfaction)),
                _ => rest.parse::<u8>().ok().and_then(Objective::from_index).map(make),
            }
        };
        let simple = match key.as_str() {
            "spf" => Some(Algorithm::Spf),
            "anytchebycheff" => Some(Algorithm::AnyTchebycheff),
            "anyhybrid" => Some(Algorithm::AnyHybrid),
            "mixht" => Some(Algorithm::MixHt),
            "mixsht" => Some(Algorithm::MixSht),
            "ehybrid" | "ehybridclassic" => Some(Algorithm::EHybridClassic),
            "tchebycheff" | "tchebycheffclassic" => Some(Algorithm::TchebycheffClassic),
            "ads" => Some(Algorithm::Ads),
            _ => None,
        };
        simple
            .or_else(|| with_obj("anyaugmecon", Algorithm::AnyAugmecon))
            .or_else(|| with_obj("econst1", Algorithm::Econst1))
            .or_else(|| with_obj("econst2", Algorithm::Econst2))
            .or_else(|| with_obj("augmecon", Algorithm::Augmecon))
            .ok_or_else(|| UnknownAlgorithm(s.to_string()))
    }
}

impl TryFrom<String> for Algorithm {
    type Error = UnknownAlgorithm;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Algorithm> for String {
    fn from(a: Algorithm) -> String {
        a.to_string()
    }
}

mod secs {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Option<Duration>, s: S) -> Result<S::Ok, S::Error> {
        match d {
            Some(d) => s.serialize_some(&d.as_secs_f64()),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Duration>, D::Error> {
        let v = Option::<f64>::deserialize(d)?;
        match v {
            Some(x) if !(x.is_finite() && x >= 0.0) => {
                Err(serde::de::Error::custom("deadline must be a non-negative number of seconds"))
            }
            Some(x) => Ok(Some(Duration::from_secs_f64(x))),
            None => Ok(None),
        }
    }
}

mod ratio_text {
    use num_rational::Ratio;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Option<Ratio<i64>>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => s.serialize_some(&format!("{}/{}", r.numer(), r.denom())),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Ratio<i64>>, D::Error> {
        Option::<String>::deserialize(d)?.map(|t| super::parse_lambda(&t).map_err(serde::de::Error::custom)).transpose()
    }
}

mod millis {
    use serde::{Deserialize, Deserializer, Serializer};
    use std::time::Duration;

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64() * 1000.0)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let ms = f64::deserialize(d)?;
        Ok(Duration::from_secs_f64(ms.max(0.0) / 1000.0))
    }
}

/// Parses a positive rational written `p/q` or `p`.
pub fn parse_lambda(text: &str) -> Result<Ratio<i64>, String> {
    let r: Ratio<i64> = text.trim().parse().map_err(|_| format!("`{text}` is not a rational p/q"))?;
    if r <= Ratio::from_integer(0) {
        return Err(format!("lambda must be positive, got {text}"));
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    #[serde(default, with = "secs", rename = "deadline_secs")]
    pub deadline: Option<Duration>,
    /// Augmentation weight for the Augmecon variants.
    #[serde(default, with = "ratio_text")]
    pub lambda: Option<Ratio<i64>>,
    #[serde(default = "default_node_budget")]
    pub node_budget: u64,
    /// Maximum oracle calls after the lexicographic seeding. Sweeps have no
    /// seeding, so all their calls count.
    #[serde(default)]
    pub call_budget: Option<u64>,
    /// Record every box extraction in the report.
    #[serde(default)]
    pub trace_boxes: bool,
}

fn default_node_budget() -> u64 {
    DEFAULT_NODE_BUDGET
}

impl RunConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        RunConfig {
            algorithm,
            deadline: None,
            lambda: None,
            node_budget: DEFAULT_NODE_BUDGET,
            call_budget: None,
            trace_boxes: false,
        }
    }

    pub fn with_deadline(mut self, d: Duration) -> Self {
        self.deadline = Some(d);
        self
    }

    pub fn with_lambda(mut self, l: Ratio<i64>) -> Self {
        self.lambda = Some(l);
        self
    }

    pub fn with_call_budget(mut self, calls: u64) -> Self {
        self.call_budget = Some(calls);
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.trace_boxes = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunEvent {
    pub index: usize,
    #[serde(with = "millis", rename = "elapsed_ms")]
    pub elapsed: Duration,
    pub point: Point,
    pub solution: Solution,
    /// Oracle calls issued so far, including the one that found the point.
    pub oracle_calls: u64,
    /// Boxes waiting in the queue(s) when the point was emitted.
    pub open_boxes: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Exhausted,
    Deadline,
    Cancelled,
    /// The configured `call_budget` ran out.
    CallBudget,
    /// An oracle call hit its node budget.
    NodeBudget,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunStats {
    pub oracle_calls: u64,
    pub optimal: u64,
    pub infeasible: u64,
    pub nodes: u64,
    /// Optimal answers that arrived after the deadline and were dropped.
    pub late_discarded: u64,
    /// Calls spent computing the lexicographic optima.
    pub seed_calls: u64,
}

/// One box extraction, recorded when `trace_boxes` is set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoxTrace {
    pub extracted: BoxCorners,
    pub priority: i128,
    /// Highest priority left in the queue right after extraction.
    pub next_priority: Option<i128>,
    pub children: Vec<BoxCorners>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub algorithm: Algorithm,
    pub archive: ParetoArchive,
    pub events: Vec<RunEvent>,
    pub termination: Termination,
    pub stats: RunStats,
    /// Lexicographic optima when the algorithm computed them.
    pub extremes: Option<(Point, Point)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<BoxTrace>,
}

impl RunReport {
    pub fn points(&self) -> Vec<Point> {
        self.archive.points()
    }

    /// `(z2.f1, z1.f2)` from the extremes, or from the archive's end points.
    pub fn nadir(&self) -> Option<Point> {
        if let Some((z1, z2)) = self.extremes {
            return Some(Point::new(z2.f1, z1.f2));
        }
        let pts = self.archive.points();
        Some(Point::new(pts.last()?.f1, pts.first()?.f2))
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RunError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("the problem has no feasible solution")]
    Infeasible,
    #[error("{0} is not a classic algorithm")]
    NotClassic(Algorithm),
}

#[derive(Debug, Default)]
struct ControlState {
    paused: bool,
    stopped: bool,
}

/// Pause, resume and stop a run from any thread. Cloning shares the handle.
#[derive(Debug, Clone, Default)]
pub struct RunControl {
    state: Arc<(Mutex<ControlState>, Condvar)>,
    cancel: CancelToken,
}

impl RunControl {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pause(&self) {
        self.state.0.lock().unwrap().paused = true;
    }

    pub fn resume(&self) {
        self.state.0.lock().unwrap().paused = false;
        self.state.1.notify_all();
    }

    /// Stops the run; an oracle call in flight is cancelled.
    pub fn stop(&self) {
        self.state.0.lock().unwrap().stopped = true;
        self.cancel.cancel();
        self.state.1.notify_all();
    }

    pub fn is_paused(&self) -> bool {
        self.state.0.lock().unwrap().paused
    }

    pub fn is_stopped(&self) -> bool {
        self.state.0.lock().unwrap().stopped
    }

    pub fn token(&self) -> &CancelToken {
        &self.cancel
    }

    /// Blocks while paused. Returns `false` once the run is stopped.
    pub fn wait_if_paused(&self) -> bool {
        let (lock, cv) = &*self.state;
        let mut st = lock.lock().unwrap();
        while st.paused && !st.stopped {
            st = cv.wait(st).unwrap();
        }
        !st.stopped
    }
}

/// Runs the configured algorithm until exhaustion, deadline, budget or stop.
pub fn run(
    problem: &BiObjectiveProblem,
    config: &RunConfig,
    oracle: &mut dyn Oracle,
    sink: &mut dyn FnMut(&RunEvent),
    control: &RunControl,
) -> Result<RunReport, RunError> {
    engine::Engine::new(problem, config, oracle, sink, control).run()
}

/// [`run`] restricted to the classic baselines.
pub fn run_classic(
    problem: &BiObjectiveProblem,
    config: &RunConfig,
    oracle: &mut dyn Oracle,
    sink: &mut dyn FnMut(&RunEvent),
    control: &RunControl,
) -> Result<RunReport, RunError> {
    if !config.algorithm.is_classic() {
        return Err(RunError::NotClassic(config.algorithm));
    }
    run(problem, config, oracle, sink, control)
}

/// Builds the problem and runs it with the built-in oracle, no sink and no
/// external control.
pub fn solve_instance(inst: &NrpInstance, config: &RunConfig) -> Result<RunReport, RunError> {
    let problem = crate::model::build_bi_objective(inst);
    let mut oracle = BranchAndBound::with_node_budget(config.node_budget);
    run(&problem, config, &mut oracle, &mut |_| {}, &RunControl::new())
}
