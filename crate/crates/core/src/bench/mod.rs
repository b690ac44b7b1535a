//! Instance supply and the benchmark harness: dataset readers, the random
//! generator, the (instance × algorithm × repetition) matrix and its CSV and
//! gnuplot output.

mod generate;
mod parse;

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use generate::{generate_instance, GeneratorError, GeneratorParams};
pub use parse::{parse_classic, parse_realistic, ParseError};

use crate::anytime::{solve_instance, Algorithm, RunConfig, RunError, Termination};
use crate::metrics::{brute_force_front, pareto_filter, percent_string, MetricsError, ParetoArchive};
use crate::model::{InstanceDocError, NrpInstance, Point};
use crate::oracle::DEFAULT_NODE_BUDGET;

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Parse { path: PathBuf, source: ParseError },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: InstanceDocError },
}

/// Reads an instance file. `.json` files hold the canonical document; files
/// whose name starts with `nrp-` use the realistic layout; anything else is
/// read as the classic layout.
pub fn load_instance(path: &Path) -> Result<NrpInstance, LoadError> {
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.into(), source })?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("instance").to_string();
    if path.extension().is_some_and(|e| e == "json") {
        return NrpInstance::from_json(&text).map_err(|source| LoadError::Json { path: path.into(), source });
    }
    let parsed = if stem.starts_with("nrp-") { parse_realistic(&stem, &text) } else { parse_classic(&stem, &text) };
    parsed.map_err(|source| LoadError::Parse { path: path.into(), source })
}

/// Ground truth for fractions: the exact front and its hypervolume.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    pub front: Vec<Point>,
    pub nadir: Point,
    pub total_hv: i128,
}

impl Reference {
    /// Nadir taken from the front's end points.
    pub fn from_front(points: &[Point]) -> Option<Self> {
        let front = pareto_filter(points);
        let nadir = Point::new(front.last()?.f1, front.first()?.f2);
        let total_hv = crate::metrics::hypervolume(&front, nadir);
        Some(Reference { front, nadir, total_hv })
    }

    pub fn brute_force(inst: &NrpInstance) -> Result<Self, MetricsError> {
        let front = brute_force_front(inst)?.points();
        Ok(Self::from_front(&front).expect("every instance has a feasible solution"))
    }

    /// Runs a complete algorithm to exhaustion, without deadline.
    pub fn exhaustive(inst: &NrpInstance, algorithm: Algorithm) -> Result<Self, RunError> {
        let report = solve_instance(inst, &RunConfig::new(algorithm))?;
        Ok(Self::from_front(&report.points()).expect("runs always find the extremes"))
    }

    pub fn pf_size(&self) -> usize {
        self.front.len()
    }
}

#[derive(Debug, Clone)]
pub struct BenchCase {
    pub name: String,
    pub instance: NrpInstance,
    pub reference: Option<Reference>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BenchSpec {
    pub algorithms: Vec<Algorithm>,
    pub repetitions: usize,
    pub deadline: Option<Duration>,
    pub node_budget: u64,
}

impl BenchSpec {
    pub fn new(algorithms: Vec<Algorithm>, repetitions: usize, deadline: Option<Duration>) -> Self {
        BenchSpec { algorithms, repetitions, deadline, node_budget: DEFAULT_NODE_BUDGET }
    }
}

/// One emitted point of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub algorithm: String,
    pub run: usize,
    pub elapsed_ms: f64,
    pub event: usize,
    pub f1: i64,
    pub f2: i64,
    pub hv: i128,
    pub hv_fraction: Option<f64>,
    pub oracle_calls: u64,
}

/// Final state of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub instance: String,
    pub algorithm: String,
    pub run: usize,
    pub termination: Option<Termination>,
    pub points: usize,
    pub oracle_calls: u64,
    pub elapsed_ms: f64,
    /// Exact percentage of the reference hypervolume, three decimals.
    pub hyper_pct: Option<String>,
    pub pf_pct: Option<String>,
    pub error: Option<String>,
}

/// Per (instance, algorithm): means over the successful runs and the
/// coefficient of variation σ/μ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub instance: String,
    pub algorithm: String,
    pub runs: usize,
    pub errors: usize,
    pub mean_hyper_pct: Option<f64>,
    pub hyper_cv: Option<f64>,
    pub mean_pf_pct: Option<f64>,
    pub pf_cv: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct BenchOutput {
    pub rows: Vec<BenchRow>,
    pub cells: Vec<CellResult>,
    pub summary: Vec<SummaryRow>,
}

fn run_cell(case: &BenchCase, algorithm: Algorithm, run: usize, spec: &BenchSpec) -> (Vec<BenchRow>, CellResult) {
    let mut config = RunConfig::new(algorithm);
    config.deadline = spec.deadline;
    config.node_budget = spec.node_budget;
    let mut cell = CellResult {
        instance: case.name.clone(),
        algorithm: algorithm.to_string(),
        run,
        termination: None,
        points: 0,
        oracle_calls: 0,
        elapsed_ms: 0.0,
        hyper_pct: None,
        pf_pct: None,
        error: None,
    };
    let report = match solve_instance(&case.instance, &config) {
        Ok(r) => r,
        Err(e) => {
            cell.error = Some(e.to_string());
            return (Vec::new(), cell);
        }
    };
    let nadir = case.reference.as_ref().map(|r| r.nadir).or_else(|| report.nadir());
    let total = case.reference.as_ref().map(|r| r.total_hv);
    let mut archive = ParetoArchive::new();
    let mut rows = Vec::with_capacity(report.events.len());
    for ev in &report.events {
        archive.insert(ev.point, ev.solution.clone());
        let hv = nadir.map_or(0, |n| archive.hypervolume(n));
        rows.push(BenchRow {
            instance: case.name.clone(),
            algorithm: algorithm.to_string(),
            run,
            elapsed_ms: ev.elapsed.as_secs_f64() * 1000.0,
            event: ev.index,
            f1: ev.point.f1,
            f2: ev.point.f2,
            hv,
            hv_fraction: total.map(|t| if t == 0 { 1.0 } else { hv as f64 / t as f64 }),
            oracle_calls: ev.oracle_calls,
        });
    }
    cell.termination = Some(report.termination);
    cell.points = report.archive.len();
    cell.oracle_calls = report.stats.oracle_calls;
    cell.elapsed_ms = rows.last().map_or(0.0, |r| r.elapsed_ms);
    if let Some(r) = &case.reference {
        let hv = report.archive.hypervolume(r.nadir);
        cell.hyper_pct = Some(percent_string(hv, r.total_hv, 3));
        let hits = report.points().iter().filter(|p| r.front.binary_search(p).is_ok()).count();
        cell.pf_pct = Some(percent_string(hits as i128, r.pf_size() as i128, 1));
    }
    (rows, cell)
}

fn mean_cv(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let cv = if mean == 0.0 { 0.0 } else { var.sqrt() / mean };
    (Some(mean), Some(cv))
}

pub fn summarize(cells: &[CellResult]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, String), Vec<&CellResult>> = BTreeMap::new();
    for c in cells {
        groups.entry((c.instance.clone(), c.algorithm.clone())).or_default().push(c);
    }
    groups
        .into_iter()
        .map(|((instance, algorithm), cs)| {
            let pct = |f: fn(&CellResult) -> &Option<String>| -> Vec<f64> {
                cs.iter().filter_map(|c| f(c).as_deref().and_then(|s| s.parse().ok())).collect()
            };
            let (mean_hyper_pct, hyper_cv) = mean_cv(&pct(|c| &c.hyper_pct));
            let (mean_pf_pct, pf_cv) = mean_cv(&pct(|c| &c.pf_pct));
            SummaryRow {
                instance,
                algorithm,
                runs: cs.len(),
                errors: cs.iter().filter(|c| c.error.is_some()).count(),
                mean_hyper_pct,
                hyper_cv,
                mean_pf_pct,
                pf_cv,
            }
        })
        .collect()
}

/// Runs every (instance, algorithm, repetition) cell, in parallel. A failing
/// cell is recorded in its [`CellResult`] and the rest of the matrix goes on.
pub fn run_bench(cases: &[BenchCase], spec: &BenchSpec) -> BenchOutput {
    let jobs: Vec<(usize, Algorithm, usize)> = (0..cases.len())
        .flat_map(|c| spec.algorithms.iter().flat_map(move |&a| (0..spec.repetitions).map(move |r| (c, a, r))))
        .collect();
    let results: Vec<(Vec<BenchRow>, CellResult)> =
        jobs.par_iter().map(|&(c, a, r)| run_cell(&cases[c], a, r, spec)).collect();
    let mut out = BenchOutput::default();
    for (rows, cell) in results {
        out.rows.extend(rows);
        out.cells.push(cell);
    }
    out.summary = summarize(&out.cells);
    out
}

pub fn write_csv<T: Serialize>(path: &Path, records: &[T]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

fn file_safe(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// One gnuplot data file per (instance, algorithm): `elapsed_ms hv_pct`
/// columns, runs separated by two blank lines so `index` selects a run.
pub fn write_gnuplot(dir: &Path, rows: &[BenchRow]) -> io::Result<Vec<PathBuf>> {
    let mut files: BTreeMap<(String, String), BTreeMap<usize, Vec<&BenchRow>>> = BTreeMap::new();
    for r in rows {
        files.entry((r.instance.clone(), r.algorithm.clone())).or_default().entry(r.run).or_default().push(r);
    }
    let mut written = Vec::new();
    for ((inst, alg), runs) in files {
        let path = dir.join(format!("{}__{}.dat", file_safe(&inst), file_safe(&alg)));
        let mut text = format!("# {inst} {alg}\n# elapsed_ms hv_pct\n");
        for (i, (run, rs)) in runs.iter().enumerate() {
            if i > 0 {
                text.push_str("\n\n");
            }
            text.push_str(&format!("# run {run}\n"));
            for r in rs {
                let pct = r.hv_fraction.map_or("nan".to_string(), |f| format!("{:.3}", f * 100.0));
                text.push_str(&format!("{:.3} {pct}\n", r.elapsed_ms));
            }
        }
        std::fs::write(&path, text)?;
        written.push(path);
    }
    Ok(written)
}

/// Writes `rows.csv`, `runs.csv`, `summary.csv` and the gnuplot files.
pub fn write_output(dir: &Path, out: &BenchOutput) -> Result<(), csv::Error> {
    std::fs::create_dir_all(dir)?;
    write_csv(&dir.join("rows.csv"), &out.rows)?;
    write_csv(&dir.join("runs.csv"), &out.cells)?;
    write_csv(&dir.join("summary.csv"), &out.summary)?;
    write_gnuplot(dir, &out.rows)?;
    Ok(())
}
