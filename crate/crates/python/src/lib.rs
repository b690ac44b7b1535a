//! Python module `biobj`.
//!
//! Instances cross the boundary as canonical JSON documents (strings) and
//! points as `(satisfaction, cost)` tuples.

use std::time::Duration;

use biobj_core::anytime::{parse_lambda, Algorithm, RunConfig};
use biobj_core::bench::{generate_instance, GeneratorParams};
use biobj_core::model::{NrpInstance, Point};
use biobj_core::{brute_force_front, solve_instance};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyAny;

fn instance(doc: &str) -> PyResult<NrpInstance> {
    NrpInstance::from_json(doc).map_err(|e| PyValueError::new_err(e.to_string()))
}

fn pair(p: &Point) -> (i64, i64) {
    (-p.f1, p.f2)
}

/// Names accepted by `solve`.
#[pyfunction]
fn algorithms() -> Vec<String> {
    Algorithm::ALL.iter().map(|a| a.to_string()).collect()
}

/// Runs one algorithm; returns the report as a dict (see `RunReport` JSON).
/// `points` holds the final archive as (satisfaction, cost) tuples.
#[pyfunction]
#[pyo3(signature = (instance_json, algorithm, deadline=None, lam=None, call_budget=None))]
fn solve<'py>(
    py: Python<'py>,
    instance_json: &str,
    algorithm: &str,
    deadline: Option<f64>,
    lam: Option<&str>,
    call_budget: Option<u64>,
) -> PyResult<Bound<'py, PyAny>> {
    let inst = instance(instance_json)?;
    let algo: Algorithm =
        algorithm.parse().map_err(|e: biobj_core::anytime::UnknownAlgorithm| PyValueError::new_err(e.to_string()))?;
    let mut config = RunConfig::new(algo);
    if let Some(d) = deadline {
        let d = Duration::try_from_secs_f64(d).map_err(|_| PyValueError::new_err(format!("invalid deadline {d}")))?;
        config = config.with_deadline(d);
    }
    if let Some(l) = lam {
        config = config.with_lambda(parse_lambda(l).map_err(PyValueError::new_err)?);
    }
    if let Some(b) = call_budget {
        config = config.with_call_budget(b);
    }
    let report = py.detach(|| solve_instance(&inst, &config)).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    let mut v = serde_json::to_value(&report).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    v["points"] = serde_json::json!(report.archive.points().iter().map(pair).collect::<Vec<_>>());
    py.import("json")?.call_method1("loads", (v.to_string(),))
}

/// The exact front by enumeration; refuses instances that are too large.
#[pyfunction]
fn front(py: Python<'_>, instance_json: &str) -> PyResult<Vec<(i64, i64)>> {
    let inst = instance(instance_json)?;
    let archive = py.detach(|| brute_force_front(&inst)).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(archive.points().iter().map(pair).collect())
}

/// Area dominated by `points` (satisfaction, cost) up to the reference
/// point `(satisfaction, cost)`, with satisfaction maximized.
#[pyfunction]
fn hypervolume(points: Vec<(i64, i64)>, reference: (i64, i64)) -> i128 {
    let pts: Vec<Point> = points.iter().map(|&(s, c)| Point::new(-s, c)).collect();
    biobj_core::hypervolume(&pts, Point::new(-reference.0, reference.1))
}

/// A random instance as a canonical JSON document.
#[pyfunction]
#[pyo3(signature = (n, m, seed, pdens=None, qdens=None))]
fn generate(n: usize, m: usize, seed: u64, pdens: Option<f64>, qdens: Option<f64>) -> PyResult<String> {
    let mut params = GeneratorParams { n, m, ..GeneratorParams::with_seed(seed) };
    if let Some(p) = pdens {
        params.precedence_density = p;
    }
    if let Some(q) = qdens {
        params.request_density = q;
    }
    let inst = generate_instance(&params).map_err(|e| PyValueError::new_err(e.to_string()))?;
    Ok(inst.to_json())
}

#[pymodule]
fn biobj(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(algorithms, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(front, m)?)?;
    m.add_function(wrap_pyfunction!(hypervolume, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
