//! Exact anytime bi-objective optimization for the Next Release Problem.
//!
//! [`model`] holds instances and the binary program, [`oracle`] the exact
//! single-objective solver, [`scalarize`] the subproblem builders,
//! [`anytime`] the algorithms, [`metrics`] archive and hypervolume, and
//! [`bench`] parsing, generation and the benchmark harness.

pub mod anytime;
pub mod bench;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod scalarize;

pub use anytime::{
    run, run_classic, solve_instance, Algorithm, RunConfig, RunControl, RunEvent, RunReport, Termination,
};
pub use metrics::{brute_force_front, hypervolume, ParetoArchive};
pub use model::{build_bi_objective, BiObjectiveProblem, NrpInstance, Objective, Point, Solution};
