//! Spawn-and-parse adapter for an external MILP solver.
//!
//! The subproblem is written as an LP file and the configured command is run
//! through `sh -c`. A `{lp}` placeholder in the command is replaced by the
//! file path; without one the path is appended. The solver's standard output
//! must contain either a line with `infeasible`, or an `objective value` line
//! and one `xN value` (or `xN = value`) line per variable set to 1.
//! Variables missing from the output read as 0. The returned assignment is
//! re-checked and re-evaluated exactly.

use std::process::Command;
use std::time::Instant;

use super::{export_lp, CancelToken, Optimum, Oracle, OracleError, OracleOutcome, Subproblem};

/// Environment variable holding the solver command.
pub const ORACLE_CMD_ENV: &str = "BIOBJ_ORACLE_CMD";

#[derive(Debug, Clone)]
pub struct ExternalSolver {
    pub command: String,
}

impl ExternalSolver {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalSolver { command: command.into() }
    }

    pub fn from_env() -> Option<Self> {
        std::env::var(ORACLE_CMD_ENV).ok().filter(|c| !c.trim().is_empty()).map(Self::new)
    }
}

/// Parsed solver report, before exactness checks.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverReport {
    Infeasible,
    Solved { objective: f64, ones: Vec<usize> },
}

pub fn parse_solver_output(text: &str, n_vars: usize) -> Result<SolverReport, OracleError> {
    let mut objective = None;
    let mut ones = Vec::new();
    for line in text.lines() {
        let lower = line.to_ascii_lowercase();
        if lower.contains("infeasible") {
            return Ok(SolverReport::Infeasible);
        }
        if let Some(pos) = lower.find("objective value") {
            let rest = &line[pos + "objective value".len()..];
            let num = rest.trim_start_matches([':', '=', ' ', '\t']).split_whitespace().next();
            objective = num.and_then(|v| v.parse::<f64>().ok());
            continue;
        }
        let mut toks = line.split(|c: char| c.is_whitespace() || c == '=').filter(|t| !t.is_empty());
        if let (Some(name), Some(val)) = (toks.next(), toks.next()) {
            if let Some(idx) = name.strip_prefix('x').and_then(|i| i.parse::<usize>().ok()) {
                if idx == 0 || idx > n_vars {
                    return Err(OracleError::External(format!("unknown variable {name}")));
                }
                let v: f64 = val.parse().map_err(|_| OracleError::External(format!("bad value in `{line}`")))?;
                if v > 0.5 {
                    ones.push(idx - 1);
                }
            }
        }
    }
    match objective {
        Some(objective) => Ok(SolverReport::Solved { objective, ones }),
        None => Err(OracleError::External("no objective value in solver output".into())),
    }
}

impl Oracle for ExternalSolver {
    fn solve(
        &mut self,
        sub: &Subproblem,
        cancel: &CancelToken,
        deadline: Option<Instant>,
    ) -> Result<OracleOutcome, OracleError> {
        sub.validate()?;
        if cancel.is_cancelled() {
            return Ok(OracleOutcome::Cancelled);
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(OracleOutcome::BudgetExhausted);
        }
        let mut file =
            tempfile::Builder::new().suffix(".lp").tempfile().map_err(|e| OracleError::External(e.to_string()))?;
        std::io::Write::write_all(&mut file, export_lp(sub).as_bytes())
            .map_err(|e| OracleError::External(e.to_string()))?;
        let path = file.path().display().to_string();
        let cmd = if self.command.contains("{lp}") {
            self.command.replace("{lp}", &path)
        } else {
            format!("{} {}", self.command, path)
        };
        let output = Command::new("sh")
            .arg("-c")
            .arg(&cmd)
            .output()
            .map_err(|e| OracleError::External(format!("cannot run `{cmd}`: {e}")))?;
        if !output.status.success() {
            return Err(OracleError::External(format!("`{cmd}` exited with {}", output.status)));
        }
        if deadline.is_some_and(|d| Instant::now() >= d) {
            return Ok(OracleOutcome::BudgetExhausted);
        }
        match parse_solver_output(&String::from_utf8_lossy(&output.stdout), sub.n_vars)? {
            SolverReport::Infeasible => Ok(OracleOutcome::Infeasible),
            SolverReport::Solved { objective, ones } => {
                let mut x = vec![false; sub.n_vars];
                ones.into_iter().for_each(|i| x[i] = true);
                if !sub.is_feasible(&x) {
                    return Err(OracleError::External("solver returned an infeasible assignment".into()));
                }
                let value = sub.objective_value(&x);
                if (value as f64 - objective).abs() > 0.5 + 1e-9 * objective.abs() {
                    return Err(OracleError::External(format!(
                        "reported objective {objective} differs from exact value {value}"
                    )));
                }
                Ok(OracleOutcome::Optimal(Optimum { assignment: x, scaled_value: value, scale: sub.scale }))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::{LinearConstraint, LinearForm};
    use super::*;

    #[test]
    fn parses_reports() {
        let text = "Solving...\nObjective value: -3\nx1 1\nx2 = 0\nx3 1.0000\n";
        assert_eq!(parse_solver_output(text, 3).unwrap(), SolverReport::Solved { objective: -3.0, ones: vec![0, 2] });
        assert_eq!(parse_solver_output("Model is INFEASIBLE\n", 3).unwrap(), SolverReport::Infeasible);
        assert!(parse_solver_output("x1 1\n", 3).is_err());
        assert!(parse_solver_output("objective value 1\nx9 1\n", 3).is_err());
    }

    #[test]
    fn runs_a_scripted_solver() {
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("fake.sh");
        std::fs::write(&script, "#!/bin/sh\ngrep -q Binaries \"$1\" && echo 'objective value: -2' && echo 'x2 1'\n")
            .unwrap();
        let sub = Subproblem::linear(2, vec![], LinearForm::new(vec![1, -2], 0))
            .with_constraint(LinearConstraint::new(vec![1, 1], 1));
        let mut solver = ExternalSolver::new(format!("sh {}", script.display()));
        match solver.solve(&sub, &CancelToken::new(), None).unwrap() {
            OracleOutcome::Optimal(o) => {
                assert_eq!(o.assignment, vec![false, true]);
                assert_eq!(o.scaled_value, -2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
