//! Single-objective binary programs and the exact solver behind every
//! scalarization.
//!
//! A [`Subproblem`] is a binary program over implication constraints
//! `x_a >= x_b`, linear `<=` rows and either a linear objective or a
//! max-plus objective `max(A·x + a0, B·x + b0) + G·x + g0`. Coefficients are
//! integers; rational parameters are scaled up front and the common
//! denominator is kept in [`Subproblem::scale`].

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Instant;

use num_rational::Ratio;
use thiserror::Error;

mod bnb;
#[cfg(feature = "external-solver")]
pub mod external;
mod lp;

pub use bnb::{lower_bound, propagate, prune_infeasible, BranchAndBound, Conflict, PartialAssignment};
pub use lp::{export_lp, objective_constant, AUX_VAR};

/// Default cap on node expansions per call.
pub const DEFAULT_NODE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("coefficient magnitudes of {0} exceed the 64-bit range")]
    Overflow(&'static str),
    #[error("malformed subproblem: {0}")]
    Malformed(String),
    #[error("external solver failed: {0}")]
    External(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearForm {
    pub coeffs: Vec<i64>,
    pub constant: i64,
}

impl LinearForm {
    pub fn new(coeffs: Vec<i64>, constant: i64) -> Self {
        LinearForm { coeffs, constant }
    }

    pub fn eval(&self, x: &[bool]) -> i64 {
        self.constant + self.coeffs.iter().zip(x).filter(|(_, &b)| b).map(|(c, _)| c).sum::<i64>()
    }

    fn abs_sum(&self) -> i128 {
        self.constant.unsigned_abs() as i128 + self.coeffs.iter().map(|c| c.unsigned_abs() as i128).sum::<i128>()
    }
}

/// `coeffs · x <= bound`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearConstraint {
    pub coeffs: Vec<i64>,
    pub bound: i64,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<i64>, bound: i64) -> Self {
        LinearConstraint { coeffs, bound }
    }

    pub fn lhs(&self, x: &[bool]) -> i64 {
        self.coeffs.iter().zip(x).filter(|(_, &b)| b).map(|(c, _)| c).sum()
    }

    pub fn holds(&self, x: &[bool]) -> bool {
        self.lhs(x) <= self.bound
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectiveFn {
    Linear(LinearForm),
    /// `max(a, b) + augment`.
    MaxPlus {
        a: LinearForm,
        b: LinearForm,
        augment: LinearForm,
    },
}

impl ObjectiveFn {
    pub fn eval(&self, x: &[bool]) -> i64 {
        match self {
            ObjectiveFn::Linear(f) => f.eval(x),
            ObjectiveFn::MaxPlus { a, b, augment } => a.eval(x).max(b.eval(x)) + augment.eval(x),
        }
    }

    fn forms(&self) -> Vec<&LinearForm> {
        match self {
            ObjectiveFn::Linear(f) => vec![f],
            ObjectiveFn::MaxPlus { a, b, augment } => vec![a, b, augment],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subproblem {
    pub n_vars: usize,
    /// `(a, b)` means `x_a >= x_b`.
    pub implications: Vec<(usize, usize)>,
    pub constraints: Vec<LinearConstraint>,
    pub objective: ObjectiveFn,
    /// Positive denominator: the true objective is `objective / scale`.
    pub scale: i64,
}

impl Subproblem {
    pub fn linear(n_vars: usize, implications: Vec<(usize, usize)>, objective: LinearForm) -> Self {
        Subproblem {
            n_vars,
            implications,
            constraints: Vec::new(),
            objective: ObjectiveFn::Linear(objective),
            scale: 1,
        }
    }

    pub fn with_constraint(mut self, c: LinearConstraint) -> Self {
        self.constraints.push(c);
        self
    }

    /// Index bounds, vector lengths, positive scale, and that every partial
    /// sum fits in an `i64`.
    pub fn validate(&self) -> Result<(), OracleError> {
        let n = self.n_vars;
        if self.scale <= 0 {
            return Err(OracleError::Malformed(format!("scale must be positive, got {}", self.scale)));
        }
        if let Some(&(a, b)) = self.implications.iter().find(|&&(a, b)| a >= n || b >= n) {
            return Err(OracleError::Malformed(format!("implication ({a}, {b}) out of range for {n} variables")));
        }
        for c in &self.constraints {
            if c.coeffs.len() != n {
                return Err(OracleError::Malformed(format!(
                    "constraint has {} coefficients for {n} variables",
                    c.coeffs.len()
                )));
            }
            let mag = c.bound.unsigned_abs() as i128 + c.coeffs.iter().map(|v| v.unsigned_abs() as i128).sum::<i128>();
            if mag > i64::MAX as i128 {
                return Err(OracleError::Overflow("a linear constraint"));
            }
        }
        let forms = self.objective.forms();
        if forms.iter().any(|f| f.coeffs.len() != n) {
            return Err(OracleError::Malformed(format!("objective length differs from {n} variables")));
        }
        let total: i128 = match &self.objective {
            ObjectiveFn::Linear(f) => f.abs_sum(),
            ObjectiveFn::MaxPlus { a, b, augment } => a.abs_sum().max(b.abs_sum()) + augment.abs_sum(),
        };
        if total > i64::MAX as i128 {
            return Err(OracleError::Overflow("the objective"));
        }
        Ok(())
    }

    pub fn is_feasible(&self, x: &[bool]) -> bool {
        x.len() == self.n_vars
            && self.implications.iter().all(|&(a, b)| x[a] || !x[b])
            && self.constraints.iter().all(|c| c.holds(x))
    }

    /// Scaled objective value (numerator over [`Self::scale`]).
    pub fn objective_value(&self, x: &[bool]) -> i64 {
        self.objective.eval(x)
    }
}

/// An optimal assignment with its exact objective value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Optimum {
    pub assignment: Vec<bool>,
    /// Scaled objective value; divide by `scale` for the true value.
    pub scaled_value: i64,
    pub scale: i64,
}

impl Optimum {
    pub fn value(&self) -> Ratio<i64> {
        Ratio::new(self.scaled_value, self.scale)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleOutcome {
    Optimal(Optimum),
    Infeasible,
    Cancelled,
    /// Deadline passed or the node budget ran out before optimality was proven.
    BudgetExhausted,
}

/// Cooperative cancellation flag, cheap to clone and fire from any thread.
#[derive(Debug, Clone, Default)]
pub struct CancelToken(Arc<AtomicBool>);

impl CancelToken {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn cancel(&self) {
        self.0.store(true, Ordering::SeqCst);
    }

    pub fn is_cancelled(&self) -> bool {
        self.0.load(Ordering::SeqCst)
    }
}

/// Per-call counters reported by an oracle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallStats {
    pub nodes: u64,
}

/// An exact single-objective solver.
pub trait Oracle: Send {
    fn solve(
        &mut self,
        sub: &Subproblem,
        cancel: &CancelToken,
        deadline: Option<Instant>,
    ) -> Result<OracleOutcome, OracleError>;

    /// Counters of the most recent call.
    fn last_stats(&self) -> CallStats {
        CallStats::default()
    }
}
