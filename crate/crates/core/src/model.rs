//! Next Release Problem instances and their bi-objective binary program.
//!
//! Requirement ids and stakeholder ids are 1-based everywhere an instance
//! is exchanged (JSON, dataset files, HTTP). Internally a solution is a
//! single binary vector of length `n + m`: requirement variables first, then
//! stakeholder variables, in id order.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("instance has no requirements")]
    NoRequirements,
    #[error("instance has no stakeholders")]
    NoStakeholders,
    #[error("requirement {0} has negative cost {1}")]
    NegativeCost(usize, i64),
    #[error("stakeholder {0} has non-positive weight {1}")]
    NonPositiveWeight(usize, i64),
    #[error("stakeholder {0} requests no requirement")]
    EmptyRequests(usize),
    #[error("{context} references requirement {id}, but ids range over 1..={n}")]
    DanglingRequirement { context: String, id: usize, n: usize },
    #[error("request list references stakeholder {id}, but ids range over 1..={m}")]
    DanglingStakeholder { id: usize, m: usize },
    #[error("{got} request lists given for {m} stakeholders")]
    RequestListLength { got: usize, m: usize },
    #[error("stakeholder {0} listed twice in the request section")]
    DuplicateStakeholder(usize),
    #[error("solution lengths ({r}, {s}) do not match instance dimensions ({n}, {m})")]
    LengthMismatch { r: usize, s: usize, n: usize, m: usize },
}

/// An NRP instance: requirement costs, stakeholder weights, prerequisite
/// pairs and the requirements each stakeholder asks for.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NrpInstance {
    pub name: String,
    costs: Vec<i64>,
    weights: Vec<i64>,
    /// `(i, j)`: requirement `i` is a prerequisite of requirement `j`.
    precedence: Vec<(usize, usize)>,
    /// Sorted, deduplicated requirement ids per stakeholder.
    requests: Vec<Vec<usize>>,
}

impl NrpInstance {
    /// Builds and validates an instance. Ids in `precedence` and `requests`
    /// are 1-based. Duplicate precedence pairs and duplicate request ids are
    /// collapsed.
    pub fn new(
        name: impl Into<String>,
        costs: Vec<i64>,
        weights: Vec<i64>,
        precedence: Vec<(usize, usize)>,
        requests: Vec<Vec<usize>>,
    ) -> Result<Self, ModelError> {
        let n = costs.len();
        let m = weights.len();
        if n == 0 {
            return Err(ModelError::NoRequirements);
        }
        if m == 0 {
            return Err(ModelError::NoStakeholders);
        }
        if requests.len() != m {
            return Err(ModelError::RequestListLength { got: requests.len(), m });
        }
        for (i, &c) in costs.iter().enumerate() {
            if c < 0 {
                return Err(ModelError::NegativeCost(i + 1, c));
            }
        }
        for (k, &w) in weights.iter().enumerate() {
            if w < 1 {
                return Err(ModelError::NonPositiveWeight(k + 1, w));
            }
        }
        let check = |id: usize, context: &str| {
            if id == 0 || id > n {
                Err(ModelError::DanglingRequirement { context: context.to_string(), id, n })
            } else {
                Ok(())
            }
        };
        let mut seen = BTreeSet::new();
        let mut pairs = Vec::with_capacity(precedence.len());
        for &(i, j) in &precedence {
            check(i, "precedence pair")?;
            check(j, "precedence pair")?;
            if seen.insert((i, j)) {
                pairs.push((i, j));
            }
        }
        let mut reqs = Vec::with_capacity(m);
        for (k, list) in requests.into_iter().enumerate() {
            let set: BTreeSet<usize> = list.into_iter().collect();
            if set.is_empty() {
                return Err(ModelError::EmptyRequests(k + 1));
            }
            for &id in &set {
                check(id, &format!("stakeholder {}", k + 1))?;
            }
            reqs.push(set.into_iter().collect());
        }
        Ok(NrpInstance { name: name.into(), costs, weights, precedence: pairs, requests: reqs })
    }

    pub fn n_requirements(&self) -> usize {
        self.costs.len()
    }

    pub fn n_stakeholders(&self) -> usize {
        self.weights.len()
    }

    pub fn costs(&self) -> &[i64] {
        &self.costs
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn precedence(&self) -> &[(usize, usize)] {
        &self.precedence
    }

    /// Requirement ids (1-based) requested by stakeholder `k` (0-based index).
    pub fn requests_of(&self, k: usize) -> &[usize] {
        &self.requests[k]
    }

    pub fn requests(&self) -> &[Vec<usize>] {
        &self.requests
    }

    pub fn total_cost(&self) -> i64 {
        self.costs.iter().sum()
    }

    pub fn total_weight(&self) -> i64 {
        self.weights.iter().sum()
    }

    /// Returns a copy with some costs and weights replaced. Keys are 1-based
    /// ids; the result is validated like a fresh instance.
    pub fn with_overrides(&self, costs: &[(usize, i64)], weights: &[(usize, i64)]) -> Result<Self, ModelError> {
        let mut out = self.clone();
        for &(id, c) in costs {
            if id == 0 || id > out.costs.len() {
                return Err(ModelError::DanglingRequirement {
                    context: "cost override".into(),
                    id,
                    n: out.costs.len(),
                });
            }
            if c < 0 {
                return Err(ModelError::NegativeCost(id, c));
            }
            out.costs[id - 1] = c;
        }
        for &(id, w) in weights {
            if id == 0 || id > out.weights.len() {
                return Err(ModelError::DanglingStakeholder { id, m: out.weights.len() });
            }
            if w < 1 {
                return Err(ModelError::NonPositiveWeight(id, w));
            }
            out.weights[id - 1] = w;
        }
        Ok(out)
    }

    /// Parses the canonical JSON instance document.
    pub fn from_json(text: &str) -> Result<Self, InstanceDocError> {
        let doc: InstanceDoc = serde_json::from_str(text)?;
        Ok(doc.try_into()?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&InstanceDoc::from(self)).expect("instance documents always serialize")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&InstanceDoc::from(self)).expect("instance documents always serialize")
    }
}

#[derive(Debug, Error)]
pub enum InstanceDocError {
    #[error("malformed instance document: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid instance: {0}")]
    Model(#[from] ModelError),
}

/// Canonical JSON instance document:
/// `{name, costs:[...], weights:[...], precedence:[[i,j],...], requests:[[k,[ids]],...]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDoc {
    #[serde(default)]
    pub name: String,
    pub costs: Vec<i64>,
    pub weights: Vec<i64>,
    #[serde(default)]
    pub precedence: Vec<(usize, usize)>,
    pub requests: Vec<(usize, Vec<usize>)>,
}

impl From<&NrpInstance> for InstanceDoc {
    fn from(inst: &NrpInstance) -> Self {
        InstanceDoc {
            name: inst.name.clone(),
            costs: inst.costs.clone(),
            weights: inst.weights.clone(),
            precedence: inst.precedence.clone(),
            requests: inst.requests.iter().enumerate().map(|(k, r)| (k + 1, r.clone())).collect(),
        }
    }
}

impl TryFrom<InstanceDoc> for NrpInstance {
    type Error = ModelError;

    fn try_from(doc: InstanceDoc) -> Result<Self, ModelError> {
        let m = doc.weights.len();
        let mut requests: Vec<Option<Vec<usize>>> = vec![None; m];
        for (k, ids) in doc.requests {
            if k == 0 || k > m {
                return Err(ModelError::DanglingStakeholder { id: k, m });
            }
            if requests[k - 1].is_some() {
                return Err(ModelError::DuplicateStakeholder(k));
            }
            requests[k - 1] = Some(ids);
        }
        let requests = requests.into_iter().map(Option::unwrap_or_default).collect();
        NrpInstance::new(doc.name, doc.costs, doc.weights, doc.precedence, requests)
    }
}

/// Requirement selection `r` and stakeholder satisfaction `s`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Solution {
    pub r: Vec<bool>,
    pub s: Vec<bool>,
}

impl Solution {
    pub fn empty(n: usize, m: usize) -> Self {
        Solution { r: vec![false; n], s: vec![false; m] }
    }

    /// Splits a joint assignment (requirements then stakeholders).
    pub fn from_assignment(n: usize, x: &[bool]) -> Self {
        Solution { r: x[..n].to_vec(), s: x[n..].to_vec() }
    }

    pub fn to_assignment(&self) -> Vec<bool> {
        self.r.iter().chain(self.s.iter()).copied().collect()
    }

    /// 1-based ids of the selected requirements.
    pub fn selected_requirements(&self) -> Vec<usize> {
        self.r.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i + 1).collect()
    }

    /// 1-based ids of the satisfied stakeholders.
    pub fn satisfied_stakeholders(&self) -> Vec<usize> {
        self.s.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k + 1).collect()
    }
}

/// An image in objective space. Both objectives are minimized:
/// `f1` is the negated stakeholder satisfaction, `f2` the total cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Point {
    pub f1: i64,
    pub f2: i64,
}

impl Point {
    pub const fn new(f1: i64, f2: i64) -> Self {
        Point { f1, f2 }
    }

    /// Pareto dominance: no worse in both objectives, better in one.
    pub fn dominates(&self, other: &Point) -> bool {
        self.f1 <= other.f1 && self.f2 <= other.f2 && self != other
    }

    pub fn weakly_dominates(&self, other: &Point) -> bool {
        self.f1 <= other.f1 && self.f2 <= other.f2
    }

    pub fn coord(&self, obj: Objective) -> i64 {
        match obj {
            Objective::Satisfaction => self.f1,
            Objective::Cost => self.f2,
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.f1, self.f2)
    }
}

/// One of the two objectives. `Satisfaction` is f1, `Cost` is f2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Objective {
    Satisfaction,
    Cost,
}

impl Objective {
    /// Maps the conventional 1/2 numbering.
    pub fn from_index(i: u8) -> Option<Self> {
        match i {
            1 => Some(Objective::Satisfaction),
            2 => Some(Objective::Cost),
            _ => None,
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Objective::Satisfaction => 1,
            Objective::Cost => 2,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Objective::Satisfaction => Objective::Cost,
            Objective::Cost => Objective::Satisfaction,
        }
    }
}

fn check_lengths(inst: &NrpInstance, sol: &Solution) -> Result<(), ModelError> {
    if sol.r.len() != inst.n_requirements() || sol.s.len() != inst.n_stakeholders() {
        return Err(ModelError::LengthMismatch {
            r: sol.r.len(),
            s: sol.s.len(),
            n: inst.n_requirements(),
            m: inst.n_stakeholders(),
        });
    }
    Ok(())
}

/// Objective values of a solution, feasible or not.
pub fn evaluate(inst: &NrpInstance, sol: &Solution) -> Result<Point, ModelError> {
    check_lengths(inst, sol)?;
    let f1 = -inst.weights.iter().zip(&sol.s).filter(|(_, &b)| b).map(|(w, _)| w).sum::<i64>();
    let f2 = inst.costs.iter().zip(&sol.r).filter(|(_, &b)| b).map(|(c, _)| c).sum::<i64>();
    Ok(Point { f1, f2 })
}

/// Checks the prerequisite and request-coverage implications.
pub fn feasible(inst: &NrpInstance, sol: &Solution) -> Result<bool, ModelError> {
    check_lengths(inst, sol)?;
    let prec_ok = inst.precedence.iter().all(|&(i, j)| sol.r[i - 1] || !sol.r[j - 1]);
    let req_ok = inst.requests.iter().zip(&sol.s).all(|(ids, &sat)| !sat || ids.iter().all(|&i| sol.r[i - 1]));
    Ok(prec_ok && req_ok)
}

/// The instance as a bi-objective binary program: implications `x_a >= x_b`
/// over `n + m` variables and the coefficient vectors of both objectives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BiObjectiveProblem {
    pub n_requirements: usize,
    pub n_stakeholders: usize,
    /// `(a, b)` with 0-based variable indices, meaning `x_a >= x_b`.
    pub implications: Vec<(usize, usize)>,
    pub f1: Vec<i64>,
    pub f2: Vec<i64>,
}

impl BiObjectiveProblem {
    pub fn n_vars(&self) -> usize {
        self.n_requirements + self.n_stakeholders
    }

    pub fn coefficients(&self, obj: Objective) -> &[i64] {
        match obj {
            Objective::Satisfaction => &self.f1,
            Objective::Cost => &self.f2,
        }
    }

    /// Objective values of a joint assignment via the coefficient vectors.
    pub fn image(&self, x: &[bool]) -> Point {
        let dot = |c: &[i64]| c.iter().zip(x).filter(|(_, &b)| b).map(|(v, _)| v).sum::<i64>();
        Point { f1: dot(&self.f1), f2: dot(&self.f2) }
    }

    pub fn satisfies_implications(&self, x: &[bool]) -> bool {
        self.implications.iter().all(|&(a, b)| x[a] || !x[b])
    }

    pub fn solution(&self, x: &[bool]) -> Solution {
        Solution::from_assignment(self.n_requirements, x)
    }
}

/// Builds the binary program: one implication per prerequisite pair and one
/// per (requirement, stakeholder) request.
pub fn build_bi_objective(inst: &NrpInstance) -> BiObjectiveProblem {
    let n = inst.n_requirements();
    let m = inst.n_stakeholders();
    let mut implications: Vec<(usize, usize)> = inst.precedence.iter().map(|&(i, j)| (i - 1, j - 1)).collect();
    for (k, ids) in inst.requests.iter().enumerate() {
        implications.extend(ids.iter().map(|&i| (i - 1, n + k)));
    }
    let mut f1 = vec![0; n + m];
    let mut f2 = vec![0; n + m];
    for (k, &w) in inst.weights.iter().enumerate() {
        f1[n + k] = -w;
    }
    f2[..n].copy_from_slice(&inst.costs);
    BiObjectiveProblem { n_requirements: n, n_stakeholders: m, implications, f1, f2 }
}
