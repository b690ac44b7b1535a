use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::{CallStats, CancelToken, LinearForm, ObjectiveFn, Optimum, Oracle, OracleError, OracleOutcome, Subproblem};

const FREE: i8 = -1;

/// Variable values over {0, 1, free}.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PartialAssignment {
    vals: Vec<i8>,
}

impl PartialAssignment {
    pub fn free(n: usize) -> Self {
        PartialAssignment { vals: vec![FREE; n] }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn get(&self, var: usize) -> Option<bool> {
        match self.vals[var] {
            FREE => None,
            v => Some(v == 1),
        }
    }

    /// Fixes a variable without propagating.
    pub fn fix(&mut self, var: usize, value: bool) {
        self.vals[var] = value as i8;
    }

    pub fn is_complete(&self) -> bool {
        self.vals.iter().all(|&v| v != FREE)
    }

    /// Free variables read as 0.
    pub fn to_assignment(&self) -> Vec<bool> {
        self.vals.iter().map(|&v| v == 1).collect()
    }
}

/// A variable forced to both 0 and 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conflict {
    pub var: usize,
}

/// Implication adjacency: `up[b]` lists every `a` with `x_a >= x_b`,
/// `down[a]` every such `b`.
struct Graph {
    up: Vec<Vec<usize>>,
    down: Vec<Vec<usize>>,
}

impl Graph {
    fn new(sub: &Subproblem) -> Self {
        let mut up = vec![Vec::new(); sub.n_vars];
        let mut down = vec![Vec::new(); sub.n_vars];
        for &(a, b) in &sub.implications {
            up[b].push(a);
            down[a].push(b);
        }
        Graph { up, down }
    }

    fn propagate(&self, vals: &mut [i8], mut queue: Vec<usize>) -> Result<(), Conflict> {
        while let Some(v) = queue.pop() {
            let (next, forced) = if vals[v] == 1 { (&self.up[v], 1) } else { (&self.down[v], 0) };
            for &u in next {
                match vals[u] {
                    FREE => {
                        vals[u] = forced;
                        queue.push(u);
                    }
                    x if x != forced => return Err(Conflict { var: u }),
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

/// Closes the implications over a partial assignment: a variable at 1 forces
/// its prerequisites to 1, a variable at 0 forces its dependents to 0.
pub fn propagate(sub: &Subproblem, pa: &mut PartialAssignment) -> Result<(), Conflict> {
    let graph = Graph::new(sub);
    let fixed: Vec<usize> = (0..pa.vals.len()).filter(|&v| pa.vals[v] != FREE).collect();
    graph.propagate(&mut pa.vals, fixed)
}

fn form_bound(f: &LinearForm, vals: &[i8]) -> i64 {
    f.constant
        + f.coeffs
            .iter()
            .zip(vals)
            .map(|(&c, &v)| match v {
                1 => c,
                0 => 0,
                _ => c.min(0),
            })
            .sum::<i64>()
}

fn bound_of(obj: &ObjectiveFn, vals: &[i8]) -> i64 {
    match obj {
        ObjectiveFn::Linear(f) => form_bound(f, vals),
        ObjectiveFn::MaxPlus { a, b, augment } => {
            form_bound(a, vals).max(form_bound(b, vals)) + form_bound(augment, vals)
        }
    }
}

/// Admissible bound on the scaled objective over all completions: fixed part
/// plus the negative free coefficients of each linear form.
pub fn lower_bound(pa: &PartialAssignment, sub: &Subproblem) -> i64 {
    bound_of(&sub.objective, &pa.vals)
}

fn violates_rows(sub: &Subproblem, vals: &[i8]) -> bool {
    sub.constraints.iter().any(|c| {
        let min_lhs: i64 = c
            .coeffs
            .iter()
            .zip(vals)
            .map(|(&d, &v)| match v {
                1 => d,
                0 => 0,
                _ => d.min(0),
            })
            .sum();
        min_lhs > c.bound
    })
}

/// True when some linear row cannot be satisfied by any completion.
pub fn prune_infeasible(pa: &PartialAssignment, sub: &Subproblem) -> bool {
    violates_rows(sub, &pa.vals)
}

struct Node {
    vals: Vec<i8>,
    bound: i64,
    depth: u32,
    seq: u64,
}

// BinaryHeap is a max-heap: the "greatest" node is the lowest bound, then the
// deepest, then the oldest.
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.cmp(&self.bound).then(self.depth.cmp(&other.depth)).then(other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

/// Best-first branch-and-bound over the binary variables.
///
/// Nodes are closed under implication propagation, pruned by row minima and
/// by the incumbent, and branched on the free variable with the largest
/// objective coefficient magnitude.
#[derive(Debug, Clone)]
pub struct BranchAndBound {
    pub node_budget: u64,
    stats: CallStats,
}

impl Default for BranchAndBound {
    fn default() -> Self {
        BranchAndBound { node_budget: super::DEFAULT_NODE_BUDGET, stats: CallStats::default() }
    }
}

impl BranchAndBound {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_node_budget(node_budget: u64) -> Self {
        BranchAndBound { node_budget, ..Self::default() }
    }
}

struct Search<'a> {
    sub: &'a Subproblem,
    graph: Graph,
    order: Vec<usize>,
    incumbent: Option<(i64, Vec<bool>)>,
}

impl Search<'_> {
    fn offer(&mut self, x: Vec<bool>) {
        if !self.sub.constraints.iter().all(|c| c.holds(&x)) {
            return;
        }
        let v = self.sub.objective.eval(&x);
        if self.incumbent.as_ref().is_none_or(|(best, _)| v < *best) {
            self.incumbent = Some((v, x));
        }
    }

    /// Cheap completions of a node: free variables at 0, and a greedy
    /// completion that turns on every free variable whose coefficient in the
    /// currently dominant form is negative.
    fn complete(&mut self, vals: &[i8]) {
        self.offer(vals.iter().map(|&v| v == 1).collect());
        let form = match &self.sub.objective {
            ObjectiveFn::Linear(f) => vec![f],
            ObjectiveFn::MaxPlus { a, b, augment } => {
                if form_bound(a, vals) >= form_bound(b, vals) {
                    vec![a, augment]
                } else {
                    vec![b, augment]
                }
            }
        };
        let mut greedy = vals.to_vec();
        let mut queue = Vec::new();
        for (v, g) in greedy.iter_mut().enumerate() {
            if *g == FREE && form.iter().map(|f| f.coeffs[v]).sum::<i64>() < 0 {
                *g = 1;
                queue.push(v);
            }
        }
        if !queue.is_empty() && self.graph.propagate(&mut greedy, queue).is_ok() {
            self.offer(greedy.iter().map(|&v| v == 1).collect());
        }
    }

    fn beats_incumbent(&self, bound: i64) -> bool {
        self.incumbent.as_ref().is_none_or(|(best, _)| bound < *best)
    }
}

impl Oracle for BranchAndBound {
    fn solve(
        &mut self,
        sub: &Subproblem,
        cancel: &CancelToken,
        deadline: Option<Instant>,
    ) -> Result<OracleOutcome, OracleError> {
        sub.validate()?;
        self.stats = CallStats::default();
        let n = sub.n_vars;
        let score: Vec<i64> = (0..n)
            .map(|v| match &sub.objective {
                ObjectiveFn::Linear(f) => f.coeffs[v].abs(),
                ObjectiveFn::MaxPlus { a, b, augment } => {
                    a.coeffs[v].abs().max(b.coeffs[v].abs()).max(augment.coeffs[v].abs())
                }
            })
            .collect();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&v| std::cmp::Reverse(score[v]));
        let mut search = Search { sub, graph: Graph::new(sub), order, incumbent: None };

        let mut heap = BinaryHeap::new();
        let mut seq = 0u64;
        let root = vec![FREE; n];
        if !violates_rows(sub, &root) {
            heap.push(Node { bound: bound_of(&sub.objective, &root), vals: root, depth: 0, seq });
        }

        while let Some(node) = heap.pop() {
            if !search.beats_incumbent(node.bound) {
                break;
            }
            if cancel.is_cancelled() {
                return Ok(OracleOutcome::Cancelled);
            }
            if deadline.is_some_and(|d| Instant::now() >= d) || self.stats.nodes >= self.node_budget {
                return Ok(OracleOutcome::BudgetExhausted);
            }
            self.stats.nodes += 1;

            search.complete(&node.vals);
            if !search.beats_incumbent(node.bound) {
                // the popped bound is the smallest open bound
                break;
            }
            let Some(var) = search.order.iter().copied().find(|&v| node.vals[v] == FREE) else {
                continue;
            };
            for value in [1i8, 0] {
                let mut vals = node.vals.clone();
                vals[var] = value;
                if search.graph.propagate(&mut vals, vec![var]).is_err() || violates_rows(sub, &vals) {
                    continue;
                }
                let bound = bound_of(&sub.objective, &vals);
                if search.beats_incumbent(bound) {
                    seq += 1;
                    heap.push(Node { vals, bound, depth: node.depth + 1, seq });
                }
            }
        }

        Ok(match search.incumbent {
            Some((value, assignment)) => {
                debug_assert!(sub.is_feasible(&assignment));
                OracleOutcome::Optimal(Optimum { assignment, scaled_value: value, scale: sub.scale })
            }
            None => OracleOutcome::Infeasible,
        })
    }

    fn last_stats(&self) -> CallStats {
        self.stats
    }
}
