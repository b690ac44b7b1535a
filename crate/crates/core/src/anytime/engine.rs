use std::time::{Duration, Instant};

use num_rational::Ratio;

use super::queue::{BoxQueue, Discipline, Method, QueuedBox};
use super::{Algorithm, BoxTrace, RunConfig, RunControl, RunError, RunEvent, RunReport, RunStats, Termination};
use crate::metrics::{Insertion, ParetoArchive};
use crate::model::{BiObjectiveProblem, Objective, Point};
use crate::oracle::{Oracle, OracleError, OracleOutcome, Subproblem};
use crate::scalarize::{
    augmecon_epsilon, augmecon_with_epsilon, default_lambda, epsilon_sub, lex_second_stage, lexicographic_optimum,
    tchebycheff_sub, weighted_sum, weighted_sum_in_box, BoxCorners,
};

/// Why the engine stopped early.
enum Stop {
    Term(Termination),
    Err(RunError),
}

impl From<OracleError> for Stop {
    fn from(e: OracleError) -> Self {
        Stop::Err(RunError::Oracle(e))
    }
}

type Step<T> = Result<T, Stop>;

/// `c` is close to `a` on the segment towards `b`: `|c - a| < |b - a| / 4`.
fn close_to(c: i64, a: i64, b: i64) -> bool {
    4 * (c - a).abs() < (b - a).abs()
}

/// Tags for the two boxes `(z1, z)` and `(z, z2)` created by a point `z`
/// found strictly inside `bx`.
pub fn choose_method(bx: &BoxCorners, z: &Point) -> (Method, Method) {
    if bx.in_convex_part(z) {
        return (Method::Hybrid, Method::Hybrid);
    }
    let near = |c: i64, a: i64, b: i64| close_to(c, a, b) || close_to(c, b, a);
    let pick = |t: bool| if t { Method::Tchebycheff } else { Method::Hybrid };
    (pick(near(z.f1, bx.z1.f1, bx.z2.f1)), pick(near(z.f2, bx.z2.f2, bx.z1.f2)))
}

fn split(bx: &BoxCorners, z: Point, tags: (Option<Method>, Option<Method>)) -> Vec<QueuedBox> {
    let mut out = Vec::with_capacity(2);
    if let Some(c) = BoxCorners::new(bx.z1, z) {
        out.push(QueuedBox { corners: c, tag: tags.0 });
    }
    if let Some(c) = BoxCorners::new(z, bx.z2) {
        out.push(QueuedBox { corners: c, tag: tags.1 });
    }
    out
}

/// Largest value `f_obj` can take: the sum of its positive coefficients.
fn max_value(problem: &BiObjectiveProblem, obj: Objective) -> i64 {
    problem.coefficients(obj).iter().filter(|&&c| c > 0).sum()
}

/// `1 / (range + 1)` with `range` the spread of `f_rest` over all solutions.
fn sweep_lambda(problem: &BiObjectiveProblem, obj: Objective) -> Ratio<i64> {
    let range: i64 = problem.coefficients(obj.other()).iter().map(|c| c.abs()).sum();
    default_lambda(range)
}

pub(crate) struct Engine<'a> {
    problem: &'a BiObjectiveProblem,
    config: &'a RunConfig,
    oracle: &'a mut dyn Oracle,
    sink: &'a mut dyn FnMut(&RunEvent),
    control: &'a RunControl,
    start: Instant,
    archive: ParetoArchive,
    events: Vec<RunEvent>,
    stats: RunStats,
    open_boxes: usize,
    budget_from: Option<u64>,
    last_answer: Duration,
    extremes: Option<(Point, Point)>,
    trace: Vec<BoxTrace>,
}

impl<'a> Engine<'a> {
    pub(crate) fn new(
        problem: &'a BiObjectiveProblem,
        config: &'a RunConfig,
        oracle: &'a mut dyn Oracle,
        sink: &'a mut dyn FnMut(&RunEvent),
        control: &'a RunControl,
    ) -> Self {
        Engine {
            problem,
            config,
            oracle,
            sink,
            control,
            start: Instant::now(),
            archive: ParetoArchive::new(),
            events: Vec::new(),
            stats: RunStats::default(),
            open_boxes: 0,
            budget_from: None,
            last_answer: Duration::ZERO,
            extremes: None,
            trace: Vec::new(),
        }
    }

    pub(crate) fn run(mut self) -> Result<RunReport, RunError> {
        self.start = Instant::now();
        let outcome = self.dispatch();
        let termination = match outcome {
            Ok(()) => Termination::Exhausted,
            Err(Stop::Term(t)) => t,
            Err(Stop::Err(e)) => return Err(e),
        };
        Ok(RunReport {
            algorithm: self.config.algorithm,
            archive: self.archive,
            events: self.events,
            termination,
            stats: self.stats,
            extremes: self.extremes,
            trace: self.trace,
        })
    }

    fn dispatch(&mut self) -> Step<()> {
        match self.config.algorithm {
            Algorithm::Econst1(obj) => return self.econst1(obj),
            Algorithm::Econst2(obj) => return self.econst2(obj),
            Algorithm::Augmecon(obj) => {
                let lambda = self.config.lambda.unwrap_or_else(|| sweep_lambda(self.problem, obj));
                return self.augmecon_sweep(obj, lambda);
            }
            _ => {}
        }
        let Some(root) = self.seed()? else {
            return Ok(());
        };
        match self.config.algorithm {
            Algorithm::Spf => self.boxes(Discipline::LargestArea, root, None, |e, b| e.spf_step(b)),
            Algorithm::AnyAugmecon(obj) => {
                let lambda = self.config.lambda.unwrap_or_else(|| sweep_lambda(self.problem, obj));
                self.boxes(Discipline::LargestArea, root, None, |e, b| e.augmecon_step(b, obj, lambda))
            }
            Algorithm::AnyTchebycheff => {
                self.boxes(Discipline::LargestArea, root, None, |e, b| e.plain_step(b, Method::Tchebycheff))
            }
            Algorithm::AnyHybrid => {
                self.boxes(Discipline::LargestArea, root, None, |e, b| e.plain_step(b, Method::Hybrid))
            }
            Algorithm::TchebycheffClassic => {
                self.boxes(Discipline::DepthFirst, root, None, |e, b| e.plain_step(b, Method::Tchebycheff))
            }
            Algorithm::EHybridClassic => {
                self.boxes(Discipline::DepthFirst, root, None, |e, b| e.plain_step(b, Method::Hybrid))
            }
            Algorithm::Ads => self.boxes(Discipline::LargestDiagonal, root, None, |e, b| e.ads_step(b)),
            Algorithm::MixHt => self.boxes(Discipline::LargestArea, root, Some(Method::Hybrid), |e, b| e.mix_step(b)),
            Algorithm::MixSht => self.mix_sht(root),
            Algorithm::Econst1(_) | Algorithm::Econst2(_) | Algorithm::Augmecon(_) => unreachable!(),
        }
    }

    fn deadline_instant(&self) -> Option<Instant> {
        self.config.deadline.map(|d| self.start + d)
    }

    fn expired(&self) -> bool {
        self.config.deadline.is_some_and(|d| self.start.elapsed() >= d)
    }

    /// One oracle call with every pre- and post-check of the run contract.
    fn call(&mut self, sub: &Subproblem) -> Step<Option<Vec<bool>>> {
        if !self.control.wait_if_paused() {
            return Err(Stop::Term(Termination::Cancelled));
        }
        if self.expired() {
            return Err(Stop::Term(Termination::Deadline));
        }
        if let (Some(limit), Some(from)) = (self.config.call_budget, self.budget_from) {
            if self.stats.oracle_calls - from >= limit {
                return Err(Stop::Term(Termination::CallBudget));
            }
        }
        self.stats.oracle_calls += 1;
        if self.budget_from.is_none() {
            self.stats.seed_calls += 1;
        }
        let outcome = self.oracle.solve(sub, self.control.token(), self.deadline_instant());
        self.stats.nodes += self.oracle.last_stats().nodes;
        let now = self.start.elapsed();
        match outcome? {
            OracleOutcome::Optimal(o) => {
                if self.config.deadline.is_some_and(|d| now > d) {
                    self.stats.late_discarded += 1;
                    return Err(Stop::Term(Termination::Deadline));
                }
                self.stats.optimal += 1;
                self.last_answer = now;
                Ok(Some(o.assignment))
            }
            OracleOutcome::Infeasible => {
                self.stats.infeasible += 1;
                Ok(None)
            }
            OracleOutcome::Cancelled => Err(Stop::Term(Termination::Cancelled)),
            OracleOutcome::BudgetExhausted if self.expired() => Err(Stop::Term(Termination::Deadline)),
            OracleOutcome::BudgetExhausted => Err(Stop::Term(Termination::NodeBudget)),
        }
    }

    /// Solves and maps the answer to its image.
    fn solve_point(&mut self, sub: &Subproblem) -> Step<Option<(Point, Vec<bool>, Duration)>> {
        Ok(self.call(sub)?.map(|x| (self.problem.image(&x), x, self.last_answer)))
    }

    fn emit(&mut self, z: Point, x: &[bool], at: Duration) {
        let sol = self.problem.solution(x);
        match self.archive.insert(z, sol.clone()) {
            Insertion::Duplicate | Insertion::Dominated => return,
            Insertion::Added(_) => {}
        }
        let at = self.events.last().map_or(at, |e| e.elapsed.max(at));
        let ev = RunEvent {
            index: self.events.len(),
            elapsed: at,
            point: z,
            solution: sol,
            oracle_calls: self.stats.oracle_calls,
            open_boxes: self.open_boxes,
        };
        (self.sink)(&ev);
        self.events.push(ev);
    }

    /// Emits both lexicographic optima and returns the root box, if any.
    fn seed(&mut self) -> Step<Option<BoxCorners>> {
        let problem = self.problem;
        let mut found = Vec::with_capacity(2);
        for obj in [Objective::Satisfaction, Objective::Cost] {
            let lex = lexicographic_optimum(problem, obj, &mut |sub: &Subproblem| self.call(sub))?;
            let Some((z, x)) = lex else {
                return Err(Stop::Err(RunError::Infeasible));
            };
            self.emit(z, &x, self.last_answer);
            found.push(z);
        }
        self.extremes = Some((found[0], found[1]));
        self.budget_from = Some(self.stats.oracle_calls);
        Ok(BoxCorners::new(found[0], found[1]))
    }

    /// Pops boxes until the queue empties, pushing the children each step
    /// returns.
    fn explore(
        &mut self,
        queue: &mut BoxQueue,
        mut step: impl FnMut(&mut Self, QueuedBox) -> Step<Vec<QueuedBox>>,
        extra_open: &dyn Fn() -> usize,
    ) -> Step<()> {
        while let Some(b) = queue.pop() {
            let next_priority = queue.peek_priority();
            self.open_boxes = queue.len() + extra_open();
            let children = step(self, b)?;
            let pushed: Vec<BoxCorners> = children.into_iter().filter(|c| queue.push(*c)).map(|c| c.corners).collect();
            self.open_boxes = queue.len() + extra_open();
            if self.config.trace_boxes {
                self.trace.push(BoxTrace {
                    extracted: b.corners,
                    priority: queue.discipline().priority(&b.corners),
                    next_priority,
                    children: pushed,
                });
            }
        }
        Ok(())
    }

    fn boxes(
        &mut self,
        discipline: Discipline,
        root: BoxCorners,
        tag: Option<Method>,
        step: impl FnMut(&mut Self, QueuedBox) -> Step<Vec<QueuedBox>>,
    ) -> Step<()> {
        let mut queue = BoxQueue::new(discipline);
        queue.push(QueuedBox { corners: root, tag });
        self.explore(&mut queue, step, &|| 0)
    }

    /// Looks for a point strictly inside the box with the given method.
    fn probe(&mut self, bx: &BoxCorners, method: Method) -> Step<Option<(Point, Vec<bool>, Duration)>> {
        let sub = match method {
            Method::Hybrid => weighted_sum_in_box(self.problem, bx),
            Method::Tchebycheff => tchebycheff_sub(self.problem, bx),
        };
        Ok(self.solve_point(&sub)?.filter(|(z, _, _)| bx.strictly_contains(z)))
    }

    fn plain_step(&mut self, b: QueuedBox, method: Method) -> Step<Vec<QueuedBox>> {
        let Some((z, x, at)) = self.probe(&b.corners, method)? else {
            return Ok(vec![]);
        };
        self.emit(z, &x, at);
        Ok(split(&b.corners, z, (None, None)))
    }

    fn spf_step(&mut self, b: QueuedBox) -> Step<Vec<QueuedBox>> {
        let Some((z, x, at)) = self.probe(&b.corners, Method::Hybrid)? else {
            return Ok(vec![]);
        };
        if !b.corners.in_convex_part(&z) {
            return Ok(vec![]);
        }
        self.emit(z, &x, at);
        Ok(split(&b.corners, z, (None, None)))
    }

    fn ads_step(&mut self, b: QueuedBox) -> Step<Vec<QueuedBox>> {
        let bx = b.corners;
        let w = bx.weights();
        let Some((z, x, at)) = self.solve_point(&weighted_sum(self.problem, w))? else {
            return Ok(vec![]);
        };
        if !bx.strictly_contains(&z) {
            return Ok(vec![]);
        }
        self.emit(z, &x, at);
        Ok(split(&bx, z, (None, None)))
    }

    fn augmecon_step(&mut self, b: QueuedBox, obj: Objective, lambda: Ratio<i64>) -> Step<Vec<QueuedBox>> {
        let bx = b.corners;
        let eps = augmecon_epsilon(&bx, obj);
        let Some((z, x, at)) = self.solve_point(&augmecon_with_epsilon(self.problem, obj, lambda, eps))? else {
            return Ok(vec![]);
        };
        if bx.strictly_contains(&z) {
            self.emit(z, &x, at);
            return Ok(split(&bx, z, (None, None)));
        }
        // Nothing between the corners on the constrained side of eps: keep
        // the other half.
        let half = match obj {
            Objective::Satisfaction => BoxCorners::new(bx.z1, Point::new(bx.z2.f1, eps)),
            Objective::Cost => BoxCorners::new(Point::new(eps, bx.z1.f2), bx.z2),
        };
        Ok(half.map(QueuedBox::new).into_iter().collect())
    }

    fn mix_step(&mut self, b: QueuedBox) -> Step<Vec<QueuedBox>> {
        let method = b.tag.unwrap_or(Method::Hybrid);
        let Some((z, x, at)) = self.probe(&b.corners, method)? else {
            return Ok(vec![]);
        };
        self.emit(z, &x, at);
        let (l, r) = choose_method(&b.corners, &z);
        Ok(split(&b.corners, z, (Some(l), Some(r))))
    }

    /// Phase 1 explores with the hybrid method and keeps convex-part points;
    /// concave-part points are held back and their boxes parked until phase 1
    /// runs dry, then phase 2 applies the mixed rule to the parked boxes.
    fn mix_sht(&mut self, root: BoxCorners) -> Step<()> {
        let mut boxes1 = BoxQueue::new(Discipline::LargestArea);
        boxes1.push(QueuedBox::tagged(root, Method::Hybrid));
        let parked = std::cell::RefCell::new(BoxQueue::new(Discipline::LargestArea));
        let mut held: Vec<(Point, Vec<bool>, Duration)> = Vec::new();

        let phase1 = self.explore(
            &mut boxes1,
            |e, b| {
                let Some((z, x, at)) = e.probe(&b.corners, Method::Hybrid)? else {
                    return Ok(vec![]);
                };
                if b.corners.in_convex_part(&z) {
                    e.emit(z, &x, at);
                    return Ok(split(&b.corners, z, (Some(Method::Hybrid), Some(Method::Hybrid))));
                }
                held.push((z, x, at));
                let mut p = parked.borrow_mut();
                for c in split(&b.corners, z, (Some(Method::Hybrid), Some(Method::Hybrid))) {
                    p.push(c);
                }
                Ok(vec![])
            },
            &|| parked.borrow().len(),
        );
        for (z, x, at) in held {
            self.emit(z, &x, at);
        }
        phase1?;
        let mut boxes2 = parked.into_inner();
        self.explore(&mut boxes2, |e, b| e.mix_step(b), &|| 0)
    }

    fn econst1(&mut self, obj: Objective) -> Step<()> {
        self.budget_from = Some(0);
        let rest = obj.other();
        let mut eps = max_value(self.problem, rest);
        while let Some((z, x, at)) = self.solve_point(&epsilon_sub(self.problem, obj, eps))? {
            self.emit(z, &x, at);
            eps = z.coord(rest) - 1;
        }
        Ok(())
    }

    fn econst2(&mut self, obj: Objective) -> Step<()> {
        self.budget_from = Some(0);
        let rest = obj.other();
        let mut eps = max_value(self.problem, rest);
        while let Some((first, _, _)) = self.solve_point(&epsilon_sub(self.problem, obj, eps))? {
            let mut sub = lex_second_stage(self.problem, obj, first.coord(obj));
            sub.constraints.push(crate::oracle::LinearConstraint::new(self.problem.coefficients(rest).to_vec(), eps));
            let Some((z, x, at)) = self.solve_point(&sub)? else {
                return Err(Stop::Err(RunError::Oracle(OracleError::Malformed(
                    "second lexicographic stage infeasible".into(),
                ))));
            };
            self.emit(z, &x, at);
            eps = z.coord(rest) - 1;
        }
        Ok(())
    }

    fn augmecon_sweep(&mut self, obj: Objective, lambda: Ratio<i64>) -> Step<()> {
        self.budget_from = Some(0);
        let rest = obj.other();
        let mut eps = max_value(self.problem, rest);
        while let Some((z, x, at)) = self.solve_point(&augmecon_with_epsilon(self.problem, obj, lambda, eps))? {
            self.emit(z, &x, at);
            eps = z.coord(rest) - 1;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::anytime::{run, solve_instance, RunConfig};
    use crate::metrics::{brute_force_front, classify_supported};
    use crate::model::{build_bi_objective, fixtures::e0};
    use crate::oracle::BranchAndBound;

    fn e0_front() -> Vec<Point> {
        vec![Point::new(-9, 9), Point::new(-5, 5), Point::new(-4, 4), Point::new(0, 0)]
    }

    #[test]
    fn closeness() {
        assert!(close_to(1, 0, 8));
        assert!(!close_to(2, 0, 8));
        assert!(!close_to(4, 0, 8));
        assert!(close_to(7, 8, 0));
    }

    #[test]
    fn choose_method_rules() {
        let bx = BoxCorners::new(Point::new(0, 8), Point::new(8, 0)).unwrap();
        // on the level line: convex part
        assert_eq!(choose_method(&bx, &Point::new(4, 4)), (Method::Hybrid, Method::Hybrid));
        // concave, f1 near z2.f1, f2 far from both ends
        assert_eq!(choose_method(&bx, &Point::new(7, 4)), (Method::Tchebycheff, Method::Hybrid));
        // concave, both coordinates central
        assert_eq!(choose_method(&bx, &Point::new(5, 5)), (Method::Hybrid, Method::Hybrid));
        // concave, f2 near z1.f2
        assert_eq!(choose_method(&bx, &Point::new(4, 7)), (Method::Hybrid, Method::Tchebycheff));
    }

    #[test]
    fn every_algorithm_on_e0() {
        let mut front = e0_front();
        front.sort();
        for a in Algorithm::ALL {
            let report = solve_instance(&e0(), &RunConfig::new(a)).unwrap();
            if a == Algorithm::Ads {
                // collinear front: the unbounded weighted sum ties with the corners
                assert!(report.points().iter().all(|p| front.contains(p)));
                assert!(report.archive.contains(&Point::new(-9, 9)) && report.archive.contains(&Point::new(0, 0)));
            } else {
                assert_eq!(report.points(), front, "{a}");
            }
            assert_eq!(report.termination, Termination::Exhausted, "{a}");
            if a != Algorithm::Ads {
                assert_eq!(report.archive.hypervolume(Point::new(0, 9)), 24, "{a}");
            }
        }
    }

    #[test]
    fn econst2_order_on_e0() {
        let report = solve_instance(&e0(), &RunConfig::new(Algorithm::Econst2(Objective::Satisfaction))).unwrap();
        let pts: Vec<Point> = report.events.iter().map(|e| e.point).collect();
        assert_eq!(pts, e0_front());
        // two calls per point plus the final infeasible one
        assert_eq!(report.stats.oracle_calls, 9);
    }

    #[test]
    fn augmecon_first_interior_point_on_e0() {
        let report = solve_instance(&e0(), &RunConfig::new(Algorithm::AnyAugmecon(Objective::Satisfaction))).unwrap();
        assert_eq!(report.events[2].point, Point::new(-4, 4));
        assert_eq!(report.stats.seed_calls, 4);
    }

    #[test]
    fn zero_deadline_emits_nothing() {
        let cfg = RunConfig::new(Algorithm::AnyHybrid).with_deadline(Duration::ZERO);
        let report = solve_instance(&e0(), &cfg).unwrap();
        assert_eq!(report.termination, Termination::Deadline);
        assert!(report.events.is_empty());
    }

    #[test]
    fn call_budget_counts_after_seeding() {
        let cfg = RunConfig::new(Algorithm::AnyHybrid).with_call_budget(1);
        let report = solve_instance(&e0(), &cfg).unwrap();
        assert_eq!(report.termination, Termination::CallBudget);
        assert_eq!(report.stats.oracle_calls, 5);
        assert_eq!(report.events.len(), 3);
    }

    #[test]
    fn stop_before_start_cancels() {
        let p = build_bi_objective(&e0());
        let control = RunControl::new();
        control.stop();
        let report =
            run(&p, &RunConfig::new(Algorithm::MixHt), &mut BranchAndBound::new(), &mut |_| {}, &control).unwrap();
        assert_eq!(report.termination, Termination::Cancelled);
        assert!(report.events.is_empty());
    }

    #[test]
    fn sink_sees_every_event() {
        let p = build_bi_objective(&e0());
        let mut seen = Vec::new();
        let report = run(
            &p,
            &RunConfig::new(Algorithm::Spf),
            &mut BranchAndBound::new(),
            &mut |e| seen.push(e.clone()),
            &RunControl::new(),
        )
        .unwrap();
        assert_eq!(seen, report.events);
    }

    /// Non-supported point: stakeholders whose requests are cheap for their
    /// weight on both ends, and a middling one in between.
    fn concave_instance() -> crate::model::NrpInstance {
        crate::model::NrpInstance::new("concave", vec![1, 5, 9], vec![5, 6, 7], vec![], vec![vec![1], vec![2], vec![3]])
            .unwrap()
    }

    #[test]
    fn mix_sht_defers_concave_points() {
        let inst = concave_instance();
        let front = brute_force_front(&inst).unwrap().points();
        let flags = classify_supported(&front);
        assert!(flags.iter().any(|f| !f), "fixture needs a non-supported point: {front:?}");
        let report = solve_instance(&inst, &RunConfig::new(Algorithm::MixSht)).unwrap();
        assert_eq!(report.points(), front);
        let supported: Vec<Point> = front.iter().zip(&flags).filter(|(_, f)| **f).map(|(p, _)| *p).collect();
        let first_concave = report.events.iter().position(|e| !supported.contains(&e.point)).unwrap();
        assert!(report.events[first_concave..].iter().all(|e| !supported.contains(&e.point)));
    }

    #[test]
    fn spf_keeps_only_supported() {
        let inst = concave_instance();
        let front = brute_force_front(&inst).unwrap().points();
        let flags = classify_supported(&front);
        let supported: Vec<Point> = front.iter().zip(&flags).filter(|(_, f)| **f).map(|(p, _)| *p).collect();
        let report = solve_instance(&inst, &RunConfig::new(Algorithm::Spf)).unwrap();
        assert_eq!(report.points(), supported);
    }

    #[test]
    fn trace_respects_box_discipline() {
        let cfg = RunConfig::new(Algorithm::AnyHybrid).with_trace();
        let report = solve_instance(&concave_instance(), &cfg).unwrap();
        assert!(!report.trace.is_empty());
        for t in &report.trace {
            assert!(t.next_priority.is_none_or(|n| n <= t.priority));
            assert!(t.children.iter().all(|c| t.extracted.strictly_encloses(c)));
        }
    }
}
