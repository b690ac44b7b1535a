//! Builders for the single-objective subproblems: lexicographic stages,
//! weighted sums inside a box, the Augmecon and augmented Tchebycheff forms,
//! and plain epsilon-constraint programs.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::model::{BiObjectiveProblem, Objective, Point, Solution};
use crate::oracle::{LinearConstraint, LinearForm, ObjectiveFn, Subproblem};

/// Opposite corners of a box in objective space: `z1` upper-left,
/// `z2` bottom-right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BoxCorners {
    pub z1: Point,
    pub z2: Point,
}

impl BoxCorners {
    /// `None` unless `z1.f1 < z2.f1` and `z1.f2 > z2.f2`.
    pub fn new(z1: Point, z2: Point) -> Option<Self> {
        (z1.f1 < z2.f1 && z1.f2 > z2.f2).then_some(BoxCorners { z1, z2 })
    }

    /// Extent along f1.
    pub fn width(&self) -> i64 {
        self.z2.f1 - self.z1.f1
    }

    /// Extent along f2.
    pub fn height(&self) -> i64 {
        self.z1.f2 - self.z2.f2
    }

    pub fn area(&self) -> i128 {
        self.width() as i128 * self.height() as i128
    }

    pub fn diagonal_sq(&self) -> i128 {
        let (w, h) = (self.width() as i128, self.height() as i128);
        w * w + h * h
    }

    /// Whether an integer point can lie strictly inside.
    pub fn has_interior(&self) -> bool {
        self.width() >= 2 && self.height() >= 2
    }

    pub fn strictly_contains(&self, p: &Point) -> bool {
        self.z1.f1 < p.f1 && p.f1 < self.z2.f1 && self.z2.f2 < p.f2 && p.f2 < self.z1.f2
    }

    pub fn is_corner(&self, p: &Point) -> bool {
        *p == self.z1 || *p == self.z2
    }

    /// `other` lies inside `self` and is smaller.
    pub fn strictly_encloses(&self, other: &BoxCorners) -> bool {
        self.z1.f1 <= other.z1.f1
            && other.z2.f1 <= self.z2.f1
            && self.z2.f2 <= other.z2.f2
            && other.z1.f2 <= self.z1.f2
            && self != other
    }

    pub fn weights(&self) -> DichotomicWeights {
        DichotomicWeights { l1: self.height(), l2: self.width() }
    }

    /// Weighted value shared by both corners.
    pub fn level(&self) -> i128 {
        self.weights().value(&self.z1)
    }

    /// Convex part: on or below the level line through the corners.
    pub fn in_convex_part(&self, p: &Point) -> bool {
        self.weights().value(p) <= self.level()
    }
}

/// Weights that put both corners of a box on one level line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DichotomicWeights {
    pub l1: i64,
    pub l2: i64,
}

impl DichotomicWeights {
    pub fn value(&self, p: &Point) -> i128 {
        self.l1 as i128 * p.f1 as i128 + self.l2 as i128 * p.f2 as i128
    }
}

fn combine(a: &[i64], ka: i64, b: &[i64], kb: i64) -> Vec<i64> {
    a.iter().zip(b).map(|(x, y)| ka * x + kb * y).collect()
}

fn base(problem: &BiObjectiveProblem, objective: ObjectiveFn) -> Subproblem {
    Subproblem {
        n_vars: problem.n_vars(),
        implications: problem.implications.clone(),
        constraints: Vec::new(),
        objective,
        scale: 1,
    }
}

fn bound(problem: &BiObjectiveProblem, obj: Objective, limit: i64) -> LinearConstraint {
    LinearConstraint::new(problem.coefficients(obj).to_vec(), limit)
}

/// `min f_obj s.t. f_rest <= eps`.
pub fn epsilon_sub(problem: &BiObjectiveProblem, obj: Objective, eps: i64) -> Subproblem {
    let f = LinearForm::new(problem.coefficients(obj).to_vec(), 0);
    base(problem, ObjectiveFn::Linear(f)).with_constraint(bound(problem, obj.other(), eps))
}

/// First lexicographic stage: `min f_obj` over the whole problem.
pub fn lex_first_stage(problem: &BiObjectiveProblem, obj: Objective) -> Subproblem {
    base(problem, ObjectiveFn::Linear(LinearForm::new(problem.coefficients(obj).to_vec(), 0)))
}

/// Second stage: `min f_rest s.t. f_obj <= value`.
pub fn lex_second_stage(problem: &BiObjectiveProblem, obj: Objective, value: i64) -> Subproblem {
    epsilon_sub(problem, obj.other(), value)
}

/// Both lexicographic optima: `z1` minimizes f1 then f2, `z2` minimizes f2
/// then f1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexOptima {
    pub z1: Point,
    pub z2: Point,
    pub sol1: Solution,
    pub sol2: Solution,
}

impl LexOptima {
    /// Reference point for hypervolume: `(z2.f1, z1.f2)`.
    pub fn nadir(&self) -> Point {
        Point::new(self.z2.f1, self.z1.f2)
    }

    pub fn root_box(&self) -> Option<BoxCorners> {
        BoxCorners::new(self.z1, self.z2)
    }
}

/// Computes one lexicographic optimum with two solver calls. `solve` returns
/// `Ok(None)` on infeasibility.
pub fn lexicographic_optimum<E>(
    problem: &BiObjectiveProblem,
    obj: Objective,
    solve: &mut impl FnMut(&Subproblem) -> Result<Option<Vec<bool>>, E>,
) -> Result<Option<(Point, Vec<bool>)>, E> {
    let Some(x) = solve(&lex_first_stage(problem, obj))? else {
        return Ok(None);
    };
    let first = problem.image(&x).coord(obj);
    let Some(y) = solve(&lex_second_stage(problem, obj, first))? else {
        return Ok(None);
    };
    Ok(Some((problem.image(&y), y)))
}

/// Both lexicographic optima, four solver calls.
pub fn lexicographic_optima<E>(
    problem: &BiObjectiveProblem,
    mut solve: impl FnMut(&Subproblem) -> Result<Option<Vec<bool>>, E>,
) -> Result<Option<LexOptima>, E> {
    let Some((z1, x1)) = lexicographic_optimum(problem, Objective::Satisfaction, &mut solve)? else {
        return Ok(None);
    };
    let Some((z2, x2)) = lexicographic_optimum(problem, Objective::Cost, &mut solve)? else {
        return Ok(None);
    };
    Ok(Some(LexOptima { z1, z2, sol1: problem.solution(&x1), sol2: problem.solution(&x2) }))
}

/// `min λ1·f1 + λ2·f2` over the whole problem.
pub fn weighted_sum(problem: &BiObjectiveProblem, w: DichotomicWeights) -> Subproblem {
    let coeffs = combine(&problem.f1, w.l1, &problem.f2, w.l2);
    base(problem, ObjectiveFn::Linear(LinearForm::new(coeffs, 0)))
}

/// Weighted sum with the box's dichotomic weights, restricted to the open
/// box: `f1 <= z2.f1 - 1`, `f2 <= z1.f2 - 1`.
pub fn weighted_sum_in_box(problem: &BiObjectiveProblem, bx: &BoxCorners) -> Subproblem {
    weighted_sum(problem, bx.weights())
        .with_constraint(bound(problem, Objective::Satisfaction, bx.z2.f1 - 1))
        .with_constraint(bound(problem, Objective::Cost, bx.z1.f2 - 1))
}

/// `1 / (range + 1)`.
pub fn default_lambda(range: i64) -> Ratio<i64> {
    Ratio::new(1, range.max(0) + 1)
}

/// Floor of the midpoint of the corners' `rest` coordinates.
pub fn augmecon_epsilon(bx: &BoxCorners, obj: Objective) -> i64 {
    let rest = obj.other();
    (bx.z1.coord(rest) + bx.z2.coord(rest)).div_euclid(2)
}

/// `min f_obj + λ·f_rest s.t. f_rest <= eps`, scaled by λ's denominator.
/// This is the augmented epsilon-constraint program with its slack variable
/// eliminated.
pub fn augmecon_with_epsilon(problem: &BiObjectiveProblem, obj: Objective, lambda: Ratio<i64>, eps: i64) -> Subproblem {
    let (p, q) = (*lambda.numer(), *lambda.denom());
    let coeffs = combine(problem.coefficients(obj), q, problem.coefficients(obj.other()), p);
    let mut sub = base(problem, ObjectiveFn::Linear(LinearForm::new(coeffs, 0))).with_constraint(bound(
        problem,
        obj.other(),
        eps,
    ));
    sub.scale = q;
    sub
}

/// Augmecon program for a box: epsilon at the midpoint of the `rest` side.
pub fn augmecon_sub(problem: &BiObjectiveProblem, bx: &BoxCorners, obj: Objective, lambda: Ratio<i64>) -> Subproblem {
    augmecon_with_epsilon(problem, obj, lambda, augmecon_epsilon(bx, obj))
}

/// Parameters of the augmented Tchebycheff program for a box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TchebycheffParams {
    /// Local ideal point `(z1.f1, z2.f2)`.
    pub ideal: Point,
    pub w1: i64,
    pub w2: i64,
    pub rho: Ratio<i64>,
}

impl TchebycheffParams {
    pub fn for_box(bx: &BoxCorners) -> Self {
        let (w1, w2) = (bx.height(), bx.width());
        let denom = 2 * (bx.width() + bx.height() + 1);
        TchebycheffParams { ideal: Point::new(bx.z1.f1, bx.z2.f2), w1, w2, rho: Ratio::new(w1.min(w2), denom) }
    }

    /// The max term `max(w1·(f1 - t1), w2·(f2 - t2))`.
    pub fn max_term(&self, p: &Point) -> i64 {
        (self.w1 * (p.f1 - self.ideal.f1)).max(self.w2 * (p.f2 - self.ideal.f2))
    }
}

/// Augmented weighted Tchebycheff program over the region
/// `f1 <= z2.f1, f2 <= z1.f2`.
pub fn tchebycheff_sub(problem: &BiObjectiveProblem, bx: &BoxCorners) -> Subproblem {
    let tp = TchebycheffParams::for_box(bx);
    let d = 2 * (bx.width() + bx.height() + 1);
    let g = tp.w1.min(tp.w2);
    let (t1, t2) = (tp.ideal.f1, tp.ideal.f2);
    let scaled = |c: &[i64], k: i64| c.iter().map(|v| k * v).collect::<Vec<_>>();
    let a = LinearForm::new(scaled(&problem.f1, d * tp.w1), -d * tp.w1 * t1);
    let b = LinearForm::new(scaled(&problem.f2, d * tp.w2), -d * tp.w2 * t2);
    let augment = LinearForm::new(combine(&problem.f1, g, &problem.f2, g), -g * (t1 + t2));
    let mut sub = base(problem, ObjectiveFn::MaxPlus { a, b, augment })
        .with_constraint(bound(problem, Objective::Satisfaction, bx.z2.f1))
        .with_constraint(bound(problem, Objective::Cost, bx.z1.f2));
    sub.scale = d;
    sub
}
