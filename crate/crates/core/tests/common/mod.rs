#![allow(dead_code)]

use biobj_core::bench::{generate_instance, GeneratorParams};
use biobj_core::metrics::pareto_filter;
use biobj_core::model::{build_bi_objective, NrpInstance, Point};
use biobj_core::oracle::{LinearConstraint, LinearForm, ObjectiveFn, Subproblem};
use rand::Rng;

/// Optimal scaled value by trying every assignment, `None` when infeasible.
pub fn enumerate_sub(sub: &Subproblem) -> Option<i64> {
    assert!(sub.n_vars <= 20);
    let mut best: Option<i64> = None;
    let mut x = vec![false; sub.n_vars];
    for mask in 0u32..(1 << sub.n_vars) {
        for (i, b) in x.iter_mut().enumerate() {
            *b = mask >> i & 1 == 1;
        }
        if !sub.implications.iter().all(|&(a, b)| x[a] || !x[b]) {
            continue;
        }
        if !sub
            .constraints
            .iter()
            .all(|c| c.coeffs.iter().zip(&x).filter(|(_, &b)| b).map(|(d, _)| d).sum::<i64>() <= c.bound)
        {
            continue;
        }
        let dot =
            |f: &LinearForm| f.constant + f.coeffs.iter().zip(&x).filter(|(_, &b)| b).map(|(d, _)| d).sum::<i64>();
        let v = match &sub.objective {
            ObjectiveFn::Linear(f) => dot(f),
            ObjectiveFn::MaxPlus { a, b, augment } => dot(a).max(dot(b)) + dot(augment),
        };
        best = Some(best.map_or(v, |b| b.min(v)));
    }
    best
}

fn vec_of(rng: &mut impl Rng, n: usize, lo: i64, hi: i64) -> Vec<i64> {
    (0..n).map(|_| rng.gen_range(lo..=hi)).collect()
}

pub fn random_subproblem(rng: &mut impl Rng) -> Subproblem {
    let n = rng.gen_range(1..=16);
    let implications = (0..rng.gen_range(0..=n)).map(|_| (rng.gen_range(0..n), rng.gen_range(0..n))).collect();
    let objective = if rng.gen_bool(0.6) {
        ObjectiveFn::Linear(LinearForm::new(vec_of(rng, n, -20, 20), rng.gen_range(-5..=5)))
    } else {
        ObjectiveFn::MaxPlus {
            a: LinearForm::new(vec_of(rng, n, -20, 20), rng.gen_range(-10..=10)),
            b: LinearForm::new(vec_of(rng, n, -20, 20), rng.gen_range(-10..=10)),
            augment: LinearForm::new(vec_of(rng, n, -3, 3), 0),
        }
    };
    let constraints = (0..rng.gen_range(0..=2))
        .map(|_| LinearConstraint::new(vec_of(rng, n, -10, 10), rng.gen_range(-15..=15)))
        .collect();
    Subproblem { n_vars: n, implications, constraints, objective, scale: 1 }
}

/// Exact front from all 2^(n+m) joint assignments.
pub fn enumerate_front(inst: &NrpInstance) -> Vec<Point> {
    let p = build_bi_objective(inst);
    let n = p.n_vars();
    assert!(n <= 22);
    let mut images = Vec::new();
    let mut x = vec![false; n];
    for mask in 0u32..(1 << n) {
        for (i, b) in x.iter_mut().enumerate() {
            *b = mask >> i & 1 == 1;
        }
        if p.satisfies_implications(&x) {
            images.push(p.image(&x));
        }
    }
    pareto_filter(&images)
}

/// The 30 generated acceptance instances.
pub fn acceptance_instances() -> Vec<NrpInstance> {
    (1..=30).map(|s| generate_instance(&GeneratorParams::with_seed(s)).unwrap()).collect()
}
