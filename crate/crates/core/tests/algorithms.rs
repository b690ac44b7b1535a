mod common;

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use biobj_core::anytime::{run, solve_instance, Algorithm, Discipline, RunConfig, RunControl, Termination};
use biobj_core::bench::{generate_instance, GeneratorParams};
use biobj_core::metrics::{brute_force_front, classify_supported};
use biobj_core::model::{build_bi_objective, Objective, Point};
use biobj_core::oracle::{BranchAndBound, CancelToken, Oracle, OracleOutcome};
use biobj_core::scalarize::{augmecon_sub, default_lambda, lexicographic_optima, tchebycheff_sub, BoxCorners};

use common::{acceptance_instances, enumerate_front};

fn small(seed: u64) -> biobj_core::model::NrpInstance {
    generate_instance(&GeneratorParams { n: 10, m: 6, request_density: 0.3, ..GeneratorParams::with_seed(seed) })
        .unwrap()
}

#[test]
fn brute_force_matches_full_enumeration() {
    for seed in 100..120 {
        let inst = small(seed);
        assert_eq!(brute_force_front(&inst).unwrap().points(), enumerate_front(&inst), "seed {seed}");
    }
}

#[test]
fn emitted_points_are_never_dominated_later() {
    let strict = [
        Algorithm::AnyHybrid,
        Algorithm::AnyTchebycheff,
        Algorithm::AnyAugmecon(Objective::Satisfaction),
        Algorithm::AnyAugmecon(Objective::Cost),
        Algorithm::MixHt,
        Algorithm::MixSht,
        Algorithm::Econst2(Objective::Satisfaction),
        Algorithm::Econst2(Objective::Cost),
        Algorithm::Augmecon(Objective::Satisfaction),
        Algorithm::Augmecon(Objective::Cost),
        Algorithm::EHybridClassic,
        Algorithm::TchebycheffClassic,
    ];
    for inst in acceptance_instances().iter().take(12) {
        let front = brute_force_front(inst).unwrap().points();
        for a in strict {
            let r = solve_instance(inst, &RunConfig::new(a)).unwrap();
            for e in &r.events {
                assert!(front.contains(&e.point), "{a} emitted non-efficient {} on {}", e.point, inst.name);
            }
        }
    }
}

#[test]
fn econst1_filters_weak_points() {
    for inst in acceptance_instances().iter().take(10) {
        let front = brute_force_front(inst).unwrap().points();
        for obj in [Objective::Satisfaction, Objective::Cost] {
            let r = solve_instance(inst, &RunConfig::new(Algorithm::Econst1(obj))).unwrap();
            assert_eq!(r.points(), front);
        }
    }
}

#[test]
fn box_discipline_holds_in_traces() {
    let algos = [
        (Algorithm::AnyHybrid, Discipline::LargestArea),
        (Algorithm::AnyTchebycheff, Discipline::LargestArea),
        (Algorithm::AnyAugmecon(Objective::Cost), Discipline::LargestArea),
        (Algorithm::Spf, Discipline::LargestArea),
        (Algorithm::MixHt, Discipline::LargestArea),
        (Algorithm::Ads, Discipline::LargestDiagonal),
    ];
    for inst in acceptance_instances().iter().take(8) {
        for (a, d) in algos {
            let r = solve_instance(inst, &RunConfig::new(a).with_trace()).unwrap();
            for t in &r.trace {
                assert_eq!(t.priority, d.priority(&t.extracted));
                assert!(t.next_priority.is_none_or(|n| n <= t.priority), "{a}: non-maximal extraction");
                for c in &t.children {
                    assert!(t.extracted.strictly_encloses(c), "{a}: child {c:?} escapes {:?}", t.extracted);
                    assert!(c.has_interior());
                }
            }
        }
    }
}

#[test]
fn mix_sht_emits_supported_points_first() {
    let mut checked = 0;
    for seed in 1..=40 {
        let inst = small(seed);
        let front = brute_force_front(&inst).unwrap().points();
        let flags = classify_supported(&front);
        if flags.iter().all(|f| *f) {
            continue;
        }
        checked += 1;
        let supported: Vec<Point> = front.iter().zip(&flags).filter(|(_, f)| **f).map(|(p, _)| *p).collect();
        let r = solve_instance(&inst, &RunConfig::new(Algorithm::MixSht)).unwrap();
        assert_eq!(r.points(), front);
        let kinds: Vec<bool> = r.events.iter().map(|e| supported.contains(&e.point)).collect();
        assert!(kinds.windows(2).all(|w| w[0] || !w[1]), "seed {seed}: supported point after a non-supported one");
    }
    assert!(checked >= 10, "only {checked} instances with non-supported points");
}

#[test]
fn scalarized_optima_are_efficient() {
    let mut bnb = BranchAndBound::new();
    for seed in 200..250 {
        let inst = small(seed);
        let front = brute_force_front(&inst).unwrap().points();
        let p = build_bi_objective(&inst);
        let lex = lexicographic_optima(&p, |sub| {
            Ok::<_, ()>(match bnb.solve(sub, &CancelToken::new(), None).unwrap() {
                OracleOutcome::Optimal(o) => Some(o.assignment),
                _ => None,
            })
        })
        .unwrap()
        .unwrap();
        let Some(root) = lex.root_box() else { continue };
        for obj in [Objective::Satisfaction, Objective::Cost] {
            let range = root.width().max(root.height());
            let sub = augmecon_sub(&p, &root, obj, default_lambda(range));
            if let OracleOutcome::Optimal(o) = bnb.solve(&sub, &CancelToken::new(), None).unwrap() {
                assert!(front.contains(&p.image(&o.assignment)), "seed {seed}");
            }
        }
        // every box between consecutive front points and the root box
        let mut boxes = vec![root];
        boxes.extend(front.windows(3).filter_map(|w| BoxCorners::new(w[0], w[2])));
        for bx in boxes {
            if let OracleOutcome::Optimal(o) = bnb.solve(&tchebycheff_sub(&p, &bx), &CancelToken::new(), None).unwrap()
            {
                assert!(front.contains(&p.image(&o.assignment)), "seed {seed} box {bx:?}");
            }
        }
    }
}

#[test]
fn pause_and_resume_do_not_change_the_run() {
    let inst = acceptance_instances().remove(4);
    let p = build_bi_objective(&inst);
    let cfg = RunConfig::new(Algorithm::MixHt);
    let plain = run(&p, &cfg, &mut BranchAndBound::new(), &mut |_| {}, &RunControl::new()).unwrap();

    let control = RunControl::new();
    let done = Arc::new(AtomicBool::new(false));
    let toggler = {
        let (control, done) = (control.clone(), done.clone());
        std::thread::spawn(move || {
            let mut pauses = 0;
            while !done.load(Ordering::SeqCst) {
                control.pause();
                std::thread::sleep(Duration::from_micros(300));
                control.resume();
                pauses += 1;
                std::thread::sleep(Duration::from_micros(100));
            }
            pauses
        })
    };
    let steered = run(&p, &cfg, &mut BranchAndBound::new(), &mut |_| {}, &control).unwrap();
    done.store(true, Ordering::SeqCst);
    assert!(toggler.join().unwrap() > 0);
    let pts = |r: &biobj_core::RunReport| r.events.iter().map(|e| (e.point, e.oracle_calls)).collect::<Vec<_>>();
    assert_eq!(pts(&plain), pts(&steered));
    assert_eq!(plain.archive, steered.archive);
}

#[test]
fn stop_from_another_thread() {
    let inst = generate_instance(&GeneratorParams { n: 60, m: 30, ..GeneratorParams::with_seed(5) }).unwrap();
    let p = build_bi_objective(&inst);
    let control = RunControl::new();
    let c2 = control.clone();
    let stopper = std::thread::spawn(move || {
        std::thread::sleep(Duration::from_millis(30));
        c2.stop();
    });
    let r = run(
        &p,
        &RunConfig::new(Algorithm::Econst1(Objective::Satisfaction)),
        &mut BranchAndBound::new(),
        &mut |_| {},
        &control,
    )
    .unwrap();
    stopper.join().unwrap();
    assert_eq!(r.termination, Termination::Cancelled);
}

#[test]
fn call_budget_is_a_prefix_of_the_full_run() {
    let inst = acceptance_instances().remove(0);
    let full = solve_instance(&inst, &RunConfig::new(Algorithm::AnyHybrid)).unwrap();
    for budget in [0u64, 1, 3, 6] {
        let r = solve_instance(&inst, &RunConfig::new(Algorithm::AnyHybrid).with_call_budget(budget)).unwrap();
        let n = r.events.len();
        let a: Vec<Point> = r.events.iter().map(|e| e.point).collect();
        let b: Vec<Point> = full.events[..n].iter().map(|e| e.point).collect();
        assert_eq!(a, b);
        assert_eq!(
            r.stats.oracle_calls,
            r.stats.seed_calls + budget.min(full.stats.oracle_calls - full.stats.seed_calls)
        );
    }
}
