//! Acceptance suite. Prints one PASS/FAIL line per criterion; run with
//! `cargo test -p biobj-core --test acceptance -- --nocapture` to see them.

mod common;

use std::time::{Duration, Instant};

use biobj_core::anytime::{run, solve_instance, Algorithm, RunConfig, RunControl, RunReport, Termination};
use biobj_core::bench::{generate_instance, GeneratorParams, Reference};
use biobj_core::metrics::{brute_force_front, classify_supported, ParetoArchive};
use biobj_core::model::{build_bi_objective, NrpInstance, Objective, Point};
use biobj_core::oracle::{BranchAndBound, CallStats, CancelToken, Oracle, OracleError, OracleOutcome, Subproblem};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{acceptance_instances, enumerate_sub, random_subproblem};

const S1: Objective = Objective::Satisfaction;
const S2: Objective = Objective::Cost;

const COMPLETE: [Algorithm; 14] = [
    Algorithm::AnyAugmecon(S1),
    Algorithm::AnyAugmecon(S2),
    Algorithm::AnyTchebycheff,
    Algorithm::AnyHybrid,
    Algorithm::MixHt,
    Algorithm::MixSht,
    Algorithm::Econst1(S1),
    Algorithm::Econst1(S2),
    Algorithm::Econst2(S1),
    Algorithm::Econst2(S2),
    Algorithm::Augmecon(S1),
    Algorithm::Augmecon(S2),
    Algorithm::EHybridClassic,
    Algorithm::TchebycheffClassic,
];

struct Verdict {
    name: &'static str,
    ok: bool,
    detail: String,
}

fn report(v: &Verdict) {
    println!("[{}] {}: {}", if v.ok { "PASS" } else { "FAIL" }, v.name, v.detail);
}

fn supported(front: &[Point]) -> Vec<Point> {
    front.iter().zip(classify_supported(front)).filter(|(_, s)| *s).map(|(p, _)| *p).collect()
}

fn hv_monotone(r: &RunReport, nadir: Point) -> bool {
    let mut archive = ParetoArchive::new();
    let mut last = 0;
    for ev in &r.events {
        archive.insert(ev.point, ev.solution.clone());
        let hv = archive.hypervolume(nadir);
        if hv < last {
            return false;
        }
        last = hv;
    }
    r.events.windows(2).all(|w| w[0].elapsed <= w[1].elapsed)
}

fn oracle_vs_enumeration() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut bnb = BranchAndBound::new();
    let mut mismatches = Vec::new();
    let mut infeasible = 0;
    for i in 0..200 {
        let sub = random_subproblem(&mut rng);
        let expected = enumerate_sub(&sub);
        let got = match bnb.solve(&sub, &CancelToken::new(), None).unwrap() {
            OracleOutcome::Optimal(o) => {
                assert!(sub.is_feasible(&o.assignment));
                assert_eq!(sub.objective_value(&o.assignment), o.scaled_value);
                Some(o.scaled_value)
            }
            OracleOutcome::Infeasible => None,
            other => panic!("unexpected outcome {other:?}"),
        };
        infeasible += usize::from(expected.is_none());
        if got != expected {
            mismatches.push(i);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Verdict {
        name: "oracle agrees with enumeration on 200 subproblems",
        ok: mismatches.is_empty() && secs < 10.0,
        detail: format!("{} mismatches, {infeasible} infeasible cases, {secs:.2}s (limit 10s)", mismatches.len()),
    }
}

struct Ground {
    inst: NrpInstance,
    front: Vec<Point>,
    reference: Reference,
}

fn ground_truth() -> Vec<Ground> {
    acceptance_instances()
        .into_iter()
        .map(|inst| {
            let front = brute_force_front(&inst).unwrap().points();
            let reference = Reference::from_front(&front).unwrap();
            Ground { inst, front, reference }
        })
        .collect()
}

fn full_front_exactness(ground: &[Ground], monotone_ok: &mut bool) -> Verdict {
    let start = Instant::now();
    let mut failures = Vec::new();
    let mut sizes = Vec::new();
    for g in ground {
        sizes.push(g.front.len());
        for a in COMPLETE {
            let r = solve_instance(&g.inst, &RunConfig::new(a)).unwrap();
            *monotone_ok &= hv_monotone(&r, g.reference.nadir);
            if r.points() != g.front || r.termination != Termination::Exhausted {
                failures.push(format!("{} {a}", g.inst.name));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    sizes.sort();
    Verdict {
        name: "14 complete algorithms reproduce the brute-force front on 30 instances",
        ok: failures.is_empty() && secs < 60.0,
        detail: format!(
            "{} of {} runs differ {:?}; |PF| from {} to {}; {secs:.2}s (limit 60s)",
            failures.len(),
            ground.len() * COMPLETE.len(),
            failures.iter().take(5).collect::<Vec<_>>(),
            sizes[0],
            sizes[sizes.len() - 1]
        ),
    }
}

fn supported_claims(ground: &[Ground], monotone_ok: &mut bool) -> Verdict {
    let mut bad_spf = Vec::new();
    let mut bad_ads = Vec::new();
    let (mut n_spf, mut n_ads, mut n_pf) = (0, 0, 0);
    for g in ground {
        let want = supported(&g.front);
        let spf = solve_instance(&g.inst, &RunConfig::new(Algorithm::Spf)).unwrap();
        let ads = solve_instance(&g.inst, &RunConfig::new(Algorithm::Ads)).unwrap();
        *monotone_ok &= hv_monotone(&spf, g.reference.nadir) && hv_monotone(&ads, g.reference.nadir);
        if spf.points() != want {
            bad_spf.push(g.inst.name.clone());
        }
        if !ads.points().iter().all(|p| want.contains(p)) {
            bad_ads.push(g.inst.name.clone());
        }
        n_spf += spf.archive.len();
        n_ads += ads.archive.len();
        n_pf += g.front.len();
    }
    Verdict {
        name: "SPF = supported subset, ADS within it",
        ok: bad_spf.is_empty() && bad_ads.is_empty(),
        detail: format!(
            "SPF mismatches {bad_spf:?}, ADS outside {bad_ads:?}; totals |PF| {n_pf}, |SPF| {n_spf}, |ADS| {n_ads}"
        ),
    }
}

/// Built-in oracle that sleeps after each call, so answers land after the
/// deadline.
struct SlowOracle {
    inner: BranchAndBound,
    delay: Duration,
}

impl Oracle for SlowOracle {
    fn solve(
        &mut self,
        sub: &Subproblem,
        cancel: &CancelToken,
        deadline: Option<Instant>,
    ) -> Result<OracleOutcome, OracleError> {
        let out = self.inner.solve(sub, cancel, deadline);
        std::thread::sleep(self.delay);
        out
    }

    fn last_stats(&self) -> CallStats {
        self.inner.last_stats()
    }
}

fn deadline_discard(monotone_ok: bool) -> Verdict {
    let big = generate_instance(&GeneratorParams { n: 60, m: 30, ..GeneratorParams::with_seed(11) }).unwrap();
    let problem = build_bi_objective(&big);
    let mut violations = 0;
    let mut late = 0;
    let mut runs = 0;
    let mut deadline_stops = 0;
    for (i, a) in biobj_core::anytime::Algorithm::ALL.iter().enumerate() {
        for ms in [0u64, 3, 15, 40] {
            let deadline = Duration::from_millis(ms);
            let cfg = RunConfig::new(*a).with_deadline(deadline);
            let mut slow =
                SlowOracle { inner: BranchAndBound::new(), delay: Duration::from_millis(1 + (i as u64 % 3)) };
            let r = run(&problem, &cfg, &mut slow, &mut |_| {}, &RunControl::new()).unwrap();
            runs += 1;
            violations += r.events.iter().filter(|e| e.elapsed > deadline).count();
            late += r.stats.late_discarded;
            deadline_stops += usize::from(r.termination == Termination::Deadline);
        }
    }
    Verdict {
        name: "hypervolume non-decreasing and nothing after the deadline",
        ok: monotone_ok && violations == 0 && late > 0,
        detail: format!(
            "monotone over all exhausted runs: {monotone_ok}; {runs} deadline runs, {deadline_stops} stopped by the deadline, \
             {violations} events past it, {late} late answers discarded"
        ),
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn spread_vs_classic(ground: &[Ground]) -> Verdict {
    let mut wins = 0;
    let mut margins = Vec::new();
    for g in ground {
        let budget = g.front.len().div_ceil(10) as u64;
        let frac = |a: Algorithm| -> f64 {
            let runs: Vec<f64> = (0..3)
                .map(|_| {
                    let r = solve_instance(&g.inst, &RunConfig::new(a).with_call_budget(budget)).unwrap();
                    let hv = r.archive.hypervolume(g.reference.nadir);
                    hv as f64 / g.reference.total_hv as f64
                })
                .collect();
            median(runs)
        };
        let (any, classic) = (frac(Algorithm::AnyHybrid), frac(Algorithm::Econst1(S1)));
        if any > classic {
            wins += 1;
        }
        margins.push(any - classic);
    }
    let share = wins as f64 / ground.len() as f64;
    Verdict {
        name: "AnyHybrid beats Econst1(1) at ceil(|PF|/10) oracle answers",
        ok: share >= 0.8,
        detail: format!(
            "wins on {wins}/{} instances ({:.0}%, need 80%); median hv-fraction margin {:.3}",
            ground.len(),
            share * 100.0,
            median(margins)
        ),
    }
}

fn e0() -> NrpInstance {
    NrpInstance::new("E0", vec![2, 3, 4], vec![5, 4], vec![(1, 2)], vec![vec![2], vec![3]]).unwrap()
}

fn e0_ground_truths() -> Verdict {
    let inst = e0();
    let expected = vec![Point::new(-9, 9), Point::new(-5, 5), Point::new(-4, 4), Point::new(0, 0)];
    let enumerated = common::enumerate_front(&inst);
    let bf = brute_force_front(&inst).unwrap().points();
    let reference = Reference::from_front(&bf).unwrap();
    let mut ok = enumerated == expected
        && bf == expected
        && reference.nadir == Point::new(0, 9)
        && reference.total_hv == 24
        && classify_supported(&bf).iter().all(|s| *s);
    let mut bad = Vec::new();
    let mut ads_points = Vec::new();
    for a in Algorithm::ALL {
        let r = solve_instance(&inst, &RunConfig::new(a)).unwrap();
        let good = if a == Algorithm::Ads {
            ads_points = r.points();
            ads_points.iter().all(|p| expected.contains(p))
                && ads_points.contains(&expected[0])
                && ads_points.contains(&expected[3])
        } else {
            r.points() == expected && r.archive.hypervolume(Point::new(0, 9)) == 24
        };
        if !good {
            bad.push(a.to_string());
        }
    }
    ok &= bad.is_empty();
    Verdict {
        name: "E0 ground truths",
        ok,
        detail: format!(
            "front {bf:?}, nadir {}, hv {}, all supported; algorithms off {bad:?}; \
             ADS found {} of 4 (collinear front, weighted-sum ties return corners)",
            reference.nadir,
            reference.total_hv,
            ads_points.len()
        ),
    }
}

#[test]
fn acceptance() {
    // keep the first verdict off libtest's "test acceptance ..." line
    println!();
    let mut verdicts = vec![oracle_vs_enumeration()];
    report(&verdicts[0]);
    let ground = ground_truth();
    let mut monotone = true;
    for v in [full_front_exactness(&ground, &mut monotone), supported_claims(&ground, &mut monotone)] {
        report(&v);
        verdicts.push(v);
    }
    for v in [deadline_discard(monotone), spread_vs_classic(&ground), e0_ground_truths()] {
        report(&v);
        verdicts.push(v);
    }
    let failed: Vec<&str> = verdicts.iter().filter(|v| !v.ok).map(|v| v.name).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

/// Full-size check on the nrp1 benchmark; needs the dataset file in `BIOBJ_NRP1` and a
/// fast external solver. Takes minutes to hours.
#[test]
#[ignore]
fn nrp1_front_sizes() {
    let Ok(path) = std::env::var("BIOBJ_NRP1") else {
        println!("[SKIP] nrp1 reproduction: set BIOBJ_NRP1 to the nrp1 file");
        return;
    };
    let inst = biobj_core::bench::load_instance(std::path::Path::new(&path)).unwrap();
    assert_eq!((inst.n_requirements(), inst.n_stakeholders()), (140, 100));
    let spf = solve_instance(&inst, &RunConfig::new(Algorithm::Spf)).unwrap();
    let full = solve_instance(&inst, &RunConfig::new(Algorithm::AnyHybrid)).unwrap();
    let ok = spf.archive.len() == 28 && full.archive.len() == 465;
    println!(
        "[{}] nrp1 |PF| = {} (want 465), |SPF| = {} (want 28)",
        if ok { "PASS" } else { "FAIL" },
        full.archive.len(),
        spf.archive.len()
    );
    assert!(ok);
}
