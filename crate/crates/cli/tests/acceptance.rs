//! Acceptance checks, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach stdout; exits nonzero on any failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use fcmm::dataset::{make_blobs, standardize, SyntheticSpec};
use fcmm::membership::MembershipMatrix;
use fcmm::objective::{aggregates, compute_centers, majorizer_h, phi, tangent_gradient};
use fcmm::oracle::{
    descent_chain_audit, finite_diff_gradient, gram_quad_oracle, gram_reweighting_oracle,
    random_data, random_membership,
};
use fcmm::solvers::{
    irw_auxiliary, solve, solve_observed, update_membership_classic, update_membership_irw,
    update_membership_mm, Algorithm, Termination,
};
use fcmm::{DataMatrix64, MembershipMatrix64, SolverConfig64};
use fcmm_cli::commands::{cmd_run, parse_trace, trace_file_name};
use fcmm_cli::{DatasetSource, RunManifest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

fn iris() -> DataMatrix64 {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv");
    standardize(&DatasetSource::iris(path).load().unwrap()).unwrap()
}

fn blobs(per_blob: usize, seed: u64) -> DataMatrix64 {
    let spec = SyntheticSpec {
        blob_count: 3,
        points_per_blob: per_blob,
        dim: 2,
        blob_stddev: 0.5,
        blob_center_scale: 5.0,
        seed,
    };
    standardize(&make_blobs(&spec).unwrap()).unwrap()
}

fn random_r(rng: &mut ChaCha8Rng) -> f64 {
    [1.5, 2.0, 3.0][rng.random_range(0..3)]
}

/// One MM step, one re-weighted inner step and one classic alternation from
/// the same iterate agree entrywise.
fn single_step_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let n = rng.random_range(5..=50);
        let d = rng.random_range(1..=5);
        let c = rng.random_range(2..=5);
        let r = random_r(&mut rng);
        let x = random_data(&mut rng, n, d);
        let g = random_membership(&mut rng, n, c).to_power(r).unwrap();
        let mm = update_membership_mm(&x, &g, r, 1e-12).unwrap();
        let irw = update_membership_irw(&x, &irw_auxiliary(&x, &g).unwrap(), r, 1e-12).unwrap();
        let centers = compute_centers(&aggregates(&x, &g).unwrap()).unwrap();
        let classic = update_membership_classic(&x, &centers, r, 1e-12).unwrap();
        worst = worst
            .max(mm.max_abs_diff(&irw))
            .max(mm.max_abs_diff(&classic));
    }
    outcome(
        worst <= 1e-12,
        format!("instances=100 max_abs_diff={worst:.3e} tol=1e-12"),
    )
}

/// phi(F+) <= h(G+|G) <= h(G|G) = phi(F) along 100 MM steps.
fn descent_audit() -> Outcome {
    let mut details = Vec::new();
    let mut passed = true;
    for (name, x) in [("blobs60", blobs(20, 7)), ("iris", iris())] {
        let cfg = SolverConfig64::new(3);
        let f0 = MembershipMatrix64::init_random(x.n(), 3, 3).unwrap();
        let report = descent_chain_audit(&x, &f0, &cfg, 100).unwrap();
        passed &= report.passed;
        details.push(format!(
            "{name}: steps={} max_violation={:.3e}",
            report.samples, report.max_error
        ));
    }
    outcome(passed, format!("{} tol=1e-10", details.join(" ")))
}

fn tangency_and_domination() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let (mut tangency, mut domination, mut samples) = (0.0f64, 0.0f64, 0usize);
    for _ in 0..20 {
        let n = rng.random_range(5..=40);
        let d = rng.random_range(1..=4);
        let c = rng.random_range(2..=4);
        let r = random_r(&mut rng);
        let x = random_data(&mut rng, n, d);
        let g_t = random_membership(&mut rng, n, c).to_power(r).unwrap();
        let phi_t = phi(&x, &g_t).unwrap();
        tangency = tangency.max(rel_err(majorizer_h(&x, &g_t, &g_t).unwrap(), phi_t));
        for _ in 0..25 {
            let g = random_membership(&mut rng, n, c).to_power(r).unwrap();
            let value = phi(&x, &g).unwrap();
            let bound = majorizer_h(&x, &g, &g_t).unwrap();
            domination = domination.max((value - bound) / (1.0 + value.abs()));
            samples += 1;
        }
    }
    outcome(
        tangency <= 1e-10 && domination <= 1e-9 && samples >= 500,
        format!("anchors=20 samples={samples} tangency={tangency:.3e} (tol 1e-10) domination={domination:.3e} (tol 1e-9)"),
    )
}

fn gradient_vs_finite_differences() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rng.random_range(2..=30);
        let d = rng.random_range(1..=4);
        let x = random_data(&mut rng, n, d);
        let g_t: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..=1.0)).collect();
        let exact = tangent_gradient(&x, &g_t).unwrap();
        let fd = finite_diff_gradient(&x, &g_t, 1e-5);
        for (e, f) in exact.iter().zip(&fd) {
            worst = worst.max(rel_err(*f, *e));
        }
    }
    outcome(
        worst <= 1e-6,
        format!("points=50 max_rel_err={worst:.3e} tol=1e-6"),
    )
}

fn gram_agreement() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut quad, mut reweight) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let n = rng.random_range(2..=100);
        let d = rng.random_range(1..=6);
        let c = rng.random_range(2..=5);
        let r = random_r(&mut rng);
        let x = random_data(&mut rng, n, d);
        let g = random_membership(&mut rng, n, c).to_power(r).unwrap();
        let agg = aggregates(&x, &g).unwrap();
        let aux = irw_auxiliary(&x, &g).unwrap();
        for j in 0..c {
            let col = g.column(j);
            quad = quad.max(rel_err(agg.quad()[j], gram_quad_oracle(&x, &col)));
            for (i, a) in gram_reweighting_oracle(&x, &col).into_iter().enumerate() {
                reweight = reweight.max(rel_err(aux.a(i, j), a));
            }
        }
    }
    outcome(
        quad <= 1e-10 && reweight <= 1e-10,
        format!("instances=50 quad={quad:.3e} reweighting={reweight:.3e} tol=1e-10"),
    )
}

/// IRW and MM reach the same objective; MM gets within 1e-6 of the shared
/// target with no more membership updates than IRW.
fn irw_mm_agreement_and_work() -> Outcome {
    let mut passed = true;
    let mut details = Vec::new();
    for (name, x) in [("iris", iris()), ("blobs150", blobs(50, 11))] {
        let cfg = SolverConfig64::new(3);
        let f0 = MembershipMatrix64::init_random(x.n(), 3, 0).unwrap();
        let irw = solve(Algorithm::Irw, &x, &f0, &cfg).unwrap();
        let mm = solve(Algorithm::Mm, &x, &f0, &cfg).unwrap();
        let gap =
            (irw.objective - mm.objective).abs() / irw.objective.abs().max(mm.objective.abs());
        let target = irw.objective.min(mm.objective);
        let irw_work = irw.trace.updates_to_reach(target, 1e-6);
        let mm_work = mm.trace.updates_to_reach(target, 1e-6);
        let ok = gap <= 1e-6
            && matches!((mm_work, irw_work), (Some(m), Some(i)) if m <= i)
            && irw.termination == Termination::Converged
            && mm.termination == Termination::Converged;
        passed &= ok;
        details.push(format!(
            "{name}: rel_gap={gap:.2e} updates mm={} irw={}",
            mm_work.map_or("-".into(), |u| u.to_string()),
            irw_work.map_or("-".into(), |u| u.to_string())
        ));
    }
    outcome(passed, details.join(" "))
}

fn classic_mm_trajectories() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = 0.0f64;
    let mut steps = 0usize;
    for k in 0..20 {
        let n = rng.random_range(10..=60);
        let d = rng.random_range(1..=4);
        let c = rng.random_range(2..=4);
        let x = random_data(&mut rng, n, d);
        let cfg = SolverConfig64 {
            r: random_r(&mut rng),
            max_outer_iters: 50,
            ..SolverConfig64::new(c)
        };
        let f0 = MembershipMatrix64::init_random(n, c, k).unwrap();
        let mut classic = Vec::new();
        let mut mm = Vec::new();
        solve_observed(Algorithm::Classic, &x, &f0, &cfg, |_, f| {
            classic.push(f.clone())
        })
        .unwrap();
        solve_observed(Algorithm::Mm, &x, &f0, &cfg, |_, f| mm.push(f.clone())).unwrap();
        if classic.len() != mm.len() {
            return outcome(
                false,
                format!(
                    "instance {k}: trace lengths {} vs {}",
                    classic.len(),
                    mm.len()
                ),
            );
        }
        for (a, b) in classic.iter().zip(&mm) {
            worst = worst.max(a.max_abs_diff(b));
            steps += 1;
        }
    }
    outcome(
        worst <= 1e-12,
        format!("instances=20 iterates={steps} max_abs_diff={worst:.3e} tol=1e-12"),
    )
}

/// Every iterate of every solver stays on the simplex, including runs that
/// end degenerate.
fn simplex_preservation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut cases: Vec<(DataMatrix64, usize, f64)> = Vec::new();
    for _ in 0..10 {
        let n = rng.random_range(5..=40);
        let d = rng.random_range(1..=3);
        cases.push((
            random_data(&mut rng, n, d),
            rng.random_range(2..=5),
            random_r(&mut rng),
        ));
    }
    // Duplicated points and more clusters than distinct points.
    let dup = DataMatrix64::from_rows(&[
        vec![1.0, 1.0],
        vec![1.0, 1.0],
        vec![1.0, 1.0],
        vec![-2.0, 0.5],
    ])
    .unwrap();
    cases.push((dup, 3, 2.0));
    // All points at the origin: the re-weighted scheme degenerates.
    cases.push((
        DataMatrix64::from_rows(&[vec![0.0], vec![0.0], vec![0.0]]).unwrap(),
        2,
        2.0,
    ));
    cases.push((iris(), 3, 2.0));

    let (mut iterates, mut failures, mut degenerate) = (0usize, 0usize, 0usize);
    let mut worst_row = 0.0f64;
    for (k, (x, c, r)) in cases.iter().enumerate() {
        let cfg = SolverConfig64 {
            r: *r,
            max_outer_iters: 100,
            ..SolverConfig64::new(*c)
        };
        let f0 = MembershipMatrix::init_random(x.n(), *c, k as u64).unwrap();
        for alg in Algorithm::ALL {
            let mut check = |f: &MembershipMatrix64| {
                let report = f.validate();
                worst_row = worst_row.max(report.max_row_sum_deviation);
                iterates += 1;
                if !report.passed {
                    failures += 1;
                }
            };
            let result = solve_observed(alg, x, &f0, &cfg, |_, f| check(f)).unwrap();
            check(&result.membership);
            if result.termination == Termination::Degenerate {
                degenerate += 1;
            }
        }
    }
    outcome(
        failures == 0 && degenerate > 0,
        format!("iterates={iterates} failures={failures} degenerate_runs={degenerate} max_row_dev={worst_row:.3e}"),
    )
}

fn strip_elapsed(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| {
            let mut cells: Vec<&str> = l.split(',').collect();
            cells.remove(2);
            cells.join(",")
        })
        .collect()
}

fn run_determinism() -> Outcome {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv");
    let summaries: Vec<serde_json::Value> = dirs
        .iter()
        .map(|dir| {
            let manifest = RunManifest {
                dataset: DatasetSource::iris(&path),
                cfg: SolverConfig64 {
                    seed: 5,
                    ..SolverConfig64::new(3)
                },
                algorithms: Algorithm::ALL.to_vec(),
                output_dir: dir.path().to_path_buf(),
            };
            let out = cmd_run(&manifest).unwrap();
            serde_json::from_str(&std::fs::read_to_string(out.summary_path).unwrap()).unwrap()
        })
        .collect();
    let mut mismatches = Vec::new();
    for alg in Algorithm::ALL {
        let name = trace_file_name(alg);
        let a = std::fs::read_to_string(dirs[0].path().join(&name)).unwrap();
        let b = std::fs::read_to_string(dirs[1].path().join(&name)).unwrap();
        if strip_elapsed(&a) != strip_elapsed(&b) || parse_trace(&a).is_err() {
            mismatches.push(name);
        }
        let m = format!("membership_{}.csv", alg.name());
        if std::fs::read(dirs[0].path().join(&m)).unwrap()
            != std::fs::read(dirs[1].path().join(&m)).unwrap()
        {
            mismatches.push(m);
        }
        let objective =
            |s: &serde_json::Value| s["algorithms"][alg.name()]["final_objective"].clone();
        if objective(&summaries[0]) != objective(&summaries[1]) {
            mismatches.push(format!("summary:{alg}"));
        }
    }
    outcome(
        mismatches.is_empty(),
        format!("runs=2 algorithms=3 mismatches={mismatches:?}"),
    )
}

fn main() -> ExitCode {
    type Check = fn() -> Outcome;
    let checks: [(&str, Check, Option<Duration>); 9] = [
        (
            "single_step_equivalence",
            single_step_equivalence,
            Some(Duration::from_secs(10)),
        ),
        ("descent_audit", descent_audit, Some(Duration::from_secs(5))),
        (
            "tangency_domination",
            tangency_and_domination,
            Some(Duration::from_secs(10)),
        ),
        (
            "gradient_finite_diff",
            gradient_vs_finite_differences,
            Some(Duration::from_secs(5)),
        ),
        (
            "gram_agreement",
            gram_agreement,
            Some(Duration::from_secs(5)),
        ),
        (
            "irw_mm_agreement_work",
            irw_mm_agreement_and_work,
            Some(Duration::from_secs(30)),
        ),
        (
            "classic_mm_trajectory",
            classic_mm_trajectories,
            Some(Duration::from_secs(10)),
        ),
        ("simplex_preservation", simplex_preservation, None),
        ("run_determinism", run_determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, check, budget)) in checks.into_iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let passed = result.passed && in_time;
        if !passed {
            failed += 1;
        }
        let budget = budget.map_or(String::new(), |b| format!(" budget={}s", b.as_secs()));
        println!(
            "{} {}. {name}: {} time={:.3}s{budget}",
            if passed { "PASS" } else { "FAIL" },
            i + 1,
            result.detail,
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
