use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fcmm_cli::commands::{parse_trace, TRACE_HEADER};

fn fcmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcmm"))
        .args(args)
        .output()
        .unwrap()
}

fn iris_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/iris.csv")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

#[test]
fn run_writes_traces_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let iris = iris_path();
    let res = fcmm(&[
        "run",
        "--preset",
        "iris",
        "--data",
        iris.to_str().unwrap(),
        "--seed",
        "3",
        "--out",
        out,
    ]);
    assert!(res.status.success(), "{}", stderr(&res));

    let s = summary(dir.path());
    for alg in ["classic", "irw", "mm"] {
        let text = fs::read_to_string(dir.path().join(format!("trace_{alg}.csv"))).unwrap();
        assert_eq!(text.lines().next(), Some(TRACE_HEADER));
        let rows = parse_trace(&text).unwrap();
        assert_eq!((rows[0].iter, rows[0].membership_updates), (0, 0));
        let last = rows.last().unwrap();
        let entry = &s["algorithms"][alg];
        assert_eq!(
            entry["final_objective"].as_f64().unwrap().to_bits(),
            last.objective.to_bits()
        );
        assert_eq!(
            entry["total_updates"].as_u64().unwrap(),
            last.membership_updates
        );
        assert_eq!(entry["outer_iters"].as_u64().unwrap() as usize, last.iter);
        assert_eq!(entry["termination"], "converged");
        for pair in rows.windows(2) {
            assert!(
                pair[1].objective <= pair[0].objective + 1e-12 * (1.0 + pair[0].objective.abs())
            );
        }

        let membership =
            fs::read_to_string(dir.path().join(format!("membership_{alg}.csv"))).unwrap();
        assert_eq!(membership.lines().count(), 150);
    }
    let cfg = &s["config"];
    assert_eq!(cfg["c"], 3);
    assert_eq!(cfg["r"], 2.0);
    assert_eq!(cfg["seed"], 3);
    assert_eq!(cfg["outer_tol"], 1e-8);
    assert_eq!(cfg["max_inner_iters"], 100);
    assert_eq!(cfg["standardize"], true);
    assert_eq!(cfg["drop_columns"], serde_json::json!([4]));
    assert_eq!((s["n"].as_u64(), s["d"].as_u64()), (Some(150), Some(4)));
}

#[test]
fn repeated_runs_match_except_elapsed() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for dir in &dirs {
        let res = fcmm(&[
            "run",
            "--synthetic",
            "blobs-small",
            "--c",
            "3",
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(res.status.success(), "{}", stderr(&res));
    }
    for alg in ["classic", "irw", "mm"] {
        let read = |d: &Path| {
            parse_trace(&fs::read_to_string(d.join(format!("trace_{alg}.csv"))).unwrap()).unwrap()
        };
        let (a, b) = (read(dirs[0].path()), read(dirs[1].path()));
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(
                (
                    x.iter,
                    x.objective.to_bits(),
                    x.membership_updates,
                    x.inner_iters
                ),
                (
                    y.iter,
                    y.objective.to_bits(),
                    y.membership_updates,
                    y.inner_iters
                )
            );
        }
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("exp.cfg");
    let out = dir.path().join("out");
    fs::write(
        &config,
        format!(
            "# small run\nsynthetic = blobs-small\nc = 4\nr = 1.5\nalgos = mm\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let res = fcmm(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--c",
        "2",
        "--no-standardize",
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let s = summary(&out);
    assert_eq!(s["config"]["c"], 2);
    assert_eq!(s["config"]["r"], 1.5);
    assert_eq!(s["config"]["standardize"], false);
    assert_eq!(s["config"]["synthetic"]["points_per_blob"], 50);
    assert!(s["algorithms"].get("mm").is_some());
    assert!(s["algorithms"].get("irw").is_none());
}

#[test]
fn compare_reports_work_to_target() {
    let dir = tempfile::tempdir().unwrap();
    let iris = iris_path();
    let res = fcmm(&[
        "compare",
        "--preset",
        "iris",
        "--data",
        iris.to_str().unwrap(),
        "--algos",
        "irw,mm",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(String::from_utf8_lossy(&res.stdout).contains("fewest membership updates: mm"));
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("compare.json")).unwrap())
            .unwrap();
    let entries = report["entries"].as_array().unwrap();
    let updates = |name: &str| {
        entries.iter().find(|e| e["algorithm"] == name).unwrap()["updates_to_target"]
            .as_u64()
            .unwrap()
    };
    assert!(updates("mm") < updates("irw"));
    assert_eq!(report["tolerance"], 1e-6);
}

#[test]
fn classic_and_mm_tie_on_work() {
    let dir = tempfile::tempdir().unwrap();
    let res = fcmm(&[
        "compare",
        "--synthetic",
        "blobs-small",
        "--algos",
        "classic,mm",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    assert!(String::from_utf8_lossy(&res.stdout).contains("fewest membership updates: tie"));
}

#[test]
fn invalid_invocations_fail_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let cases: [&[&str]; 7] = [
        &[
            "run",
            "--synthetic",
            "blobs-small",
            "--algos",
            "",
            "--out",
            out,
        ],
        &[
            "run",
            "--synthetic",
            "blobs-small",
            "--algos",
            "kmeans",
            "--out",
            out,
        ],
        &["run", "--synthetic", "blobs-huge", "--out", out],
        &["run", "--data", "/nonexistent/x.csv", "--out", out],
        &[
            "run",
            "--synthetic",
            "blobs-small",
            "--r",
            "1",
            "--out",
            out,
        ],
        &[
            "run",
            "--synthetic",
            "blobs-small",
            "--c",
            "1",
            "--out",
            out,
        ],
        &[
            "compare",
            "--synthetic",
            "blobs-small",
            "--algos",
            "mm",
            "--out",
            out,
        ],
    ];
    for args in cases {
        let res = fcmm(args);
        assert_eq!(res.status.code(), Some(2), "{args:?}");
        assert!(
            stderr(&res).starts_with("error:"),
            "{args:?}: {}",
            stderr(&res)
        );
    }
    assert!(!dir.path().join("summary.json").exists());
}

#[test]
fn csv_with_dropped_columns_and_no_header() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("pts.csv");
    fs::write(&data, "0,0.0,id1\n0.1,0.0,id2\n5.0,5.0,id3\n5.1,5.0,id4\n").unwrap();
    let out = dir.path().join("out");
    let res = fcmm(&[
        "run",
        "--data",
        data.to_str().unwrap(),
        "--drop-cols",
        "2",
        "--c",
        "2",
        "--algos",
        "mm",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", stderr(&res));
    let s = summary(&out);
    assert_eq!((s["n"].as_u64(), s["d"].as_u64()), (Some(4), Some(2)));
    assert_eq!(s["config"]["has_header"], serde_json::Value::Null);
}

#[test]
fn validate_quick_passes() {
    let res = fcmm(&["validate", "--scale", "quick"]);
    assert!(res.status.success(), "{}", stderr(&res));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert_eq!(stdout.lines().count(), 7);
    assert!(stdout.lines().all(|l| l.starts_with("PASS ")));
}
