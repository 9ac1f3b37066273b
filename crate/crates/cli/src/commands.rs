use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Context, Result};
use fcmm::oracle::{run_suite, OracleReport, SuiteScale};
use fcmm::solvers::{solve, Algorithm, SolverTrace, Termination};
use fcmm::{MembershipMatrix64, SolverResult64};
use serde::Serialize;

use crate::manifest::{ResolvedConfig, RunManifest};

pub const TRACE_HEADER: &str = "iter,objective,elapsed_ns,membership_updates,inner_iters";

/// Relative gap to the best final objective that counts as "reached" in
/// [`cmd_compare`].
pub const COMPARE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct AlgorithmSummary {
    pub final_objective: f64,
    pub termination: String,
    pub total_updates: u64,
    pub outer_iters: usize,
    pub wall_time_ns: u128,
    pub trace_file: String,
    pub membership_file: String,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RunSummary {
    pub algorithms: BTreeMap<String, AlgorithmSummary>,
    pub config: ResolvedConfig,
    pub n: usize,
    pub d: usize,
}

#[derive(Debug)]
pub struct AlgorithmRun {
    pub algorithm: Algorithm,
    pub result: SolverResult64,
    pub wall_time: Duration,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub runs: Vec<AlgorithmRun>,
    pub summary: RunSummary,
    pub summary_path: PathBuf,
}

/// Writes `contents` to a sibling temp file, then renames it over `path`.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .with_context(|| format!("{} has no file name", path.display()))?
        .to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut file = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    file.write_all(contents)?;
    file.sync_all()?;
    drop(file);
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Objectives use the shortest representation that parses back exactly.
pub fn render_trace(trace: &SolverTrace<f64>) -> String {
    let mut out = String::with_capacity(64 * (trace.records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in &trace.records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.outer_iter,
            r.objective,
            r.elapsed.as_nanos(),
            r.membership_updates,
            r.inner_iters
        );
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub elapsed_ns: u128,
    pub membership_updates: u64,
    pub inner_iters: usize,
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>> {
    let mut lines = text.lines();
    ensure!(lines.next() == Some(TRACE_HEADER), "trace header mismatch");
    lines
        .enumerate()
        .map(|(i, line)| {
            let cells: Vec<&str> = line.split(',').collect();
            ensure!(cells.len() == 5, "trace line {}: expected 5 fields", i + 2);
            Ok(TraceRow {
                iter: cells[0].parse()?,
                objective: cells[1].parse()?,
                elapsed_ns: cells[2].parse()?,
                membership_updates: cells[3].parse()?,
                inner_iters: cells[4].parse()?,
            })
        })
        .collect()
}

pub fn trace_file_name(algorithm: Algorithm) -> String {
    format!("trace_{}.csv", algorithm.name())
}

pub fn membership_file_name(algorithm: Algorithm) -> String {
    format!("membership_{}.csv", algorithm.name())
}

fn run_all(manifest: &RunManifest) -> Result<(Vec<AlgorithmRun>, usize, usize)> {
    manifest.validate()?;
    let data = manifest.prepare_data()?;
    let f0 = MembershipMatrix64::init_random(data.n(), manifest.cfg.c, manifest.cfg.seed)?;
    let mut runs = Vec::with_capacity(manifest.algorithms.len());
    for &algorithm in &manifest.algorithms {
        let start = Instant::now();
        let result = solve(algorithm, &data, &f0, &manifest.cfg)
            .with_context(|| format!("running {algorithm}"))?;
        runs.push(AlgorithmRun {
            algorithm,
            result,
            wall_time: start.elapsed(),
        });
    }
    Ok((runs, data.n(), data.d()))
}

/// Runs every selected algorithm from one shared initial membership and
/// writes per-algorithm traces and memberships plus `summary.json` into the
/// output directory.
pub fn cmd_run(manifest: &RunManifest) -> Result<RunOutcome> {
    let (runs, n, d) = run_all(manifest)?;
    let dir = &manifest.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;

    let mut algorithms = BTreeMap::new();
    for run in &runs {
        let trace_file = trace_file_name(run.algorithm);
        write_atomic(
            &dir.join(&trace_file),
            render_trace(&run.result.trace).as_bytes(),
        )?;
        let membership_file = membership_file_name(run.algorithm);
        let mut buf = Vec::new();
        run.result.membership.write_csv(&mut buf)?;
        write_atomic(&dir.join(&membership_file), &buf)?;
        let last = run
            .result
            .trace
            .last()
            .expect("trace holds the initial record");
        algorithms.insert(
            run.algorithm.name().to_string(),
            AlgorithmSummary {
                final_objective: run.result.objective,
                termination: run.result.termination.name().to_string(),
                total_updates: run.result.trace.total_updates(),
                outer_iters: last.outer_iter,
                wall_time_ns: run.wall_time.as_nanos(),
                trace_file,
                membership_file,
            },
        );
    }
    let summary = RunSummary {
        algorithms,
        config: manifest.resolved(),
        n,
        d,
    };
    let summary_path = dir.join("summary.json");
    let mut json = serde_json::to_vec_pretty(&summary)?;
    json.push(b'\n');
    write_atomic(&summary_path, &json)?;
    Ok(RunOutcome {
        runs,
        summary,
        summary_path,
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CompareEntry {
    pub algorithm: String,
    pub final_objective: f64,
    pub termination: String,
    /// `None` when the run never came within [`COMPARE_TOL`] of the target.
    pub updates_to_target: Option<u64>,
    pub total_updates: u64,
    pub outer_iters: usize,
    pub wall_time_ns: u128,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CompareReport {
    pub target_objective: f64,
    pub tolerance: f64,
    pub entries: Vec<CompareEntry>,
    /// Algorithm with the fewest updates to the target; `None` on a tie.
    pub fewest_updates: Option<String>,
}

impl CompareReport {
    pub fn entry(&self, algorithm: Algorithm) -> Option<&CompareEntry> {
        self.entries
            .iter()
            .find(|e| e.algorithm == algorithm.name())
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "target objective {} (within {:e} relative)\n{:<8} {:>22} {:>12} {:>10} {:>8} {:>14} {}\n",
            self.target_objective,
            self.tolerance,
            "algo",
            "final_objective",
            "updates@tgt",
            "updates",
            "outer",
            "wall_ms",
            "termination"
        );
        for e in &self.entries {
            let reached = e
                .updates_to_target
                .map_or_else(|| "-".to_string(), |u| u.to_string());
            let _ = writeln!(
                out,
                "{:<8} {:>22} {:>12} {:>10} {:>8} {:>14.3} {}",
                e.algorithm,
                e.final_objective,
                reached,
                e.total_updates,
                e.outer_iters,
                e.wall_time_ns as f64 / 1e6,
                e.termination
            );
        }
        match &self.fewest_updates {
            Some(name) => {
                let _ = writeln!(out, "fewest membership updates: {name}");
            }
            None => out.push_str("fewest membership updates: tie\n"),
        }
        out
    }
}

/// Runs the selected algorithms from a shared initial membership and
/// counts, for each, the updates needed to come within [`COMPARE_TOL`] of
/// the best final objective among them. Writes `compare.json` to the output
/// directory.
pub fn cmd_compare(manifest: &RunManifest) -> Result<CompareReport> {
    if manifest.algorithms.len() < 2 {
        bail!(
            "compare needs at least two algorithms, got {}",
            manifest.algorithms.len()
        );
    }
    let (runs, _, _) = run_all(manifest)?;
    let report = compare_runs(&runs);
    let dir = &manifest.output_dir;
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut json = serde_json::to_vec_pretty(&report)?;
    json.push(b'\n');
    write_atomic(&dir.join("compare.json"), &json)?;
    Ok(report)
}

pub fn compare_runs(runs: &[AlgorithmRun]) -> CompareReport {
    let target = runs
        .iter()
        .filter(|r| r.result.termination != Termination::Degenerate)
        .map(|r| r.result.objective)
        .fold(f64::INFINITY, f64::min);
    let target = if target.is_finite() {
        target
    } else {
        runs.iter()
            .map(|r| r.result.objective)
            .fold(f64::INFINITY, f64::min)
    };
    let entries: Vec<CompareEntry> = runs
        .iter()
        .map(|run| CompareEntry {
            algorithm: run.algorithm.name().to_string(),
            final_objective: run.result.objective,
            termination: run.result.termination.name().to_string(),
            updates_to_target: run.result.trace.updates_to_reach(target, COMPARE_TOL),
            total_updates: run.result.trace.total_updates(),
            outer_iters: run.result.trace.last().map_or(0, |r| r.outer_iter),
            wall_time_ns: run.wall_time.as_nanos(),
        })
        .collect();
    let reached: Vec<(u64, &str)> = entries
        .iter()
        .filter_map(|e| e.updates_to_target.map(|u| (u, e.algorithm.as_str())))
        .collect();
    let fewest_updates = reached.iter().map(|(u, _)| *u).min().and_then(|best| {
        let winners: Vec<&str> = reached
            .iter()
            .filter(|(u, _)| *u == best)
            .map(|(_, a)| *a)
            .collect();
        (winners.len() == 1).then(|| winners[0].to_string())
    });
    CompareReport {
        target_objective: target,
        tolerance: COMPARE_TOL,
        entries,
        fewest_updates,
    }
}

/// Runs the oracle suite. The caller decides the exit status from
/// `passed` on each report.
pub fn cmd_validate(scale: SuiteScale, seed: u64) -> Result<Vec<OracleReport>> {
    Ok(run_suite(scale, seed)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use fcmm::solvers::IterationRecord;

    #[test]
    fn trace_round_trip_is_lossless() {
        let values = [
            0.1 + 0.2,
            100.42029384756123,
            1e-300,
            f64::MIN_POSITIVE,
            7.0,
        ];
        let trace = SolverTrace {
            records: values
                .iter()
                .enumerate()
                .map(|(i, &objective)| IterationRecord {
                    outer_iter: i,
                    objective,
                    elapsed: Duration::from_nanos(17 * i as u64),
                    membership_updates: 3 * i as u64,
                    inner_iters: i,
                })
                .collect(),
        };
        let rows = parse_trace(&render_trace(&trace)).unwrap();
        assert_eq!(rows.len(), values.len());
        for (row, &v) in rows.iter().zip(&values) {
            assert_eq!(row.objective.to_bits(), v.to_bits());
        }
        assert_eq!(rows[4].membership_updates, 12);
        assert_eq!(rows[3].elapsed_ns, 51);
    }

    #[test]
    fn parse_trace_rejects_bad_header() {
        assert!(parse_trace("iter,objective\n0,1\n").is_err());
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
