use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand, ValueEnum};
use fcmm::oracle::SuiteScale;
use fcmm_cli::manifest::{parse_algorithms, parse_index_list};
use fcmm_cli::{cmd_compare, cmd_run, cmd_validate, Overrides, RunManifest};

/// Fuzzy c-means with classic, re-weighted and MM membership solvers.
#[derive(Parser)]
#[command(name = "fcmm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the selected solvers and write traces and summary.json.
    Run(RunArgs),
    /// Run the selected solvers and compare the work needed to converge.
    Compare(RunArgs),
    /// Run the numerical oracle suite.
    Validate {
        #[arg(long, value_enum, default_value_t = Scale::Quick)]
        scale: Scale,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Scale {
    Quick,
    Full,
}

#[derive(Args)]
struct RunArgs {
    /// key = value file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in manifest: iris (with --data), blobs-small, blobs-large.
    #[arg(long)]
    preset: Option<String>,
    /// Numeric CSV input.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Comma-separated 0-based columns to drop from the CSV.
    #[arg(long, value_name = "LIST")]
    drop_cols: Option<String>,
    /// Whether the CSV has a header line (detected when omitted).
    #[arg(long)]
    header: Option<bool>,
    /// Synthetic preset instead of a CSV: blobs-small or blobs-large.
    #[arg(long)]
    synthetic: Option<String>,
    /// Number of clusters.
    #[arg(long)]
    c: Option<usize>,
    /// Fuzzifier, > 1.
    #[arg(long)]
    r: Option<f64>,
    /// Seed of the shared initial membership.
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of classic, irw, mm.
    #[arg(long, value_name = "LIST")]
    algos: Option<String>,
    #[arg(long)]
    outer_tol: Option<f64>,
    #[arg(long)]
    inner_tol: Option<f64>,
    #[arg(long)]
    max_outer: Option<usize>,
    #[arg(long)]
    max_inner: Option<usize>,
    #[arg(long)]
    dist_floor: Option<f64>,
    /// Skip z-scoring the features.
    #[arg(long)]
    no_standardize: bool,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn manifest(self) -> Result<RunManifest> {
        let base = match &self.config {
            Some(path) => Overrides::load_config(path)?,
            None => Overrides::default(),
        };
        let flags = Overrides {
            data: self.data,
            drop_cols: self
                .drop_cols
                .as_deref()
                .map(parse_index_list)
                .transpose()?,
            header: self.header,
            synthetic: self.synthetic,
            preset: self.preset,
            c: self.c,
            r: self.r,
            seed: self.seed,
            algos: self.algos.as_deref().map(parse_algorithms).transpose()?,
            outer_tol: self.outer_tol,
            inner_tol: self.inner_tol,
            max_outer: self.max_outer,
            max_inner: self.max_inner,
            dist_floor: self.dist_floor,
            standardize: self.no_standardize.then_some(false),
            out: self.out,
        };
        base.merge(flags).into_manifest()
    }
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Run(args) => {
            let outcome = cmd_run(&args.manifest()?)?;
            for (name, s) in &outcome.summary.algorithms {
                println!(
                    "{name:<8} objective={} updates={} outer={} {}",
                    s.final_objective, s.total_updates, s.outer_iters, s.termination
                );
            }
            println!("wrote {}", outcome.summary_path.display());
            Ok(true)
        }
        Command::Compare(args) => {
            print!("{}", cmd_compare(&args.manifest()?)?.render());
            Ok(true)
        }
        Command::Validate { scale, seed } => {
            let scale = match scale {
                Scale::Quick => SuiteScale::Quick,
                Scale::Full => SuiteScale::Full,
            };
            let reports = cmd_validate(scale, seed)?;
            for r in &reports {
                println!("{r}");
            }
            Ok(reports.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
