//! Run manifests: where the data comes from, the solver configuration, the
//! algorithms to run and the output directory.
//!
//! A manifest can be read from a flat `key = value` file (one pair per line,
//! `#` starts a comment) and then overridden field by field from the
//! command line.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fcmm::dataset::{load_csv, make_blobs, standardize, SyntheticSpec};
use fcmm::solvers::Algorithm;
use fcmm::{DataMatrix64, SolverConfig64, SyntheticSpec64};
use serde::Serialize;

/// Seed of the synthetic presets. Fixed so that changing `seed` only
/// changes the initial memberships, never the data.
pub const PRESET_DATA_SEED: u64 = 2024;

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        /// 0-based column indices to skip.
        drop_columns: BTreeSet<usize>,
        /// `None` detects a header from the first line.
        has_header: Option<bool>,
    },
    Synthetic {
        preset: String,
        spec: SyntheticSpec64,
    },
}

pub fn synthetic_preset(name: &str) -> Result<SyntheticSpec64> {
    let spec = match name {
        "blobs-small" => SyntheticSpec {
            blob_count: 3,
            points_per_blob: 50,
            dim: 2,
            blob_stddev: 0.5,
            blob_center_scale: 5.0,
            seed: PRESET_DATA_SEED,
        },
        "blobs-large" => SyntheticSpec {
            blob_count: 5,
            points_per_blob: 2000,
            dim: 8,
            blob_stddev: 1.0,
            blob_center_scale: 10.0,
            seed: PRESET_DATA_SEED,
        },
        other => bail!("unknown synthetic preset {other:?} (expected blobs-small or blobs-large)"),
    };
    Ok(spec)
}

/// The species label of the classic Iris CSV sits in the fifth column.
pub const IRIS_LABEL_COLUMN: usize = 4;

impl DatasetSource {
    pub fn iris(path: impl Into<PathBuf>) -> Self {
        DatasetSource::Csv {
            path: path.into(),
            drop_columns: [IRIS_LABEL_COLUMN].into_iter().collect(),
            has_header: None,
        }
    }

    /// Loads (or generates) the raw data, without standardization.
    pub fn load(&self) -> Result<DataMatrix64> {
        match self {
            DatasetSource::Csv {
                path,
                drop_columns,
                has_header,
            } => {
                let header = match has_header {
                    Some(h) => *h,
                    None => detect_header(path, drop_columns)?,
                };
                load_csv(path, drop_columns, header)
                    .with_context(|| format!("loading {}", path.display()))
            }
            DatasetSource::Synthetic { spec, .. } => Ok(make_blobs(spec)?),
        }
    }
}

/// A first line whose kept cells do not all parse as numbers is a header.
fn detect_header(path: &Path, drop_columns: &BTreeSet<usize>) -> Result<bool> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text.lines().next().unwrap_or_default();
    Ok(first
        .split(',')
        .enumerate()
        .filter(|(i, _)| !drop_columns.contains(i))
        .any(|(_, cell)| cell.trim().parse::<f64>().is_err()))
}

impl fmt::Display for DatasetSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DatasetSource::Csv { path, .. } => write!(f, "csv:{}", path.display()),
            DatasetSource::Synthetic { preset, .. } => write!(f, "synthetic:{preset}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub dataset: DatasetSource,
    pub cfg: SolverConfig64,
    pub algorithms: Vec<Algorithm>,
    pub output_dir: PathBuf,
}

impl RunManifest {
    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            bail!("no algorithms selected (use --algos classic,irw,mm)");
        }
        let unique: BTreeSet<_> = self.algorithms.iter().collect();
        if unique.len() != self.algorithms.len() {
            bail!("algorithm list has duplicates: {:?}", self.algorithms);
        }
        if self.cfg.c < 2 {
            bail!("need at least 2 clusters, got {}", self.cfg.c);
        }
        self.cfg.validate()?;
        Ok(())
    }

    /// Data as the solvers will see it, standardized when configured.
    pub fn prepare_data(&self) -> Result<DataMatrix64> {
        let raw = self.dataset.load()?;
        if raw.n() < self.cfg.c {
            bail!("{} points cannot fill {} clusters", raw.n(), self.cfg.c);
        }
        Ok(if self.cfg.standardize {
            standardize(&raw)?
        } else {
            raw
        })
    }

    /// Every resolved field, defaults included.
    pub fn resolved(&self) -> ResolvedConfig {
        let (dataset, drop_columns, has_header, synthetic) = match &self.dataset {
            DatasetSource::Csv {
                path,
                drop_columns,
                has_header,
            } => (
                path.display().to_string(),
                Some(drop_columns.iter().copied().collect()),
                *has_header,
                None,
            ),
            DatasetSource::Synthetic { preset, spec } => (
                preset.clone(),
                None,
                None,
                Some(SyntheticRecord {
                    blob_count: spec.blob_count,
                    points_per_blob: spec.points_per_blob,
                    dim: spec.dim,
                    blob_stddev: spec.blob_stddev,
                    blob_center_scale: spec.blob_center_scale,
                    seed: spec.seed,
                }),
            ),
        };
        ResolvedConfig {
            dataset,
            drop_columns,
            has_header,
            synthetic,
            c: self.cfg.c,
            r: self.cfg.r,
            seed: self.cfg.seed,
            outer_tol: self.cfg.outer_tol,
            inner_tol: self.cfg.inner_tol,
            max_outer_iters: self.cfg.max_outer_iters,
            max_inner_iters: self.cfg.max_inner_iters,
            dist_floor: self.cfg.dist_floor,
            standardize: self.cfg.standardize,
            algorithms: self
                .algorithms
                .iter()
                .map(|a| a.name().to_string())
                .collect(),
            output_dir: self.output_dir.display().to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct SyntheticRecord {
    pub blob_count: usize,
    pub points_per_blob: usize,
    pub dim: usize,
    pub blob_stddev: f64,
    pub blob_center_scale: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ResolvedConfig {
    pub dataset: String,
    pub drop_columns: Option<Vec<usize>>,
    pub has_header: Option<bool>,
    pub synthetic: Option<SyntheticRecord>,
    pub c: usize,
    pub r: f64,
    pub seed: u64,
    pub outer_tol: f64,
    pub inner_tol: f64,
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    pub dist_floor: f64,
    pub standardize: bool,
    pub algorithms: Vec<String>,
    pub output_dir: String,
}

/// Manifest fields as optional overrides; `None` keeps the current value.
/// Both the config file and the command line fill one of these.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub data: Option<PathBuf>,
    pub drop_cols: Option<BTreeSet<usize>>,
    pub header: Option<bool>,
    pub synthetic: Option<String>,
    pub preset: Option<String>,
    pub c: Option<usize>,
    pub r: Option<f64>,
    pub seed: Option<u64>,
    pub algos: Option<Vec<Algorithm>>,
    pub outer_tol: Option<f64>,
    pub inner_tol: Option<f64>,
    pub max_outer: Option<usize>,
    pub max_inner: Option<usize>,
    pub dist_floor: Option<f64>,
    pub standardize: Option<bool>,
    pub out: Option<PathBuf>,
}

pub fn parse_index_list(text: &str) -> Result<BTreeSet<usize>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<usize>()
                .with_context(|| format!("bad column index {s:?}"))
        })
        .collect()
}

pub fn parse_algorithms(text: &str) -> Result<Vec<Algorithm>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Algorithm>().map_err(Into::into))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        _ => bail!("{key}: expected a boolean, got {value:?}"),
    }
}

impl Overrides {
    /// Parses a `key = value` config file body.
    pub fn parse_config(text: &str) -> Result<Self> {
        let mut o = Overrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .with_context(|| format!("config line {}: expected key = value", lineno + 1))?;
            let (key, value) = (key.trim().replace('-', "_"), value.trim());
            let ctx = || format!("config line {}: {key}", lineno + 1);
            match key.as_str() {
                "data" => o.data = Some(value.into()),
                "drop_cols" => o.drop_cols = Some(parse_index_list(value).with_context(ctx)?),
                "header" => o.header = Some(parse_bool(&key, value)?),
                "synthetic" => o.synthetic = Some(value.to_string()),
                "preset" => o.preset = Some(value.to_string()),
                "c" => o.c = Some(value.parse().with_context(ctx)?),
                "r" => o.r = Some(value.parse().with_context(ctx)?),
                "seed" => o.seed = Some(value.parse().with_context(ctx)?),
                "algos" => o.algos = Some(parse_algorithms(value).with_context(ctx)?),
                "outer_tol" => o.outer_tol = Some(value.parse().with_context(ctx)?),
                "inner_tol" => o.inner_tol = Some(value.parse().with_context(ctx)?),
                "max_outer" => o.max_outer = Some(value.parse().with_context(ctx)?),
                "max_inner" => o.max_inner = Some(value.parse().with_context(ctx)?),
                "dist_floor" => o.dist_floor = Some(value.parse().with_context(ctx)?),
                "standardize" => o.standardize = Some(parse_bool(&key, value)?),
                "out" => o.out = Some(value.into()),
                other => bail!("config line {}: unknown key {other:?}", lineno + 1),
            }
        }
        Ok(o)
    }

    pub fn load_config(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse_config(&text)
    }

    /// `other` wins wherever it is set.
    pub fn merge(self, other: Overrides) -> Overrides {
        Overrides {
            data: other.data.or(self.data),
            drop_cols: other.drop_cols.or(self.drop_cols),
            header: other.header.or(self.header),
            synthetic: other.synthetic.or(self.synthetic),
            preset: other.preset.or(self.preset),
            c: other.c.or(self.c),
            r: other.r.or(self.r),
            seed: other.seed.or(self.seed),
            algos: other.algos.or(self.algos),
            outer_tol: other.outer_tol.or(self.outer_tol),
            inner_tol: other.inner_tol.or(self.inner_tol),
            max_outer: other.max_outer.or(self.max_outer),
            max_inner: other.max_inner.or(self.max_inner),
            dist_floor: other.dist_floor.or(self.dist_floor),
            standardize: other.standardize.or(self.standardize),
            out: other.out.or(self.out),
        }
    }

    /// Resolves into a manifest. Defaults: `c = 3`, all three algorithms,
    /// output directory `fcmm-out`, solver defaults for everything else.
    pub fn into_manifest(self) -> Result<RunManifest> {
        let dataset = match (self.preset.as_deref(), self.synthetic, self.data) {
            (Some("iris"), None, Some(path)) => {
                let mut source = DatasetSource::iris(path);
                if let DatasetSource::Csv {
                    drop_columns,
                    has_header,
                    ..
                } = &mut source
                {
                    if let Some(cols) = self.drop_cols {
                        *drop_columns = cols;
                    }
                    *has_header = self.header;
                }
                source
            }
            (Some("iris"), _, None) => bail!("the iris preset needs --data PATH to the CSV"),
            (Some("iris"), Some(_), Some(_)) => {
                bail!("give either --data or --synthetic, not both")
            }
            (Some(p @ ("blobs-small" | "blobs-large")), None, None) => DatasetSource::Synthetic {
                preset: p.to_string(),
                spec: synthetic_preset(p)?,
            },
            (Some(p), _, _) if p != "iris" && !p.starts_with("blobs-") => {
                bail!("unknown preset {p:?} (expected iris, blobs-small or blobs-large)")
            }
            (Some(_), _, _) => {
                bail!("a synthetic preset cannot be combined with --data or --synthetic")
            }
            (None, Some(_), Some(_)) => bail!("give either --data or --synthetic, not both"),
            (None, Some(name), None) => DatasetSource::Synthetic {
                spec: synthetic_preset(&name)?,
                preset: name,
            },
            (None, None, Some(path)) => DatasetSource::Csv {
                path,
                drop_columns: self.drop_cols.unwrap_or_default(),
                has_header: self.header,
            },
            (None, None, None) => bail!("no dataset: use --data PATH or --synthetic PRESET"),
        };

        let defaults = SolverConfig64::new(self.c.unwrap_or(3));
        let cfg = SolverConfig64 {
            r: self.r.unwrap_or(defaults.r),
            outer_tol: self.outer_tol.unwrap_or(defaults.outer_tol),
            inner_tol: self.inner_tol.unwrap_or(defaults.inner_tol),
            max_outer_iters: self.max_outer.unwrap_or(defaults.max_outer_iters),
            max_inner_iters: self.max_inner.unwrap_or(defaults.max_inner_iters),
            seed: self.seed.unwrap_or(defaults.seed),
            dist_floor: self.dist_floor.unwrap_or(defaults.dist_floor),
            standardize: self.standardize.unwrap_or(defaults.standardize),
            ..defaults
        };
        let manifest = RunManifest {
            dataset,
            cfg,
            algorithms: self.algos.unwrap_or_else(|| Algorithm::ALL.to_vec()),
            output_dir: self.out.unwrap_or_else(|| PathBuf::from("fcmm-out")),
        };
        manifest.validate()?;
        Ok(manifest)
    }
}
