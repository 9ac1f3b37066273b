//! Dataset ingestion: CSV loading, synthetic Gaussian blobs and feature
//! standardization.

use std::collections::BTreeSet;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{FcmError, Result};
use crate::scalar::{dot, Scalar};

/// `n` points in `d` dimensions stored row-major, one point per row, with
/// the squared norm of every point cached at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix<T> {
    points: Vec<T>,
    sq_norms: Vec<T>,
    n: usize,
    d: usize,
}

impl<T: Scalar> DataMatrix<T> {
    /// Builds a matrix from row-major values. Rejects empty shapes and
    /// non-finite entries.
    pub fn new(points: Vec<T>, n: usize, d: usize) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(FcmError::Empty(format!(
                "need n >= 1 and d >= 1, got n={n}, d={d}"
            )));
        }
        if points.len() != n * d {
            return Err(FcmError::DimensionMismatch(format!(
                "{} values cannot form a {n}x{d} matrix",
                points.len()
            )));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(FcmError::InvalidArgument(format!(
                "non-finite value at point {}, feature {}",
                pos / d,
                pos % d
            )));
        }
        let sq_norms = points.chunks_exact(d).map(|row| dot(row, row)).collect();
        Ok(Self {
            points,
            sq_norms,
            n,
            d,
        })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != d) {
            return Err(FcmError::DimensionMismatch(format!(
                "row {bad} has {} features, expected {d}",
                rows[bad].len()
            )));
        }
        Self::new(rows.concat(), rows.len(), d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.points.chunks_exact(self.d)
    }

    /// Row-major point values.
    pub fn points(&self) -> &[T] {
        &self.points
    }

    /// `x_i . x_i` for every point.
    pub fn sq_norms(&self) -> &[T] {
        &self.sq_norms
    }

    #[inline]
    pub fn sq_norm(&self, i: usize) -> T {
        self.sq_norms[i]
    }
}

/// Loads a comma separated file of numbers.
///
/// `drop_columns` holds 0-based indices of columns to skip (labels, ids);
/// they are not parsed. Locations in errors are 1-based file lines and
/// columns.
pub fn load_csv<T: Scalar>(
    path: impl AsRef<Path>,
    drop_columns: &BTreeSet<usize>,
    has_header: bool,
) -> Result<DataMatrix<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| FcmError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(file, drop_columns, has_header)
}

/// Same as [`load_csv`] but from any reader.
pub fn read_csv<T: Scalar, R: std::io::Read>(
    reader: R,
    drop_columns: &BTreeSet<usize>,
    has_header: bool,
) -> Result<DataMatrix<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(b',')
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut values = Vec::new();
    let mut width: Option<usize> = None;
    let mut kept = 0usize;
    let mut n = 0usize;
    for record in rdr.records() {
        let record = record.map_err(|e| FcmError::Csv {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        match width {
            None => {
                let w = record.len();
                kept = (0..w).filter(|c| !drop_columns.contains(c)).count();
                if kept == 0 {
                    return Err(FcmError::Empty(format!(
                        "no columns left after dropping {drop_columns:?} from {w}"
                    )));
                }
                width = Some(w);
            }
            Some(w) if w != record.len() => {
                return Err(FcmError::Ragged {
                    line,
                    expected: w,
                    found: record.len(),
                });
            }
            Some(_) => {}
        }
        for (col, cell) in record.iter().enumerate() {
            if drop_columns.contains(&col) {
                continue;
            }
            let parsed = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .and_then(T::from_f64)
                .filter(|v| v.is_finite());
            match parsed {
                Some(v) => values.push(v),
                None => {
                    return Err(FcmError::Parse {
                        line,
                        column: col + 1,
                        cell: cell.to_string(),
                    })
                }
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(FcmError::Empty("no data rows".into()));
    }
    DataMatrix::new(values, n, kept)
}

/// Parameters of an isotropic Gaussian blob dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec<T> {
    pub blob_count: usize,
    pub points_per_blob: usize,
    pub dim: usize,
    pub blob_stddev: T,
    pub blob_center_scale: T,
    pub seed: u64,
}

impl<T: Scalar> SyntheticSpec<T> {
    pub fn validate(&self) -> Result<()> {
        if self.blob_count == 0 || self.points_per_blob == 0 || self.dim == 0 {
            return Err(FcmError::InvalidArgument(format!(
                "blob_count, points_per_blob and dim must be positive (got {}, {}, {})",
                self.blob_count, self.points_per_blob, self.dim
            )));
        }
        let positive = |v: T| v.is_finite() && v > T::zero();
        if !positive(self.blob_stddev) || !positive(self.blob_center_scale) {
            return Err(FcmError::InvalidArgument(
                "blob_stddev and blob_center_scale must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// Blob data together with the generating centers and per-point blob index.
#[derive(Debug, Clone)]
pub struct LabeledBlobs<T> {
    pub data: DataMatrix<T>,
    /// `blob_count x dim`, row-major.
    pub centers: Vec<Vec<T>>,
    pub labels: Vec<usize>,
}

pub fn make_blobs<T: Scalar>(spec: &SyntheticSpec<T>) -> Result<DataMatrix<T>> {
    make_labeled_blobs(spec).map(|b| b.data)
}

/// Draws `blob_count` centers uniformly from the cube
/// `[-blob_center_scale, blob_center_scale]^dim`, then `points_per_blob`
/// Gaussian points around each, blob by blob. The output is a pure function
/// of `spec`.
pub fn make_labeled_blobs<T: Scalar>(spec: &SyntheticSpec<T>) -> Result<LabeledBlobs<T>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let scale = spec.blob_center_scale.to_f64_lossy();
    let stddev = spec.blob_stddev.to_f64_lossy();

    let centers: Vec<Vec<T>> = (0..spec.blob_count)
        .map(|_| {
            (0..spec.dim)
                .map(|_| T::lit(rng.random_range(-scale..=scale)))
                .collect()
        })
        .collect();

    let n = spec.blob_count * spec.points_per_blob;
    let mut values = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    for (b, center) in centers.iter().enumerate() {
        for _ in 0..spec.points_per_blob {
            for &m in center {
                let z: f64 = rng.sample(StandardNormal);
                values.push(m + T::lit(stddev * z));
            }
            labels.push(b);
        }
    }
    Ok(LabeledBlobs {
        data: DataMatrix::new(values, n, spec.dim)?,
        centers,
        labels,
    })
}

/// Centers every feature and scales it to unit population standard
/// deviation (denominator `n`). Zero-variance features are only centered.
pub fn standardize<T: Scalar>(data: &DataMatrix<T>) -> Result<DataMatrix<T>> {
    let (n, d) = (data.n(), data.d());
    if n < 2 {
        return Err(FcmError::InvalidArgument(format!(
            "standardization needs at least 2 points, got {n}"
        )));
    }
    let count = T::lit(n as f64);
    let mut mean = vec![T::zero(); d];
    for row in data.rows() {
        for (m, &v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);

    let mut var = vec![T::zero(); d];
    for row in data.rows() {
        for ((s, &v), &m) in var.iter_mut().zip(row).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale: Vec<T> = var
        .into_iter()
        .map(|s| {
            let sd = (s / count).sqrt();
            if sd > T::zero() {
                sd
            } else {
                T::one()
            }
        })
        .collect();

    let mut values = Vec::with_capacity(n * d);
    for row in data.rows() {
        for ((&v, &m), &s) in row.iter().zip(&mean).zip(&scale) {
            values.push((v - m) / s);
        }
    }
    DataMatrix::new(values, n, d)
}
