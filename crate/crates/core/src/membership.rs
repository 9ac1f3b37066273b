//! The membership matrix `F` (row-stochastic, `n x c`) and its elementwise
//! power `G = F^r`.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{FcmError, Result};
use crate::scalar::Scalar;

/// Maximum allowed `|sum_j f_ij - 1|` for a valid row.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Entries down to `-NEGATIVE_ENTRY_TOL` are accepted as rounding noise.
pub const NEGATIVE_ENTRY_TOL: f64 = 1e-12;

/// Both tolerances are raised to `64 * epsilon` for scalars coarser than
/// `f64`.
fn tolerance<T: Scalar>(tol: f64) -> T {
    T::lit(tol).max(T::epsilon() * T::lit(64.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MembershipMatrix<T> {
    values: Vec<T>,
    n: usize,
    c: usize,
}

/// Outcome of [`validate_values`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MembershipReport<T> {
    pub max_row_sum_deviation: T,
    pub min_entry: T,
    pub finite: bool,
    pub passed: bool,
}

/// Checks the constraint set `F 1 = 1, F >= 0` on raw row-major values.
pub fn validate_values<T: Scalar>(values: &[T], c: usize) -> MembershipReport<T> {
    let mut max_dev = T::zero();
    let mut min_entry = T::infinity();
    let mut finite = true;
    if c > 0 {
        for row in values.chunks(c) {
            let mut sum = T::zero();
            for &v in row {
                finite &= v.is_finite();
                min_entry = min_entry.min(v);
                sum += v;
            }
            max_dev = max_dev.max((sum - T::one()).abs());
        }
    }
    let passed = finite
        && c > 0
        && values.len().is_multiple_of(c)
        && max_dev <= tolerance(ROW_SUM_TOL)
        && min_entry >= -tolerance::<T>(NEGATIVE_ENTRY_TOL);
    MembershipReport {
        max_row_sum_deviation: max_dev,
        min_entry,
        finite,
        passed,
    }
}

impl<T: Scalar> MembershipMatrix<T> {
    /// Wraps row-major values, rejecting anything off the simplex.
    /// `c = 1` is accepted (trivial single cluster) for testing purposes.
    pub fn new(values: Vec<T>, n: usize, c: usize) -> Result<Self> {
        if n == 0 || c == 0 || values.len() != n * c {
            return Err(FcmError::DimensionMismatch(format!(
                "{} values cannot form a {n}x{c} membership matrix",
                values.len()
            )));
        }
        let report = validate_values(&values, c);
        if !report.passed {
            return Err(FcmError::InvalidArgument(format!(
                "rows are not on the simplex: max row-sum deviation {}, min entry {}",
                report.max_row_sum_deviation, report.min_entry
            )));
        }
        Ok(Self { values, n, c })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != c) {
            return Err(FcmError::DimensionMismatch("ragged membership rows".into()));
        }
        Self::new(rows.concat(), rows.len(), c)
    }

    /// For closed-form updates that produce normalized rows by construction.
    pub(crate) fn from_normalized(values: Vec<T>, n: usize, c: usize) -> Self {
        debug_assert!(validate_values(&values, c).passed);
        Self { values, n, c }
    }

    /// Each row drawn independently from the flat Dirichlet distribution on
    /// the `(c-1)`-simplex, by normalizing `c` i.i.d. unit exponentials.
    pub fn init_random(n: usize, c: usize, seed: u64) -> Result<Self> {
        if c < 2 {
            return Err(FcmError::InvalidArgument(format!(
                "need c >= 2 clusters, got {c}"
            )));
        }
        if n == 0 {
            return Err(FcmError::InvalidArgument("need at least one point".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(n * c);
        let mut draws = vec![0.0f64; c];
        for _ in 0..n {
            let sum = loop {
                draws.iter_mut().for_each(|e| *e = Exp1.sample(&mut rng));
                let s: f64 = draws.iter().sum();
                if s > 0.0 {
                    break s;
                }
            };
            values.extend(draws.iter().map(|&e| T::lit(e / sum)));
        }
        normalize_rows(&mut values, c);
        Ok(Self { values, n, c })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> usize {
        self.c
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.c + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[T] {
        &self.values[i * self.c..(i + 1) * self.c]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[T]> + '_ {
        self.values.chunks_exact(self.c)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn validate(&self) -> MembershipReport<T> {
        validate_values(&self.values, self.c)
    }

    /// Largest elementwise `|self - other|`.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .zip(&other.values)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }

    pub fn to_power(&self, r: T) -> Result<PowerMembership<T>> {
        PowerMembership::from_membership(self, r)
    }

    /// Writes `n` lines of `c` comma separated values. Values are printed
    /// with the shortest representation that parses back to the same bits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for row in self.rows() {
            let mut first = true;
            for v in row {
                if !first {
                    out.write_all(b",")?;
                }
                first = false;
                write!(out, "{v}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Divides every row by its sum.
pub(crate) fn normalize_rows<T: Scalar>(values: &mut [T], c: usize) {
    for row in values.chunks_exact_mut(c) {
        let sum: T = row.iter().copied().sum();
        row.iter_mut().for_each(|v| *v /= sum);
    }
}

/// `g_ij = f_ij^r` with cached column sums `g_j . 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerMembership<T> {
    values: Vec<T>,
    n: usize,
    c: usize,
    r: T,
    col_sums: Vec<T>,
}

impl<T: Scalar> PowerMembership<T> {
    /// Fails with [`FcmError::DegenerateCluster`] when a column sum is zero.
    pub fn from_membership(f: &MembershipMatrix<T>, r: T) -> Result<Self> {
        if !(r > T::one()) || !r.is_finite() {
            return Err(FcmError::InvalidArgument(format!(
                "fuzziness r must exceed 1, got {r}"
            )));
        }
        let values: Vec<T> = f.values.iter().map(|&v| v.max(T::zero()).powf(r)).collect();
        let mut col_sums = vec![T::zero(); f.c];
        for row in values.chunks_exact(f.c) {
            for (s, &g) in col_sums.iter_mut().zip(row) {
                *s += g;
            }
        }
        if let Some(j) = col_sums.iter().position(|&s| !(s > T::zero())) {
            return Err(FcmError::DegenerateCluster {
                cluster: j,
                reason: "all memberships vanished",
            });
        }
        Ok(Self {
            values,
            n: f.n,
            c: f.c,
            r,
            col_sums,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn r(&self) -> T {
        self.r
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.c + j]
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// `g_j . 1` per cluster.
    pub fn col_sums(&self) -> &[T] {
        &self.col_sums
    }

    /// Column `j` as an `n`-vector.
    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.n).map(|i| self.get(i, j)).collect()
    }
}
