//! Objectives and surrogates of fuzzy c-means, all evaluated without the
//! `n x n` Gram matrix.
//!
//! Notation: `y_j = sum_i g_ij x_i` (the weighted image of cluster `j`),
//! `quad_j = |y_j|^2 = g_j' X'X g_j` and `mass_j = g_j' 1`. Every term in the
//! center-free objective reduces to these `d`-dimensional quantities.
//! Sums over points run in ascending index order everywhere.

use crate::dataset::DataMatrix;
use crate::error::{FcmError, Result};
use crate::membership::{MembershipMatrix, PowerMembership};
use crate::scalar::{dot, Scalar};

/// One center per cluster, `c x d` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCenters<T> {
    centers: Vec<T>,
    c: usize,
    d: usize,
}

impl<T: Scalar> ClusterCenters<T> {
    pub fn new(centers: Vec<T>, c: usize, d: usize) -> Result<Self> {
        if c == 0 || d == 0 || centers.len() != c * d {
            return Err(FcmError::DimensionMismatch(format!(
                "{} values cannot form {c} centers of dimension {d}",
                centers.len()
            )));
        }
        if centers.iter().any(|v| !v.is_finite()) {
            return Err(FcmError::InvalidArgument(
                "non-finite center coordinate".into(),
            ));
        }
        Ok(Self { centers, c, d })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(FcmError::DimensionMismatch("ragged center rows".into()));
        }
        Self::new(rows.concat(), rows.len(), d)
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn center(&self, j: usize) -> &[T] {
        &self.centers[j * self.d..(j + 1) * self.d]
    }

    pub fn values(&self) -> &[T] {
        &self.centers
    }
}

/// Per-cluster `y_j`, `quad_j` and `mass_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterAggregates<T> {
    y: Vec<T>,
    quad: Vec<T>,
    mass: Vec<T>,
    c: usize,
    d: usize,
}

impl<T: Scalar> ClusterAggregates<T> {
    pub fn c(&self) -> usize {
        self.c
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// `y_j = X g_j`.
    #[inline]
    pub fn y(&self, j: usize) -> &[T] {
        &self.y[j * self.d..(j + 1) * self.d]
    }

    pub fn quad(&self) -> &[T] {
        &self.quad
    }

    pub fn mass(&self) -> &[T] {
        &self.mass
    }
}

fn check_rows<T: Scalar>(data: &DataMatrix<T>, n: usize, what: &str) -> Result<()> {
    if data.n() != n {
        return Err(FcmError::DimensionMismatch(format!(
            "data has {} points but {what} has {n} rows",
            data.n()
        )));
    }
    Ok(())
}

pub fn aggregates<T: Scalar>(
    data: &DataMatrix<T>,
    g: &PowerMembership<T>,
) -> Result<ClusterAggregates<T>> {
    check_rows(data, g.n(), "G")?;
    let (c, d) = (g.c(), data.d());
    let mut y = vec![T::zero(); c * d];
    let mut mass = vec![T::zero(); c];
    for (i, x) in data.rows().enumerate() {
        for j in 0..c {
            let gij = g.get(i, j);
            mass[j] += gij;
            for (acc, &xk) in y[j * d..(j + 1) * d].iter_mut().zip(x) {
                *acc += gij * xk;
            }
        }
    }
    if let Some(j) = mass.iter().position(|&m| !(m > T::zero())) {
        return Err(FcmError::DegenerateCluster {
            cluster: j,
            reason: "zero membership mass",
        });
    }
    let quad = y.chunks_exact(d).map(|yj| dot(yj, yj)).collect();
    Ok(ClusterAggregates {
        y,
        quad,
        mass,
        c,
        d,
    })
}

/// Weighted means `m_j = y_j / mass_j`.
pub fn compute_centers<T: Scalar>(agg: &ClusterAggregates<T>) -> Result<ClusterCenters<T>> {
    if let Some(j) = agg.mass.iter().position(|&m| !(m > T::zero())) {
        return Err(FcmError::DegenerateCluster {
            cluster: j,
            reason: "zero membership mass",
        });
    }
    let centers = agg
        .y
        .chunks_exact(agg.d)
        .zip(&agg.mass)
        .flat_map(|(yj, &m)| yj.iter().map(move |&v| v / m))
        .collect();
    ClusterCenters::new(centers, agg.c, agg.d)
}

/// `|a - b|^2` accumulated in index order.
#[inline]
pub(crate) fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    let mut acc = T::zero();
    for (&x, &y) in a.iter().zip(b) {
        let t = x - y;
        acc += t * t;
    }
    acc
}

/// The fuzzy c-means objective `sum_j sum_i f_ij^r |x_i - m_j|^2`.
pub fn fcm_objective<T: Scalar>(
    data: &DataMatrix<T>,
    f: &MembershipMatrix<T>,
    centers: &ClusterCenters<T>,
    r: T,
) -> Result<T> {
    check_rows(data, f.n(), "F")?;
    if centers.c() != f.c() || centers.d() != data.d() {
        return Err(FcmError::DimensionMismatch(format!(
            "{} centers of dimension {} for {} clusters of dimension {}",
            centers.c(),
            centers.d(),
            f.c(),
            data.d()
        )));
    }
    let mut total = T::zero();
    for j in 0..f.c() {
        let m = centers.center(j);
        for (i, x) in data.rows().enumerate() {
            let fij = f.get(i, j);
            if fij > T::zero() {
                total += fij.powf(r) * sq_dist(x, m);
            }
        }
    }
    Ok(total)
}

/// `sum_j sum_i g_ij x_i'x_i`, the term shared by every objective here.
fn linear_term<T: Scalar>(data: &DataMatrix<T>, g: &PowerMembership<T>) -> T {
    let mut total = T::zero();
    for j in 0..g.c() {
        for i in 0..data.n() {
            total += g.get(i, j) * data.sq_norm(i);
        }
    }
    total
}

/// Center-free objective `sum_ij g_ij x_i'x_i - sum_j quad_j / mass_j`.
pub fn phi<T: Scalar>(data: &DataMatrix<T>, g: &PowerMembership<T>) -> Result<T> {
    let agg = aggregates(data, g)?;
    Ok(phi_from_aggregates(data, g, &agg))
}

pub(crate) fn phi_from_aggregates<T: Scalar>(
    data: &DataMatrix<T>,
    g: &PowerMembership<T>,
    agg: &ClusterAggregates<T>,
) -> T {
    let mut ratio = T::zero();
    for (&q, &m) in agg.quad.iter().zip(&agg.mass) {
        ratio += q / m;
    }
    linear_term(data, g) - ratio
}

/// Auxiliary-variable objective
/// `sum_ij g_ij x_i'x_i + sum_j (s_j^2 mass_j - 2 s_j sqrt(quad_j))`.
/// Minimized over `s` at `s_j = sqrt(quad_j) / mass_j`, where it equals
/// [`phi`].
pub fn psi<T: Scalar>(data: &DataMatrix<T>, g: &PowerMembership<T>, s: &[T]) -> Result<T> {
    let agg = aggregates(data, g)?;
    if s.len() != g.c() {
        return Err(FcmError::DimensionMismatch(format!(
            "s has {} entries for {} clusters",
            s.len(),
            g.c()
        )));
    }
    if s.iter().any(|v| !v.is_finite()) {
        return Err(FcmError::InvalidArgument(
            "non-finite auxiliary scale".into(),
        ));
    }
    let mut aux = T::zero();
    for ((&sj, &q), &m) in s.iter().zip(&agg.quad).zip(&agg.mass) {
        aux += sj * sj * m - (sj + sj) * q.sqrt();
    }
    Ok(linear_term(data, g) + aux)
}

/// The tangent-plane majorizer `h(G | G_t)` of [`phi`], with all constant
/// terms kept, so that `h(G_t | G_t) = phi(G_t)` and `h(G | G_t) >= phi(G)`.
///
/// For each cluster the concave term `-quad/mass` is replaced by its
/// first-order expansion around `g_t`,
/// `quad_t/mass_t + grad_t . (g - g_t)` with
/// `grad_t = (2 mass_t X'X g_t - quad_t 1) / mass_t^2`. The products
/// `grad_t . g` reduce to `(2 mass_t y_t . y - quad_t mass) / mass_t^2`.
pub fn majorizer_h<T: Scalar>(
    data: &DataMatrix<T>,
    g: &PowerMembership<T>,
    g_t: &PowerMembership<T>,
) -> Result<T> {
    if g.n() != g_t.n() || g.c() != g_t.c() {
        return Err(FcmError::DimensionMismatch(format!(
            "G is {}x{} but G_t is {}x{}",
            g.n(),
            g.c(),
            g_t.n(),
            g_t.c()
        )));
    }
    let agg = aggregates(data, g)?;
    let agg_t = aggregates(data, g_t)?;
    let two = T::lit(2.0);
    let mut tangent_total = T::zero();
    for j in 0..g.c() {
        let (q_t, m_t) = (agg_t.quad[j], agg_t.mass[j]);
        let grad_dot =
            |y: &[T], mass: T| (two * m_t * dot(agg_t.y(j), y) - q_t * mass) / (m_t * m_t);
        let step = grad_dot(agg.y(j), agg.mass[j]) - grad_dot(agg_t.y(j), m_t);
        tangent_total += q_t / m_t + step;
    }
    Ok(linear_term(data, g) - tangent_total)
}

/// Gradient of `g -> (g'X'Xg) / (g'1)` at `g_t`:
/// `(2 mass X'X g_t - quad 1) / mass^2`, where `X'X g_t` is formed as
/// `X'(X g_t)`.
pub fn tangent_gradient<T: Scalar>(data: &DataMatrix<T>, g_t: &[T]) -> Result<Vec<T>> {
    check_rows(data, g_t.len(), "g_t")?;
    let mut y = vec![T::zero(); data.d()];
    let mut mass = T::zero();
    for (x, &gi) in data.rows().zip(g_t) {
        mass += gi;
        for (acc, &xk) in y.iter_mut().zip(x) {
            *acc += gi * xk;
        }
    }
    if !(mass > T::zero()) {
        return Err(FcmError::DegenerateCluster {
            cluster: 0,
            reason: "zero membership mass",
        });
    }
    let quad = dot(&y, &y);
    let two = T::lit(2.0);
    Ok(data
        .rows()
        .map(|x| (two * mass * dot(x, &y) - quad) / (mass * mass))
        .collect())
}
