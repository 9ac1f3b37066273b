//! The three fuzzy c-means solvers and their closed-form membership updates.
//!
//! | solver                | loop   | membership update per step              |
//! |-----------------------|--------|-----------------------------------------|
//! | [`solve_fcm_classic`] | single | centers, then distances to centers      |
//! | [`solve_irw_fcm`]     | double | re-weighted update, repeated until `F` settles |
//! | [`solve_fcm_mm`]      | single | minimizer of the tangent majorizer      |
//!
//! Every update reduces to a per-point bracket `b_ij` (analytically
//! `|x_i - m_j|^2`) followed by `f_ij = b_ij^(1/(1-r)) / sum_k b_ik^(1/(1-r))`.
//! The three solvers differ only in how `b_ij` is formed, which is what the
//! equivalence tests compare.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::dataset::DataMatrix;
use crate::error::{FcmError, Result};
use crate::membership::{MembershipMatrix, PowerMembership};
use crate::objective::{
    aggregates, compute_centers, phi_from_aggregates, sq_dist, ClusterAggregates, ClusterCenters,
};
use crate::scalar::{dot, dot_compensated, within_rel, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig<T> {
    pub c: usize,
    /// Fuzziness exponent, `> 1`.
    pub r: T,
    /// Outer loops stop once `|phi_prev - phi| <= outer_tol * (1 + |phi_prev|)`.
    pub outer_tol: T,
    /// The re-weighted inner loop stops once `max |F_new - F| <= inner_tol`.
    pub inner_tol: T,
    pub max_outer_iters: usize,
    pub max_inner_iters: usize,
    pub seed: u64,
    /// Brackets below this are treated as a point sitting on a center.
    pub dist_floor: T,
    /// Whether callers should standardize features before solving. The
    /// solvers themselves never touch the data.
    pub standardize: bool,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(c: usize) -> Self {
        Self {
            c,
            r: T::lit(2.0),
            outer_tol: T::lit(1e-8),
            inner_tol: T::lit(1e-8),
            max_outer_iters: 500,
            max_inner_iters: 100,
            seed: 0,
            dist_floor: T::lit(1e-12),
            standardize: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(FcmError::InvalidArgument(msg));
        if self.c < 1 {
            return bad("cluster count must be positive".into());
        }
        if !(self.r > T::one()) || !self.r.is_finite() {
            return bad(format!("fuzziness r must exceed 1, got {}", self.r));
        }
        for (name, v) in [
            ("outer_tol", self.outer_tol),
            ("inner_tol", self.inner_tol),
            ("dist_floor", self.dist_floor),
        ] {
            if !(v > T::zero()) || !v.is_finite() {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.max_outer_iters < 1 || self.max_inner_iters < 1 {
            return bad("iteration caps must be at least 1".into());
        }
        Ok(())
    }
}

impl<T: Scalar> Default for SolverConfig<T> {
    fn default() -> Self {
        Self::new(2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    Classic,
    Irw,
    Mm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 3] = [Algorithm::Classic, Algorithm::Irw, Algorithm::Mm];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Classic => "classic",
            Algorithm::Irw => "irw",
            Algorithm::Mm => "mm",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = FcmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "classic" | "fcm" => Ok(Algorithm::Classic),
            "irw" | "irw-fcm" => Ok(Algorithm::Irw),
            "mm" | "fcm-mm" => Ok(Algorithm::Mm),
            other => Err(FcmError::InvalidArgument(format!(
                "unknown algorithm {other:?} (expected classic, irw or mm)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Converged,
    MaxIters,
    /// A cluster lost all membership mass; the result holds the last
    /// non-degenerate iterate.
    Degenerate,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max_iters",
            Termination::Degenerate => "degenerate",
        }
    }
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord<T> {
    /// 0 is the initial membership, before any update.
    pub outer_iter: usize,
    pub objective: T,
    pub elapsed: Duration,
    /// Closed-form membership updates applied since the start.
    pub membership_updates: u64,
    /// Inner iterations in this outer step (0 for single-loop solvers).
    pub inner_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace<T> {
    pub records: Vec<IterationRecord<T>>,
}

impl<T: Scalar> SolverTrace<T> {
    pub fn objectives(&self) -> impl Iterator<Item = T> + '_ {
        self.records.iter().map(|r| r.objective)
    }

    pub fn last(&self) -> Option<&IterationRecord<T>> {
        self.records.last()
    }

    pub fn total_updates(&self) -> u64 {
        self.last().map_or(0, |r| r.membership_updates)
    }

    /// First record whose objective is within `tol * (1 + |target|)` of
    /// `target` (or below it).
    pub fn first_within(&self, target: T, tol: T) -> Option<&IterationRecord<T>> {
        let slack = tol * (T::one() + target.abs());
        self.records.iter().find(|r| r.objective - target <= slack)
    }

    /// Membership updates spent before the objective first came within
    /// `tol` (relative) of `target`.
    pub fn updates_to_reach(&self, target: T, tol: T) -> Option<u64> {
        self.first_within(target, tol).map(|r| r.membership_updates)
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult<T> {
    pub membership: MembershipMatrix<T>,
    pub centers: ClusterCenters<T>,
    pub objective: T,
    pub trace: SolverTrace<T>,
    pub termination: Termination,
}

/// Scale `s_j` and re-weighting vectors `a_j` of the re-weighted scheme.
///
/// `s_j = sqrt(quad_j) / mass_j` and `a_ij = x_i . y_j / sqrt(quad_j)`,
/// the `i`-th entry of `X'X g_j / sqrt(g_j'X'X g_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct IrwAuxiliary<T> {
    pub s: Vec<T>,
    /// `c x n`, row `j` holds `a_j`.
    pub a: Vec<T>,
    n: usize,
    c: usize,
}

impl<T: Scalar> IrwAuxiliary<T> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> usize {
        self.c
    }

    #[inline]
    pub fn a(&self, i: usize, j: usize) -> T {
        self.a[j * self.n + i]
    }
}

pub fn irw_auxiliary<T: Scalar>(
    data: &DataMatrix<T>,
    g: &PowerMembership<T>,
) -> Result<IrwAuxiliary<T>> {
    let agg = aggregates(data, g)?;
    irw_auxiliary_from_aggregates(data, &agg)
}

fn irw_auxiliary_from_aggregates<T: Scalar>(
    data: &DataMatrix<T>,
    agg: &ClusterAggregates<T>,
) -> Result<IrwAuxiliary<T>> {
    let (n, c) = (data.n(), agg.c());
    let mut s = Vec::with_capacity(c);
    let mut a = Vec::with_capacity(c * n);
    for j in 0..c {
        let root = agg.quad()[j].sqrt();
        if !(root > T::zero()) {
            return Err(FcmError::DegenerateCluster {
                cluster: j,
                reason: "weighted cluster image X g_j is zero, re-weighting vector undefined",
            });
        }
        s.push(root / agg.mass()[j]);
        let yj = agg.y(j);
        a.extend(data.rows().map(|x| dot(x, yj) / root));
    }
    Ok(IrwAuxiliary { s, a, n, c })
}

/// Turns one row of brackets into memberships, in place.
///
/// If any bracket is below `floor` the point is treated as sitting on those
/// centers and its membership splits evenly among them. Otherwise weights
/// are `(b_j / b_min)^(1/(1-r))`, which equals the textbook ratio after
/// normalization but cannot overflow.
fn brackets_to_memberships<T: Scalar>(row: &mut [T], r: T, floor: T) {
    let hits = row.iter().filter(|&&b| !(b >= floor)).count();
    if hits > 0 {
        let share = T::one() / T::lit(hits as f64);
        row.iter_mut()
            .for_each(|b| *b = if *b >= floor { T::zero() } else { share });
        return;
    }
    let exponent = T::one() / (T::one() - r);
    let b_min = row.iter().copied().fold(T::infinity(), T::min);
    let mut sum = T::zero();
    for b in row.iter_mut() {
        *b = (*b / b_min).powf(exponent);
        sum += *b;
    }
    row.iter_mut().for_each(|w| *w /= sum);
}

fn memberships_from<T: Scalar>(
    n: usize,
    c: usize,
    r: T,
    floor: T,
    mut bracket: impl FnMut(usize, usize) -> T,
) -> MembershipMatrix<T> {
    let mut values = Vec::with_capacity(n * c);
    for i in 0..n {
        let start = values.len();
        values.extend((0..c).map(|j| bracket(i, j)));
        brackets_to_memberships(&mut values[start..], r, floor);
    }
    MembershipMatrix::from_normalized(values, n, c)
}

fn check_r<T: Scalar>(r: T) -> Result<()> {
    if r > T::one() && r.is_finite() {
        Ok(())
    } else {
        Err(FcmError::InvalidArgument(format!(
            "fuzziness r must exceed 1, got {r}"
        )))
    }
}

/// Membership update for fixed centers, with `b_ij = |x_i - m_j|^2`.
pub fn update_membership_classic<T: Scalar>(
    data: &DataMatrix<T>,
    centers: &ClusterCenters<T>,
    r: T,
    dist_floor: T,
) -> Result<MembershipMatrix<T>> {
    check_r(r)?;
    if centers.d() != data.d() {
        return Err(FcmError::DimensionMismatch(format!(
            "centers have dimension {}, data {}",
            centers.d(),
            data.d()
        )));
    }
    Ok(memberships_from(
        data.n(),
        centers.c(),
        r,
        dist_floor,
        |i, j| sq_dist(data.row(i), centers.center(j)),
    ))
}

/// Re-weighted update with `b_ij = x_i'x_i + s_j^2 - 2 s_j a_ij`.
pub fn update_membership_irw<T: Scalar>(
    data: &DataMatrix<T>,
    aux: &IrwAuxiliary<T>,
    r: T,
    dist_floor: T,
) -> Result<MembershipMatrix<T>> {
    check_r(r)?;
    if aux.n() != data.n() {
        return Err(FcmError::DimensionMismatch(format!(
            "auxiliary built for {} points, data has {}",
            aux.n(),
            data.n()
        )));
    }
    let two = T::lit(2.0);
    Ok(memberships_from(
        data.n(),
        aux.c(),
        r,
        dist_floor,
        |i, j| {
            let s = aux.s[j];
            data.sq_norm(i) + s * s - two * s * aux.a(i, j)
        },
    ))
}

/// Minimizer of the tangent majorizer at `G_t`, with
/// `b_ij = x_i'x_i + quad_j/mass_j^2 - 2 x_i . y_j / mass_j`.
pub fn update_membership_mm<T: Scalar>(
    data: &DataMatrix<T>,
    g_t: &PowerMembership<T>,
    r: T,
    dist_floor: T,
) -> Result<MembershipMatrix<T>> {
    check_r(r)?;
    let agg = aggregates(data, g_t)?;
    Ok(mm_step(data, &agg, r, dist_floor))
}

fn mm_step<T: Scalar>(
    data: &DataMatrix<T>,
    agg: &ClusterAggregates<T>,
    r: T,
    floor: T,
) -> MembershipMatrix<T> {
    // The three terms nearly cancel for points close to a center, so the
    // bracket is accumulated in compensated arithmetic.
    let c = agg.c();
    let xx: Vec<_> = data.rows().map(|x| dot_compensated(x, x)).collect();
    let scaled_quad: Vec<_> = (0..c)
        .map(|j| {
            let m = agg.mass()[j];
            let y = agg.y(j);
            dot_compensated(y, y).div(m).div(m)
        })
        .collect();
    let minus_two = T::lit(-2.0);
    memberships_from(data.n(), c, r, floor, |i, j| {
        let cross = dot_compensated(data.row(i), agg.y(j)).div(agg.mass()[j]);
        xx[i]
            .add(scaled_quad[j])
            .add(cross.scale(minus_two))
            .value()
    })
}

/// Membership, its power and aggregates, kept in step.
struct State<T> {
    f: MembershipMatrix<T>,
    agg: ClusterAggregates<T>,
    phi: T,
}

impl<T: Scalar> State<T> {
    fn new(data: &DataMatrix<T>, f: MembershipMatrix<T>, r: T) -> Result<Self> {
        let g = f.to_power(r)?;
        let agg = aggregates(data, &g)?;
        let phi = phi_from_aggregates(data, &g, &agg);
        Ok(Self { f, agg, phi })
    }
}

enum Step<T> {
    Next(MembershipMatrix<T>, usize),
    Degenerate,
}

fn irw_outer_step<T: Scalar>(
    data: &DataMatrix<T>,
    state: &State<T>,
    cfg: &SolverConfig<T>,
    updates: &mut u64,
) -> Step<T> {
    // scales are frozen for the whole inner loop
    let s: Vec<T> = state
        .agg
        .quad()
        .iter()
        .zip(state.agg.mass())
        .map(|(&q, &m)| q.sqrt() / m)
        .collect();

    let mut inner_f = state.f.clone();
    let mut inner_agg = state.agg.clone();
    let mut inner = 0;
    loop {
        let mut aux = match irw_auxiliary_from_aggregates(data, &inner_agg) {
            Ok(aux) => aux,
            Err(_) => return Step::Degenerate,
        };
        aux.s.clone_from(&s);
        let next = update_membership_irw(data, &aux, cfg.r, cfg.dist_floor)
            .expect("config validated before solving");
        *updates += 1;
        inner += 1;
        let delta = next.max_abs_diff(&inner_f);
        inner_f = next;
        if delta <= cfg.inner_tol || inner >= cfg.max_inner_iters {
            return Step::Next(inner_f, inner);
        }
        inner_agg = match inner_f.to_power(cfg.r).and_then(|g| aggregates(data, &g)) {
            Ok(agg) => agg,
            Err(_) => return Step::Degenerate,
        };
    }
}

/// Runs `algorithm` from `f0`, calling `observer` with every trace record
/// and the membership it describes (including the initial one).
///
/// Errors on invalid configuration, mismatched shapes, or an `f0` whose
/// clusters are already degenerate. Degeneracy reached mid-run ends the
/// solve with [`Termination::Degenerate`] and the last valid iterate.
pub fn solve_observed<T, O>(
    algorithm: Algorithm,
    data: &DataMatrix<T>,
    f0: &MembershipMatrix<T>,
    cfg: &SolverConfig<T>,
    mut observer: O,
) -> Result<SolverResult<T>>
where
    T: Scalar,
    O: FnMut(&IterationRecord<T>, &MembershipMatrix<T>),
{
    cfg.validate()?;
    if f0.n() != data.n() || f0.c() != cfg.c {
        return Err(FcmError::DimensionMismatch(format!(
            "F0 is {}x{}, expected {}x{}",
            f0.n(),
            f0.c(),
            data.n(),
            cfg.c
        )));
    }
    let start = Instant::now();
    let mut state = State::new(data, f0.clone(), cfg.r)?;
    let mut updates = 0u64;
    let mut trace = SolverTrace {
        records: Vec::new(),
    };
    let first = IterationRecord {
        outer_iter: 0,
        objective: state.phi,
        elapsed: start.elapsed(),
        membership_updates: 0,
        inner_iters: 0,
    };
    observer(&first, &state.f);
    trace.records.push(first);

    let mut termination = Termination::MaxIters;
    for iter in 1..=cfg.max_outer_iters {
        let step = match algorithm {
            Algorithm::Classic => match compute_centers(&state.agg) {
                Ok(centers) => {
                    updates += 1;
                    let f = update_membership_classic(data, &centers, cfg.r, cfg.dist_floor)?;
                    Step::Next(f, 0)
                }
                Err(_) => Step::Degenerate,
            },
            Algorithm::Mm => {
                updates += 1;
                Step::Next(mm_step(data, &state.agg, cfg.r, cfg.dist_floor), 0)
            }
            Algorithm::Irw => irw_outer_step(data, &state, cfg, &mut updates),
        };
        let (f, inner_iters) = match step {
            Step::Next(f, inner) => (f, inner),
            Step::Degenerate => {
                termination = Termination::Degenerate;
                break;
            }
        };
        let next = match State::new(data, f, cfg.r) {
            Ok(next) => next,
            Err(FcmError::DegenerateCluster { .. }) => {
                termination = Termination::Degenerate;
                break;
            }
            Err(e) => return Err(e),
        };
        let record = IterationRecord {
            outer_iter: iter,
            objective: next.phi,
            elapsed: start.elapsed(),
            membership_updates: updates,
            inner_iters,
        };
        observer(&record, &next.f);
        trace.records.push(record);
        let converged = within_rel(next.phi, state.phi, cfg.outer_tol);
        state = next;
        if converged {
            termination = Termination::Converged;
            break;
        }
    }

    let centers = compute_centers(&state.agg)?;
    Ok(SolverResult {
        membership: state.f,
        centers,
        objective: state.phi,
        trace,
        termination,
    })
}

pub fn solve<T: Scalar>(
    algorithm: Algorithm,
    data: &DataMatrix<T>,
    f0: &MembershipMatrix<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolverResult<T>> {
    solve_observed(algorithm, data, f0, cfg, |_, _| {})
}

/// Alternates the weighted-mean center update and the distance-based
/// membership update.
pub fn solve_fcm_classic<T: Scalar>(
    data: &DataMatrix<T>,
    f0: &MembershipMatrix<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolverResult<T>> {
    solve(Algorithm::Classic, data, f0, cfg)
}

/// Double loop: each outer step freezes `s` from the current memberships,
/// then repeats the re-weighted update until memberships move by at most
/// `inner_tol`.
pub fn solve_irw_fcm<T: Scalar>(
    data: &DataMatrix<T>,
    f0: &MembershipMatrix<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolverResult<T>> {
    solve(Algorithm::Irw, data, f0, cfg)
}

/// Single loop of majorizer minimizations.
pub fn solve_fcm_mm<T: Scalar>(
    data: &DataMatrix<T>,
    f0: &MembershipMatrix<T>,
    cfg: &SolverConfig<T>,
) -> Result<SolverResult<T>> {
    solve(Algorithm::Mm, data, f0, cfg)
}
