//! Brute-force reference computations.
//!
//! Everything here uses plain nested loops over an explicit `n x n` Gram
//! matrix and shares no arithmetic with [`crate::objective`] or
//! [`crate::solvers`], so agreement between the two is evidence rather than
//! a tautology. Intended for small instances (`n` up to a few hundred).

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{make_blobs, DataMatrix, SyntheticSpec};
use crate::error::{FcmError, Result};
use crate::membership::{MembershipMatrix, PowerMembership};
use crate::objective::{aggregates, majorizer_h, phi, tangent_gradient};
use crate::scalar::Scalar;
use crate::solvers::{
    irw_auxiliary, solve_observed, update_membership_irw, update_membership_mm, Algorithm,
    SolverConfig,
};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub check_name: String,
    pub max_error: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
}

impl OracleReport {
    pub fn new(
        check_name: impl Into<String>,
        max_error: f64,
        tolerance: f64,
        samples: usize,
    ) -> Self {
        Self {
            check_name: check_name.into(),
            max_error,
            tolerance,
            samples,
            passed: max_error <= tolerance,
        }
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<28} max_error={:.3e} tol={:.1e} samples={}",
            if self.passed { "PASS" } else { "FAIL" },
            self.check_name,
            self.max_error,
            self.tolerance,
            self.samples
        )
    }
}

/// Explicit Gram matrix `K[i][k] = x_i . x_k`.
pub fn gram_matrix<T: Scalar>(data: &DataMatrix<T>) -> Vec<Vec<T>> {
    data.rows()
        .map(|xi| {
            data.rows()
                .map(|xl| {
                    xi.iter()
                        .zip(xl)
                        .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
                })
                .collect()
        })
        .collect()
}

fn quad_with_gram<T: Scalar>(gram: &[Vec<T>], g: &[T]) -> T {
    let mut total = T::zero();
    for (i, row) in gram.iter().enumerate() {
        for (l, &kil) in row.iter().enumerate() {
            total += g[i] * kil * g[l];
        }
    }
    total
}

/// `g' (X'X) g` through the explicit Gram matrix.
pub fn gram_quad_oracle<T: Scalar>(data: &DataMatrix<T>, g: &[T]) -> T {
    quad_with_gram(&gram_matrix(data), g)
}

/// `(X'X g) / sqrt(g'X'X g)`, the re-weighting vector, through the Gram
/// matrix.
pub fn gram_reweighting_oracle<T: Scalar>(data: &DataMatrix<T>, g: &[T]) -> Vec<T> {
    let gram = gram_matrix(data);
    let root = quad_with_gram(&gram, g).sqrt();
    gram.iter()
        .map(|row| {
            let mut acc = T::zero();
            for (l, &kil) in row.iter().enumerate() {
                acc += kil * g[l];
            }
            acc / root
        })
        .collect()
}

/// Center-free objective through the Gram matrix.
pub fn phi_oracle<T: Scalar>(data: &DataMatrix<T>, g: &PowerMembership<T>) -> T {
    let gram = gram_matrix(data);
    let mut total = T::zero();
    for j in 0..g.c() {
        let col = g.column(j);
        let mut mass = T::zero();
        for i in 0..data.n() {
            total += col[i] * gram[i][i];
            mass += col[i];
        }
        total -= quad_with_gram(&gram, &col) / mass;
    }
    total
}

/// Central differences of `g -> quad(g) / mass(g)` at `g_t`.
pub fn finite_diff_gradient<T: Scalar>(data: &DataMatrix<T>, g_t: &[T], step: T) -> Vec<T> {
    let gram = gram_matrix(data);
    let ratio = |g: &[T]| {
        let mass: T = g.iter().copied().sum();
        quad_with_gram(&gram, g) / mass
    };
    let mut probe = g_t.to_vec();
    (0..g_t.len())
        .map(|k| {
            probe[k] = g_t[k] + step;
            let up = ratio(&probe);
            probe[k] = g_t[k] - step;
            let down = ratio(&probe);
            probe[k] = g_t[k];
            (up - down) / (step + step)
        })
        .collect()
}

/// Random row-stochastic matrix with flat Dirichlet rows, from `rng`.
pub fn random_membership<R: Rng>(rng: &mut R, n: usize, c: usize) -> MembershipMatrix<f64> {
    MembershipMatrix::init_random(n, c, rng.random()).expect("n >= 1 and c >= 2")
}

/// Data uniform in `[-1, 1]^d`.
pub fn random_data<R: Rng>(rng: &mut R, n: usize, d: usize) -> DataMatrix<f64> {
    let values = (0..n * d).map(|_| rng.random_range(-1.0..=1.0)).collect();
    DataMatrix::new(values, n, d).expect("finite values")
}

/// Samples feasible memberships and checks that none has a lower majorizer
/// value than the closed-form MM update at `g_t`.
///
/// Half of the samples are independent flat-Dirichlet draws; the other half
/// are convex mixtures `(1 - lambda) F* + lambda F_rand` with `lambda`
/// ranging over `[1e-4, 1e-1]`, which probe the neighborhood of `F*`.
pub fn surrogate_argmin_oracle(
    data: &DataMatrix<f64>,
    g_t: &PowerMembership<f64>,
    r: f64,
    trials: usize,
    seed: u64,
) -> Result<OracleReport> {
    const TOL: f64 = 1e-9;
    if trials == 0 {
        return Err(FcmError::InvalidArgument("need at least one trial".into()));
    }
    let best = update_membership_mm(data, g_t, r, 1e-12)?;
    let h_best = majorizer_h(data, &best.to_power(r)?, g_t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, c) = (best.n(), best.c());
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let random = random_membership(&mut rng, n, c);
        let candidate = if trial % 2 == 0 {
            random
        } else {
            let lambda = 10f64.powf(-rng.random_range(1.0..=4.0));
            let mixed = best
                .values()
                .iter()
                .zip(random.values())
                .map(|(&b, &u)| (1.0 - lambda) * b + lambda * u)
                .collect();
            MembershipMatrix::new(mixed, n, c)?
        };
        let h = majorizer_h(data, &candidate.to_power(r)?, g_t)?;
        worst = worst.max((h_best - h) / (1.0 + h_best.abs()));
    }
    Ok(OracleReport::new("surrogate_argmin", worst, TOL, trials))
}

/// Runs `steps` MM iterations (past convergence if needed) and checks, for every
/// step, `phi(F+) <= h(G+ | G) <= h(G | G) = phi(F)` within
/// `1e-10 * (1 + |phi(F)|)`. `phi` comes from the Gram oracle; `h` from
/// [`majorizer_h`].
pub fn descent_chain_audit(
    data: &DataMatrix<f64>,
    f0: &MembershipMatrix<f64>,
    cfg: &SolverConfig<f64>,
    steps: usize,
) -> Result<OracleReport> {
    const TOL: f64 = 1e-10;
    if steps == 0 {
        return Err(FcmError::InvalidArgument("need at least one step".into()));
    }
    let audit_cfg = SolverConfig {
        max_outer_iters: steps,
        outer_tol: f64::MIN_POSITIVE,
        ..cfg.clone()
    };
    let mut iterates = Vec::new();
    solve_observed(Algorithm::Mm, data, f0, &audit_cfg, |_, f| {
        iterates.push(f.clone())
    })?;
    let r = cfg.r;
    // The solver stops once the objective stagnates exactly; keep stepping
    // so the chain always covers `steps` updates.
    while iterates.len() <= steps {
        let last = iterates.last().expect("solver records the initial iterate");
        let Ok(g) = last.to_power(r) else { break };
        let Ok(next) = update_membership_mm(data, &g, r, cfg.dist_floor) else {
            break;
        };
        iterates.push(next);
    }

    let mut worst = 0.0f64;
    let mut checked = 0;
    for pair in iterates.windows(2) {
        let g_prev = pair[0].to_power(r)?;
        let g_next = pair[1].to_power(r)?;
        let phi_prev = phi_oracle(data, &g_prev);
        let phi_next = phi_oracle(data, &g_next);
        let h_next = majorizer_h(data, &g_next, &g_prev)?;
        let h_prev = majorizer_h(data, &g_prev, &g_prev)?;
        let scale = 1.0 + phi_prev.abs();
        let violations = [
            (phi_next - h_next).max(0.0),
            (h_next - h_prev).max(0.0),
            (h_prev - phi_prev).abs(),
        ];
        for v in violations {
            worst = worst.max(v / scale);
        }
        checked += 1;
    }
    Ok(OracleReport::new("descent_chain", worst, TOL, checked))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuiteScale {
    Quick,
    Full,
}

struct SuiteSizes {
    instances: usize,
    max_n: usize,
    trials: usize,
    audit_steps: usize,
}

impl SuiteScale {
    fn sizes(self) -> SuiteSizes {
        match self {
            SuiteScale::Quick => SuiteSizes {
                instances: 20,
                max_n: 30,
                trials: 200,
                audit_steps: 50,
            },
            SuiteScale::Full => SuiteSizes {
                instances: 100,
                max_n: 100,
                trials: 1000,
                audit_steps: 100,
            },
        }
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (1.0 + b.abs())
}

/// Every oracle check on seeded random instances, one report per check.
pub fn run_suite(scale: SuiteScale, seed: u64) -> Result<Vec<OracleReport>> {
    let sizes = scale.sizes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let instance = |rng: &mut ChaCha8Rng, min_n: usize| {
        let n = rng.random_range(min_n..=sizes.max_n);
        let d = rng.random_range(1..=5);
        let c = rng.random_range(2..=5);
        let r = [1.5, 2.0, 3.0][rng.random_range(0..3)];
        (random_data(rng, n, d), random_membership(rng, n, c), r)
    };
    let mut reports = Vec::new();

    // Gram-free aggregates and re-weighting vectors against the Gram oracle.
    let mut worst = 0.0f64;
    for _ in 0..sizes.instances {
        let (x, f, r) = instance(&mut rng, 5);
        let g = f.to_power(r)?;
        let agg = aggregates(&x, &g)?;
        let aux = irw_auxiliary(&x, &g)?;
        for j in 0..g.c() {
            let col = g.column(j);
            worst = worst.max(rel_err(agg.quad()[j], gram_quad_oracle(&x, &col)));
            let a = gram_reweighting_oracle(&x, &col);
            for (i, &ai) in a.iter().enumerate() {
                worst = worst.max(rel_err(aux.a(i, j), ai));
            }
        }
        worst = worst.max(rel_err(phi(&x, &g)?, phi_oracle(&x, &g)));
    }
    reports.push(OracleReport::new(
        "gram_agreement",
        worst,
        1e-10,
        sizes.instances,
    ));

    // Tangent gradient against central differences at interior points.
    let mut worst = 0.0f64;
    for _ in 0..sizes.instances {
        let n = rng.random_range(5..=sizes.max_n.min(30));
        let d = rng.random_range(1..=5);
        let x = random_data(&mut rng, n, d);
        let g_t: Vec<f64> = (0..n).map(|_| rng.random_range(1e-3..=1.0)).collect();
        let exact = tangent_gradient(&x, &g_t)?;
        let fd = finite_diff_gradient(&x, &g_t, 1e-5);
        for (&e, &f) in exact.iter().zip(&fd) {
            worst = worst.max(rel_err(f, e));
        }
    }
    reports.push(OracleReport::new(
        "gradient_fd",
        worst,
        1e-6,
        sizes.instances,
    ));

    // Surrogate conditions: tangency and domination.
    let mut tangency = 0.0f64;
    let mut domination = 0.0f64;
    let per_center = (sizes.trials / 20).max(25);
    for _ in 0..20 {
        let (x, f_t, r) = instance(&mut rng, 5);
        let g_t = f_t.to_power(r)?;
        let phi_t = phi_oracle(&x, &g_t);
        tangency = tangency.max(rel_err(majorizer_h(&x, &g_t, &g_t)?, phi_t));
        for _ in 0..per_center {
            let g = random_membership(&mut rng, x.n(), f_t.c()).to_power(r)?;
            let phi_g = phi_oracle(&x, &g);
            let gap = phi_g - majorizer_h(&x, &g, &g_t)?;
            domination = domination.max(gap.max(0.0) / (1.0 + phi_g.abs()));
        }
    }
    reports.push(OracleReport::new("tangency", tangency, 1e-10, 20));
    reports.push(OracleReport::new(
        "domination",
        domination,
        1e-9,
        20 * per_center,
    ));

    // MM update against randomized competitors on the majorizer.
    let mut worst = 0.0f64;
    for k in 0..5 {
        let (x, f_t, r) = instance(&mut rng, 5);
        let report = surrogate_argmin_oracle(&x, &f_t.to_power(r)?, r, sizes.trials, seed + k)?;
        worst = worst.max(report.max_error);
    }
    reports.push(OracleReport::new(
        "surrogate_argmin",
        worst,
        1e-9,
        5 * sizes.trials,
    ));

    // One MM step against one re-weighted inner step at the same iterate.
    let mut worst = 0.0f64;
    for _ in 0..sizes.instances {
        let (x, f_t, r) = instance(&mut rng, 5);
        let g_t = f_t.to_power(r)?;
        let mm = update_membership_mm(&x, &g_t, r, 1e-12)?;
        let irw = update_membership_irw(&x, &irw_auxiliary(&x, &g_t)?, r, 1e-12)?;
        worst = worst.max(mm.max_abs_diff(&irw));
    }
    reports.push(OracleReport::new(
        "single_step_equivalence",
        worst,
        1e-12,
        sizes.instances,
    ));

    // Monotone descent chain on well separated blobs.
    let blobs = make_blobs(&SyntheticSpec {
        blob_count: 3,
        points_per_blob: 20,
        dim: 2,
        blob_stddev: 0.5,
        blob_center_scale: 5.0,
        seed,
    })?;
    let f0 = MembershipMatrix::init_random(blobs.n(), 3, seed)?;
    let mut report = descent_chain_audit(&blobs, &f0, &SolverConfig::new(3), sizes.audit_steps)?;
    report.check_name = "descent_chain_blobs".into();
    reports.push(report);

    Ok(reports)
}
