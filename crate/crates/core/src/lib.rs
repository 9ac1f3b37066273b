//! Fuzzy c-means clustering with three interchangeable membership solvers.
//!
//! * [`solvers::solve_fcm_classic`] alternates the center and membership
//!   closed forms.
//! * [`solvers::solve_irw_fcm`] is the double-loop iteratively re-weighted
//!   scheme with an auxiliary scale vector and an inner re-weighting loop.
//! * [`solvers::solve_fcm_mm`] is the single-loop majorization-minimization
//!   scheme on the center-free objective. One MM step coincides with one
//!   inner step of the re-weighted scheme, so the inner loop is redundant.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`). The
//! `*64` aliases below fix the scalar to `f64`, which is what the tolerances
//! in the test-suite and the CLI assume.

// `!(x > 0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod membership;
pub mod objective;
pub mod oracle;
pub mod scalar;
pub mod solvers;

pub use error::{FcmError, Result};
pub use scalar::Scalar;

pub type DataMatrix64 = dataset::DataMatrix<f64>;
pub type SyntheticSpec64 = dataset::SyntheticSpec<f64>;
pub type MembershipMatrix64 = membership::MembershipMatrix<f64>;
pub type PowerMembership64 = membership::PowerMembership<f64>;
pub type ClusterCenters64 = objective::ClusterCenters<f64>;
pub type ClusterAggregates64 = objective::ClusterAggregates<f64>;
pub type IrwAuxiliary64 = solvers::IrwAuxiliary<f64>;
pub type SolverConfig64 = solvers::SolverConfig<f64>;
pub type SolverResult64 = solvers::SolverResult<f64>;

pub type DataMatrix32 = dataset::DataMatrix<f32>;
pub type MembershipMatrix32 = membership::MembershipMatrix<f32>;
pub type SolverConfig32 = solvers::SolverConfig<f32>;
