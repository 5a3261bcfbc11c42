//! Numerical toolkit for capsule-based analysis of stationary incompressible
//! flows.
//!
//! The crate is organised bottom-up:
//!
//! - [`fields`]: analytic and gridded velocity fields, gradients, flow maps.
//! - [`geometry`]: capsules (spherocylinders), exact predicates, quadrature.
//! - [`maximal`]: classical and streamwise maximal functions, weak-Lᵖ
//!   estimates, streamline proximity.
//! - [`construction`]: the per-point capsule construction.
//! - [`covering`]: greedy Vitali selection and coverage certificates.
//! - [`functionals`]: line integrals, mean oscillation, stream moments and
//!   exponent arithmetic.
//! - [`kernels`]: the drift-Poisson fundamental solution, its bounds, the
//!   Biot–Savart operator and a manufactured-solution harness.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod construction;
pub mod covering;
mod error;
pub mod fields;
pub mod functionals;
pub mod geometry;
pub mod kernels;
pub mod maximal;
pub mod quad;

pub use error::{Error, Result};
pub use fields::{FlowMap, GridField, Preset, VectorField};
pub use construction::{CapsuleParams, Classification, ConstructedCapsule, Mode, RootStatus};
pub use covering::CoverSelection;
pub use maximal::{MaximalConfig, WeakNormEstimate};
pub use geometry::{Capsule, QuadratureSpec};
pub use kernels::OseenKernel;

pub type Vec3 = nalgebra::Vector3<f64>;
pub type Mat3 = nalgebra::Matrix3<f64>;

/// Seeded generator used for every Monte Carlo routine in the crate.
pub type Rng = rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    use rand::SeedableRng;
    Rng::seed_from_u64(seed)
}
