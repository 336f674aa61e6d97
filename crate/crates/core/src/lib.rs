//! Solver toolkit for the OWA-k-median problem and its 0/1-cost special case,
//! minimisation Proportional Approval Voting (PAV).
//!
//! The pipeline: solve the LP relaxation ([`lp`]), round the fractional
//! openings with tournament-tree dependent rounding ([`rounding`]), and assign
//! every client greedily ([`model`], via the OWA cost itself). [`exact`] holds
//! brute-force oracles, [`bound`] evaluates the per-interval approximation
//! ratio, [`reduce`] maps instances to fault-tolerant k-median with
//! multiplicities, and [`gen`] builds test instances.
//!
//! Cost evaluation, exact enumeration and rounding are generic over
//! [`Scalar`] (`f32`, `f64`, [`BigRational`]); the bound analysis is generic
//! over [`num_traits::Float`]. Concrete aliases are exported below.

pub mod approx;
pub mod bound;
pub mod error;
pub mod exact;
pub mod gen;
pub mod io;
pub mod lp;
pub mod model;
pub mod reduce;
pub mod rounding;
pub mod scalar;

pub use error::{Error, Result};
pub use model::{Committee, Instance, Parameter, WeightFamily, WeightVector};
pub use num_rational::BigRational;
pub use scalar::Scalar;

/// Float instance, the working type for LP solving and experiments.
pub type Instance64 = Instance<f64>;
/// Exact rational instance used by the reduction and identity checks.
pub type ExactInstance = Instance<BigRational>;
pub type Weights64 = WeightVector<f64>;
pub type ExactWeights = WeightVector<BigRational>;
pub type BoundRow64 = bound::BoundRow<f64>;
