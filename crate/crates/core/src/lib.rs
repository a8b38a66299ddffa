//! Simulation and asymptotic evaluation of rare-set entrance probabilities
//! for multidimensional renewal risk models with delayed claims.
//!
//! The discounted aggregate claim vector up to time `t` is
//!
//! ```text
//! D_r(t) = Σ_{i ≤ N(t)} X_i e^{-r τ_i}
//!        + Σ_{i ≤ N(t)} Σ_{j ≤ M_i} Y_ij e^{-r (τ_i + D_ij)} 1{τ_i + D_ij ≤ t}
//! ```
//!
//! and the quantities of interest are `P(D_r(t) ∈ x·A)` and
//! `P(D_r(∞) ∈ x·A)` for rare sets `A` as `x` grows. [`mc`] estimates them
//! by crude Monte Carlo, [`asymptotics`] evaluates the single-big-jump
//! approximations, and [`closure`] probes the tail-closure properties the
//! approximations rely on.

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod claims;
pub mod closure;
pub mod convolution;
pub mod error;
pub mod heavy_tails;
pub mod mc;
pub mod quadrature;
pub mod rare_set;
pub mod renewal;
pub mod report;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
pub use heavy_tails::MarginalModel;
pub use rare_set::RareSet;
