//! One-dimensional claim-size laws.
//!
//! Each law exposes its survival function, the inverse of the survival
//! function, and an inverse-transform sampler that consumes exactly one
//! uniform draw per variate so that vector samplers keep their streams
//! aligned across components.

mod index;

pub use index::{
    empirical_limsup_ratio, estimate_karamata_lower, karamata_lower_analytic, log_grid,
    IndexMethod, IndexReport, KaramataConfig,
};

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::{erfc, erfc_inv};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Result};

/// A nonnegative claim-size law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MarginalModel {
    /// `P(Z > x) = (x / scale)^(-alpha)` for `x ≥ scale`.
    Pareto { alpha: f64, scale: f64 },
    Lognormal { mu: f64, sigma: f64 },
    /// `P(Z > x) = exp(-(x / scale)^shape)` with `shape < 1`.
    Weibull { shape: f64, scale: f64 },
    Exponential { rate: f64 },
    Deterministic { value: f64 },
}

/// Coarse tail heaviness used to check that two claim laws are
/// comparable or that one is negligible against the other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailClass {
    /// Regularly varying with the given index.
    Regular(f64),
    Lognormal { sigma: f64 },
    Weibull { shape: f64, scale: f64 },
    Exponential(f64),
    Bounded,
}

impl TailClass {
    fn rank(&self) -> u8 {
        match self {
            TailClass::Regular(_) => 0,
            TailClass::Lognormal { .. } => 1,
            TailClass::Weibull { .. } => 2,
            TailClass::Exponential(_) => 3,
            TailClass::Bounded => 4,
        }
    }

    /// `Some(Less)` when `self` has the strictly heavier tail, `Some(Equal)`
    /// when the two tails are weakly equivalent, `None` when the classes
    /// cannot be ordered from their parameters alone.
    pub fn compare_heaviness(&self, other: &TailClass) -> Option<std::cmp::Ordering> {
        use std::cmp::Ordering::*;
        match (self, other) {
            (TailClass::Regular(a), TailClass::Regular(b)) => a.partial_cmp(b),
            (TailClass::Lognormal { sigma: a }, TailClass::Lognormal { sigma: b }) => {
                b.partial_cmp(a)
            }
            (
                TailClass::Weibull { shape: a, scale: sa },
                TailClass::Weibull { shape: b, scale: sb },
            ) => match a.partial_cmp(b)? {
                Equal => sb.partial_cmp(sa),
                o => Some(o),
            },
            (TailClass::Exponential(a), TailClass::Exponential(b)) => a.partial_cmp(b),
            (TailClass::Bounded, TailClass::Bounded) => None,
            _ => Some(self.rank().cmp(&other.rank())),
        }
    }
}

impl MarginalModel {
    pub fn validate(&self) -> Result<()> {
        let finite_pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and positive, got {v}")))
            }
        };
        match *self {
            MarginalModel::Pareto { alpha, scale } => {
                finite_pos("alpha", alpha)?;
                finite_pos("scale", scale)
            }
            MarginalModel::Lognormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(invalid("mu", "must be finite"));
                }
                finite_pos("sigma", sigma)
            }
            MarginalModel::Weibull { shape, scale } => {
                if !(shape > 0.0 && shape < 1.0) {
                    return Err(invalid("shape", format!("must lie in (0, 1), got {shape}")));
                }
                finite_pos("scale", scale)
            }
            MarginalModel::Exponential { rate } => finite_pos("rate", rate),
            MarginalModel::Deterministic { value } => {
                if value >= 0.0 && value.is_finite() {
                    Ok(())
                } else {
                    Err(invalid("value", "must be finite and nonnegative"))
                }
            }
        }
    }

    /// `P(Z > x)`.
    pub fn tail(&self, x: f64) -> f64 {
        match *self {
            MarginalModel::Pareto { alpha, scale } => {
                if x <= scale {
                    1.0
                } else {
                    (x / scale).powf(-alpha)
                }
            }
            MarginalModel::Lognormal { mu, sigma } => {
                if x <= 0.0 {
                    1.0
                } else {
                    0.5 * erfc((x.ln() - mu) / (sigma * std::f64::consts::SQRT_2))
                }
            }
            MarginalModel::Weibull { shape, scale } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-(x / scale).powf(shape)).exp()
                }
            }
            MarginalModel::Exponential { rate } => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-rate * x).exp()
                }
            }
            MarginalModel::Deterministic { value } => {
                if x < value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            MarginalModel::Exponential { rate } if x > 0.0 => -(-rate * x).exp_m1(),
            MarginalModel::Weibull { shape, scale } if x > 0.0 => {
                -(-(x / scale).powf(shape)).exp_m1()
            }
            _ => 1.0 - self.tail(x),
        }
    }

    /// Smallest `x` with `P(Z > x) ≤ p`, for `p ∈ (0, 1]`.
    pub fn inverse_tail(&self, p: f64) -> f64 {
        match *self {
            MarginalModel::Pareto { alpha, scale } => scale * p.powf(-1.0 / alpha),
            MarginalModel::Lognormal { mu, sigma } => {
                let z = std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
                (mu + sigma * z).exp()
            }
            MarginalModel::Weibull { shape, scale } => scale * (-p.ln()).powf(1.0 / shape),
            MarginalModel::Exponential { rate } => -p.ln() / rate,
            MarginalModel::Deterministic { value } => value,
        }
    }

    /// One inverse-transform draw; consumes exactly one uniform.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.sample(Open01);
        self.inverse_tail(u)
    }

    pub fn mean(&self) -> f64 {
        match *self {
            MarginalModel::Pareto { alpha, scale } => {
                if alpha > 1.0 {
                    alpha * scale / (alpha - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            MarginalModel::Lognormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            MarginalModel::Weibull { shape, scale } => scale * gamma(1.0 + 1.0 / shape),
            MarginalModel::Exponential { rate } => 1.0 / rate,
            MarginalModel::Deterministic { value } => value,
        }
    }

    /// Whether the support is unbounded above.
    pub fn has_infinite_support(&self) -> bool {
        !matches!(self, MarginalModel::Deterministic { .. })
    }

    pub fn is_degenerate_zero(&self) -> bool {
        matches!(self, MarginalModel::Deterministic { value } if *value == 0.0)
    }

    pub fn tail_class(&self) -> TailClass {
        match *self {
            MarginalModel::Pareto { alpha, .. } => TailClass::Regular(alpha),
            MarginalModel::Lognormal { sigma, .. } => TailClass::Lognormal { sigma },
            MarginalModel::Weibull { shape, scale } => TailClass::Weibull { shape, scale },
            MarginalModel::Exponential { rate } => TailClass::Exponential(rate),
            MarginalModel::Deterministic { .. } => TailClass::Bounded,
        }
    }

    /// Left end of the support.
    pub fn support_start(&self) -> f64 {
        match *self {
            MarginalModel::Pareto { scale, .. } => scale,
            MarginalModel::Deterministic { value } => value,
            _ => 0.0,
        }
    }
}
