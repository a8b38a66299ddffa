//! Lower Karamata and Matuszewska indexes.
//!
//! The analytic route reads the index off the law family. The empirical
//! route works from a closed-form tail only: it approximates
//! `B*(v) = limsup_x B̄(vx)/B̄(x)` on the upper half of an x-grid and fits
//! the slope of `-ln B*(v)` against `ln v` for `v` close to one.

use serde::Serialize;

use super::MarginalModel;
use crate::error::{invalid, Error, Result};

/// Below this the empirical `B*(v)` is treated as zero and the index as `+∞`.
const UNDERFLOW: f64 = 1e-300;
/// Relative growth of the fitted slope between the truncated and the full
/// grid above which the estimate is reported as diverging.
const DIVERGENCE_GROWTH: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexMethod {
    Analytic,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexDiagnostics {
    pub v_grid: Vec<f64>,
    /// Empirical `B*(v)` for each entry of `v_grid`.
    pub b_star: Vec<f64>,
    /// Slope fitted on the grid with its upper quarter removed.
    pub truncated_estimate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexReport {
    /// `K⁻`, possibly `+∞`.
    pub karamata_lower: f64,
    /// `J⁻`; only available analytically.
    pub matuszewska_lower: Option<f64>,
    pub method: IndexMethod,
    pub consistent_with_infinity: bool,
    pub diagnostics: Option<IndexDiagnostics>,
}

impl IndexReport {
    /// `K⁻ ≤ J⁻` whenever both are finite.
    pub fn is_ordered(&self) -> bool {
        match self.matuszewska_lower {
            Some(j) if j.is_finite() && self.karamata_lower.is_finite() => {
                self.karamata_lower <= j
            }
            _ => true,
        }
    }
}

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(a > 0.0 && b > a && n >= 2);
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i == n - 1 {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

pub fn karamata_lower_analytic(model: &MarginalModel) -> Result<IndexReport> {
    let k = match *model {
        MarginalModel::Pareto { alpha, .. } => alpha,
        MarginalModel::Lognormal { .. }
        | MarginalModel::Weibull { .. }
        | MarginalModel::Exponential { .. } => f64::INFINITY,
        MarginalModel::Deterministic { .. } => {
            return Err(Error::Unsupported(
                "index of a law without an infinite right endpoint".into(),
            ))
        }
    };
    Ok(IndexReport {
        karamata_lower: k,
        matuszewska_lower: Some(k),
        method: IndexMethod::Analytic,
        consistent_with_infinity: k.is_infinite(),
        diagnostics: None,
    })
}

/// Maximum of `tail(v·x)/tail(x)` over the upper half of `x_grid`.
pub fn empirical_limsup_ratio<F: Fn(f64) -> f64>(tail: F, v: f64, x_grid: &[f64]) -> Result<f64> {
    if !(v > 1.0) {
        return Err(invalid("v", format!("must exceed 1, got {v}")));
    }
    check_grid(x_grid)?;
    let upper = &x_grid[x_grid.len() / 2..];
    let mut best = 0.0f64;
    for &x in upper {
        let base = tail(x);
        if base <= 0.0 {
            let largest_usable_x = x_grid
                .iter()
                .copied()
                .filter(|&y| tail(y) > 0.0)
                .fold(f64::NAN, f64::max);
            return Err(Error::TailUnderflow { largest_usable_x });
        }
        best = best.max(tail(v * x) / base);
    }
    Ok(best)
}

fn check_grid(x_grid: &[f64]) -> Result<()> {
    if x_grid.len() < 32 {
        return Err(invalid("x_grid", "needs at least 32 points"));
    }
    if x_grid.windows(2).any(|w| !(w[1] > w[0])) || !(x_grid[0] > 0.0) {
        return Err(invalid("x_grid", "must be positive and strictly increasing"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KaramataConfig {
    /// Points in `(1, 1.2]`, at least four.
    pub v_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
}

impl KaramataConfig {
    pub fn with_x_range(x_min: f64, x_max: f64) -> Self {
        KaramataConfig {
            v_grid: vec![1.2, 1.1, 1.05, 1.02, 1.01],
            x_grid: log_grid(x_min, x_max, 256),
        }
    }
}

fn fitted_slope<F: Fn(f64) -> f64>(tail: &F, v_grid: &[f64], x_grid: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut b_star = Vec::with_capacity(v_grid.len());
    let (mut sxy, mut sxx) = (0.0, 0.0);
    let mut infinite = false;
    for &v in v_grid {
        let b = empirical_limsup_ratio(tail, v, x_grid)?;
        b_star.push(b);
        if b < UNDERFLOW {
            infinite = true;
            continue;
        }
        let (lx, ly) = (v.ln(), -b.ln());
        sxy += lx * ly;
        sxx += lx * lx;
    }
    let slope = if infinite { f64::INFINITY } else { sxy / sxx };
    Ok((slope, b_star))
}

/// Least-squares estimate of `K⁻` from a closed-form tail.
pub fn estimate_karamata_lower<F: Fn(f64) -> f64>(tail: F, config: &KaramataConfig) -> Result<IndexReport> {
    let v_grid = &config.v_grid;
    if v_grid.len() < 4 {
        return Err(invalid("v_grid", "needs at least four points"));
    }
    if v_grid.iter().any(|&v| !(v > 1.0 && v <= 1.2)) {
        return Err(invalid("v_grid", "points must lie in (1, 1.2]"));
    }
    let mut sorted = v_grid.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("v_grid", "points must be distinct"));
    }
    check_grid(&config.x_grid)?;

    let (slope, b_star) = fitted_slope(&tail, v_grid, &config.x_grid)?;
    let cut = (config.x_grid.len() * 3 / 4).max(32);
    let (truncated, _) = fitted_slope(&tail, v_grid, &config.x_grid[..cut])?;

    let consistent_with_infinity = slope.is_infinite()
        || (truncated > 0.0 && slope > truncated * (1.0 + DIVERGENCE_GROWTH));
    Ok(IndexReport {
        karamata_lower: slope,
        matuszewska_lower: None,
        method: IndexMethod::Empirical,
        consistent_with_infinity,
        diagnostics: Some(IndexDiagnostics {
            v_grid: v_grid.clone(),
            b_star,
            truncated_estimate: truncated,
        }),
    })
}
