//! Numerical probes of tail closure properties: tail additivity of
//! convolutions, max-sum equivalence, the Kesten-type bound on n-fold
//! sums, and the index bound for products with bounded weights.
//!
//! An asymptotic relation `f ∼ g` is certified on a finite grid only in the
//! weak sense that the final ratio lies in a tolerance band and the last
//! three ratios move monotonically toward one.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::claims::ClaimVectorModel;
use crate::convolution::{pair_sum_tail, ConvolutionTail, Survival, TabulatedTail, DEFAULT_CELLS};
use crate::error::{invalid, Error, Result};
use crate::heavy_tails::{
    empirical_limsup_ratio, estimate_karamata_lower, karamata_lower_analytic, KaramataConfig, MarginalModel,
};
use crate::quadrature::integrate;
use crate::rare_set::RareSet;
use crate::rng::StreamFactory;

pub const DEFAULT_BAND: (f64, f64) = (0.95, 1.05);
/// Band for moderately heavy (lognormal or Weibull) tails, whose ratios
/// converge slowly.
pub const WIDE_BAND: (f64, f64) = (0.8, 1.25);
/// Allowed excess of `Q*(v)` over `B*(v)`.
pub const PRODUCT_SLACK: f64 = 0.02;
/// Minimum hits at `n = 1` for a Kesten grid point to be kept.
const MIN_KESTEN_HITS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    TailAdditivity,
    DominantTail,
    MaxSumEquivalence,
    Kesten,
    ProductConvolution,
}

impl Property {
    pub fn tag(&self) -> &'static str {
        match self {
            Property::TailAdditivity => "tail_additivity",
            Property::DominantTail => "dominant_tail",
            Property::MaxSumEquivalence => "max_sum_equivalence",
            Property::Kesten => "kesten",
            Property::ProductConvolution => "product_convolution",
        }
    }
}

/// One ratio of a report. `param` is the number of summands for the
/// Kesten probe and the scaling factor `v` for the product check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosureRow {
    pub x: f64,
    pub param: Option<f64>,
    pub ratio: f64,
    pub in_band: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    pub property: Property,
    pub rows: Vec<ClosureRow>,
    pub band: (f64, f64),
    pub pass: bool,
    /// Fitted constants and index estimates.
    pub constants: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

fn in_band(r: f64, band: (f64, f64)) -> bool {
    r >= band.0 && r <= band.1
}

/// Final ratio in band and the last three deviations from one nonincreasing.
fn approaches_one(ratios: &[f64], band: (f64, f64)) -> bool {
    let Some(&last) = ratios.last() else {
        return false;
    };
    let tail = &ratios[ratios.len().saturating_sub(3)..];
    in_band(last, band) && tail.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs())
}

fn check_grid(x_grid: &[f64]) -> Result<()> {
    if x_grid.is_empty() {
        return Err(invalid("x_grid", "must be nonempty"));
    }
    if x_grid.windows(2).any(|w| !(w[1] > w[0])) || !(x_grid[0] > 0.0) {
        return Err(invalid("x_grid", "must be positive and strictly increasing"));
    }
    Ok(())
}

fn is_moderate(m: &MarginalModel) -> bool {
    matches!(m, MarginalModel::Lognormal { .. } | MarginalModel::Weibull { .. })
}

/// `P(Z₁ + Z₂ > x)` for independent `Z₁ ~ m1`, `Z₂ ~ m2`.
pub fn convolution_tail(m1: &MarginalModel, m2: &MarginalModel, x: f64) -> Result<ConvolutionTail> {
    m1.validate()?;
    m2.validate()?;
    pair_sum_tail(m1, m2, 0.0, x, DEFAULT_CELLS)
}

/// Ratio of the convolution tail to `tail₁ + tail₂`, or to `tail₁` alone
/// when `dominant` is set (second tail negligible).
pub fn check_tail_additivity(
    m1: &MarginalModel,
    m2: &MarginalModel,
    x_grid: &[f64],
    dominant: bool,
    band: Option<(f64, f64)>,
) -> Result<ClosureReport> {
    check_grid(x_grid)?;
    for m in [m1, m2] {
        if !m.has_infinite_support() {
            return Err(Error::Unsupported(
                "tail additivity needs laws with an infinite right endpoint".into(),
            ));
        }
    }
    let band = band.unwrap_or(if is_moderate(m1) || is_moderate(m2) {
        WIDE_BAND
    } else {
        DEFAULT_BAND
    });
    let mut rows = Vec::with_capacity(x_grid.len());
    let mut worst_err = 0.0f64;
    for &x in x_grid {
        let conv = convolution_tail(m1, m2, x)?;
        let denom = if dominant { m1.tail(x) } else { m1.tail(x) + m2.tail(x) };
        if !(denom > 0.0) {
            return Err(Error::TailUnderflow {
                largest_usable_x: rows.last().map_or(f64::NAN, |r: &ClosureRow| r.x),
            });
        }
        worst_err = worst_err.max(conv.error / conv.value.max(f64::MIN_POSITIVE));
        let ratio = conv.value / denom;
        rows.push(ClosureRow {
            x,
            param: None,
            ratio,
            in_band: in_band(ratio, band),
        });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let mut constants = BTreeMap::new();
    constants.insert("max_rel_grid_error".to_string(), worst_err);
    for (name, m) in [("karamata_lower_1", m1), ("karamata_lower_2", m2)] {
        if let Ok(r) = karamata_lower_analytic(m) {
            constants.insert(name.to_string(), r.karamata_lower);
        }
    }
    Ok(ClosureReport {
        property: if dominant {
            Property::DominantTail
        } else {
            Property::TailAdditivity
        },
        pass: approaches_one(&ratios, band),
        rows,
        band,
        constants,
        warnings: Vec::new(),
    })
}

/// `[t₁ + t₂ - t₁t₂] / [t₁ + t₂]`, the tail of the maximum of independent
/// variables over the sum of their tails.
pub fn check_max_sum_equivalence(m1: &MarginalModel, m2: &MarginalModel, x_grid: &[f64]) -> Result<ClosureReport> {
    check_grid(x_grid)?;
    let mut warnings = Vec::new();
    let rows: Vec<ClosureRow> = x_grid
        .iter()
        .filter_map(|&x| {
            let (t1, t2) = (m1.tail(x), m2.tail(x));
            let sum = t1 + t2;
            if sum > 0.0 {
                let ratio = 1.0 - t1 * t2 / sum;
                Some(ClosureRow {
                    x,
                    param: None,
                    ratio,
                    in_band: in_band(ratio, DEFAULT_BAND),
                })
            } else {
                warnings.push(format!("both tails vanish at x = {x}; point dropped"));
                None
            }
        })
        .collect();
    let pass = rows.last().is_some_and(|r| r.in_band);
    Ok(ClosureReport {
        property: Property::MaxSumEquivalence,
        rows,
        band: DEFAULT_BAND,
        pass,
        constants: BTreeMap::new(),
        warnings,
    })
}

/// Settings of the Kesten probe's Monte Carlo path (used when `d > 1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KestenOptions {
    pub replications: u64,
    pub seed: u64,
}

impl Default for KestenOptions {
    fn default() -> Self {
        KestenOptions {
            replications: 10_000_000,
            seed: 0x6b65,
        }
    }
}

/// Ratios `P(Z₁ + … + Z_n ∈ xA) / P(Z ∈ xA)` for `n ≤ n_max` and the
/// smallest `C` with `ratio_n ≤ C(1 + eps)^n` on the grid. The report
/// passes when `C` is finite and `ratio_n / n` at the largest level lies in
/// the wide band for every `n`.
pub fn kesten_probe(
    model: &ClaimVectorModel,
    set: &RareSet,
    eps: f64,
    n_max: u32,
    x_grid: &[f64],
    options: &KestenOptions,
) -> Result<ClosureReport> {
    check_grid(x_grid)?;
    if !(eps > 0.0) {
        return Err(invalid("eps", "must be positive"));
    }
    if !(1..=10).contains(&n_max) {
        return Err(invalid("n_max", "must lie in 1..=10"));
    }
    if set.dim() != model.dim() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            found: set.dim(),
        });
    }
    let nn = n_max as usize;
    let mut warnings = Vec::new();
    // probs[k][xi] = P(S_{k+1} ∈ x A)
    let (xs, probs): (Vec<f64>, Vec<Vec<f64>>) = if model.dim() == 1 && model.marginals()[0].has_infinite_support() {
        let w = set.index_points().iter().map(|p| p[0]).fold(0.0, f64::max);
        let law = model.marginals()[0];
        let levels: Vec<f64> = x_grid.iter().map(|x| x / w).collect();
        let lo = levels[0] * 1e-8;
        let hi = levels[levels.len() - 1] * 2.0;
        let mut probs = vec![levels.iter().map(|&y| law.tail(y)).collect::<Vec<_>>()];
        let mut current = TabulatedTail::build(|y| law.tail(y), lo, hi, 2048);
        for _ in 1..nn {
            let next = TabulatedTail::build(
                |y| pair_sum_tail(&current, &law, 0.0, y, 4096).map_or(f64::NAN, |r| r.value),
                lo,
                hi,
                2048,
            );
            probs.push(levels.iter().map(|&y| next.tail(y)).collect());
            current = next;
        }
        (x_grid.to_vec(), probs)
    } else {
        let hits = kesten_hits(model, set, nn, x_grid, options);
        let n = options.replications as f64;
        let keep: Vec<usize> = (0..x_grid.len()).filter(|&i| hits[i] >= MIN_KESTEN_HITS).collect();
        if keep.len() < x_grid.len() {
            warnings.push(format!(
                "grid trimmed to {} of {} levels: fewer than {MIN_KESTEN_HITS} single-claim hits",
                keep.len(),
                x_grid.len()
            ));
        }
        if keep.is_empty() {
            return Err(invalid("x_grid", "no level has enough Monte Carlo hits"));
        }
        let xs = keep.iter().map(|&i| x_grid[i]).collect();
        let nx = x_grid.len();
        let probs = (0..nn)
            .map(|k| keep.iter().map(|&i| hits[k * nx + i] as f64 / n).collect())
            .collect();
        (xs, probs)
    };
    let mut rows = Vec::new();
    let mut c_fit = 0.0f64;
    let mut worst = (0u32, 0.0f64, 0.0f64);
    for (k, series) in probs.iter().enumerate() {
        let n = (k + 1) as f64;
        for (xi, &x) in xs.iter().enumerate() {
            let ratio = series[xi] / probs[0][xi];
            let needed = ratio / (1.0 + eps).powf(n);
            if needed > c_fit {
                c_fit = needed;
                worst = ((k + 1) as u32, x, ratio);
            }
            rows.push(ClosureRow {
                x,
                param: Some(n),
                ratio,
                in_band: in_band(ratio / n, WIDE_BAND),
            });
        }
    }
    let last = xs.len() - 1;
    let pass = c_fit.is_finite()
        && rows
            .iter()
            .filter(|r| r.x == xs[last])
            .all(|r| r.in_band);
    let mut constants = BTreeMap::new();
    constants.insert("c_eps".to_string(), c_fit);
    constants.insert("eps".to_string(), eps);
    constants.insert("worst_n".to_string(), worst.0 as f64);
    constants.insert("worst_x".to_string(), worst.1);
    Ok(ClosureReport {
        property: Property::Kesten,
        rows,
        band: WIDE_BAND,
        pass,
        constants,
        warnings,
    })
}

/// Hit counts `[n-1][x]` of the partial sums `S_1, …, S_{n_max}` along
/// shared Monte Carlo paths.
fn kesten_hits(model: &ClaimVectorModel, set: &RareSet, nn: usize, x_grid: &[f64], options: &KestenOptions) -> Vec<u64> {
    const BLOCK: u64 = 1 << 14;
    let factory = StreamFactory::new(options.seed);
    let nx = x_grid.len();
    let blocks = options.replications.div_ceil(BLOCK);
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let d = model.dim();
            let mut z = vec![0.0; d];
            let mut sum = vec![0.0; d];
            let mut hits = vec![0u64; nn * nx];
            for i in b * BLOCK..((b + 1) * BLOCK).min(options.replications) {
                let mut rng = factory.stream(i);
                sum.fill(0.0);
                for k in 0..nn {
                    model.sample_into(&mut rng, &mut z);
                    sum.iter_mut().zip(&z).for_each(|(s, v)| *s += v);
                    let g = set.gauge_unchecked(&sum);
                    for (xi, &x) in x_grid.iter().enumerate() {
                        if g > x {
                            hits[k * nx + xi] += 1;
                        }
                    }
                }
            }
            hits
        })
        .reduce(
            || vec![0u64; nn * nx],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        )
}

/// A bounded weight law on `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightLaw {
    Deterministic { value: f64 },
    Uniform { a: f64, b: f64 },
}

impl WeightLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            WeightLaw::Deterministic { value } if !(value > 0.0 && value <= 1.0) => {
                Err(invalid("weight", "must lie in (0, 1]"))
            }
            WeightLaw::Uniform { a, b } if !(a >= 0.0 && b > a && b <= 1.0) => {
                Err(invalid("weight", "need 0 ≤ a < b ≤ 1"))
            }
            _ => Ok(()),
        }
    }

    /// `P(W·Z > x) = E[B̄(x / W)]`.
    pub fn product_tail(&self, m: &MarginalModel, x: f64) -> f64 {
        match *self {
            WeightLaw::Deterministic { value } => m.tail(x / value),
            WeightLaw::Uniform { a, b } => {
                let f = |u: f64| if u > 0.0 { m.tail(x / u) } else { 0.0 };
                let mut breaks = vec![a];
                // B̄(x/u) has a kink where x/u crosses the support start
                let s = m.support_start();
                if s > 0.0 && x / s > a && x / s < b {
                    breaks.push(x / s);
                }
                breaks.push(b);
                let q: f64 = breaks
                    .windows(2)
                    .map(|w| integrate(f, w[0], w[1], 1e-12, 0.0).map_or(f64::NAN, |q| q.value))
                    .sum();
                q / (b - a)
            }
        }
    }
}

/// Compares `Q*(v)` for `Q` the law of `W·Z` with `B*(v)` for `B` the law
/// of `Z`; passes when `Q*(v) ≤ B*(v)(1 + PRODUCT_SLACK)` for every `v`.
pub fn product_convolution_check(
    m: &MarginalModel,
    w: &WeightLaw,
    v_grid: &[f64],
    x_grid: &[f64],
) -> Result<ClosureReport> {
    m.validate()?;
    w.validate()?;
    check_grid(x_grid)?;
    if v_grid.is_empty() {
        return Err(invalid("v_grid", "must be nonempty"));
    }
    let q_tail = |x: f64| w.product_tail(m, x);
    let b_tail = |x: f64| m.tail(x);
    let limit = 1.0 + PRODUCT_SLACK;
    let mut rows = Vec::with_capacity(v_grid.len());
    for &v in v_grid {
        let q = empirical_limsup_ratio(q_tail, v, x_grid)?;
        let b = empirical_limsup_ratio(b_tail, v, x_grid)?;
        let ratio = q / b;
        rows.push(ClosureRow {
            x: x_grid[x_grid.len() - 1],
            param: Some(v),
            ratio,
            in_band: ratio <= limit,
        });
    }
    let mut constants = BTreeMap::new();
    let mut warnings = Vec::new();
    if v_grid.len() >= 4 && v_grid.iter().all(|&v| v > 1.0 && v <= 1.2) {
        let cfg = KaramataConfig {
            v_grid: v_grid.to_vec(),
            x_grid: x_grid.to_vec(),
        };
        let kb = estimate_karamata_lower(b_tail, &cfg)?.karamata_lower;
        let kq = estimate_karamata_lower(q_tail, &cfg)?.karamata_lower;
        constants.insert("karamata_lower_b".to_string(), kb);
        constants.insert("karamata_lower_q".to_string(), kq);
        if kq < kb * (1.0 - PRODUCT_SLACK) {
            warnings.push(format!("index estimate of the product {kq} below that of the factor {kb}"));
        }
    }
    Ok(ClosureReport {
        property: Property::ProductConvolution,
        pass: rows.iter().all(|r| r.in_band),
        rows,
        band: (0.0, limit),
        constants,
        warnings,
    })
}
