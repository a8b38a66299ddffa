//! Tails of sums of nonnegative random variables by grid convolution.
//!
//! For `S = A + B` and any level `y` the event `{S > y}` splits into the
//! disjoint pieces `{A ≤ y/2, S > y}`, `{B ≤ y/2, S > y}` and
//! `{A > y/2, B > y/2}`. The first two are Stieltjes integrals of a
//! conditional tail against a distribution function restricted to
//! `[0, y/2]`, where the integrand is smooth and bounded by the tail at
//! `y/2`. Both integrals use a log-spaced grid with trapezoid weights; the
//! result is extrapolated from two resolutions and the difference between
//! them is reported as the error.

use crate::error::{invalid, Error, Result};
use crate::heavy_tails::MarginalModel;

/// Default number of grid cells on `[0, y/2]`.
pub const DEFAULT_CELLS: usize = 1 << 14;
/// The grid starts at this fraction of `y/2`; mass below it is lumped
/// into the first cell.
const GRID_FLOOR: f64 = 1e-10;

/// A survival function of a nonnegative random variable.
pub trait Survival {
    fn tail(&self, x: f64) -> f64;
    /// Location of a unit point mass if the law is degenerate.
    fn point_mass(&self) -> Option<f64> {
        None
    }
}

impl Survival for MarginalModel {
    fn tail(&self, x: f64) -> f64 {
        MarginalModel::tail(self, x)
    }

    fn point_mass(&self) -> Option<f64> {
        match *self {
            MarginalModel::Deterministic { value } => Some(value),
            _ => None,
        }
    }
}

/// The law of `weight · Z`.
#[derive(Debug, Clone, Copy)]
pub struct Scaled<'a> {
    pub law: &'a MarginalModel,
    pub weight: f64,
}

impl Survival for Scaled<'_> {
    fn tail(&self, x: f64) -> f64 {
        self.law.tail(x / self.weight)
    }

    fn point_mass(&self) -> Option<f64> {
        self.law.point_mass().map(|v| v * self.weight)
    }
}

impl<S: Survival + ?Sized> Survival for &S {
    fn tail(&self, x: f64) -> f64 {
        (**self).tail(x)
    }

    fn point_mass(&self) -> Option<f64> {
        (**self).point_mass()
    }
}

/// A tail tabulated on a log-spaced grid, interpolated in `(ln x, ln tail)`
/// by Catmull-Rom splines, linearly on the outer cells. Below the grid the
/// first value is returned; above it the last segment is extended as a
/// power law.
#[derive(Debug, Clone)]
pub struct TabulatedTail {
    log_lo: f64,
    step: f64,
    log_tails: Vec<f64>,
}

impl TabulatedTail {
    pub fn build<F: FnMut(f64) -> f64>(mut tail: F, lo: f64, hi: f64, points: usize) -> Self {
        assert!(lo > 0.0 && hi > lo && points >= 2);
        let log_lo = lo.ln();
        let step = (hi.ln() - log_lo) / (points - 1) as f64;
        let log_tails = (0..points)
            .map(|i| tail((log_lo + step * i as f64).exp()).max(f64::MIN_POSITIVE).ln())
            .collect();
        TabulatedTail {
            log_lo,
            step,
            log_tails,
        }
    }
}

impl Survival for TabulatedTail {
    fn tail(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.log_tails[0].exp();
        }
        let pos = (x.ln() - self.log_lo) / self.step;
        if pos <= 0.0 {
            return self.log_tails[0].exp();
        }
        let v = &self.log_tails;
        let last = v.len() - 1;
        let i = (pos.floor() as usize).min(last - 1);
        let f = pos - i as f64;
        let lt = if i == 0 || i + 2 > last || pos > last as f64 {
            v[i] + f * (v[i + 1] - v[i])
        } else {
            // Catmull-Rom
            let (p0, p1, p2, p3) = (v[i - 1], v[i], v[i + 1], v[i + 2]);
            p1 + 0.5
                * f
                * (p2 - p0 + f * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + f * (3.0 * (p1 - p2) + p3 - p0)))
        };
        lt.exp().min(1.0)
    }
}

/// Tail probability with its numerical error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvolutionTail {
    pub value: f64,
    pub error: f64,
}

/// Stieltjes integral `∫_{[0,h]} g(y - s, tail_a(s)) dF_a(s)` on `cells` cells.
fn half_integral<A: Survival, G: Fn(f64, f64) -> f64>(a: &A, g: &G, y: f64, cells: usize) -> f64 {
    let h = 0.5 * y;
    let ratio = (1.0 / GRID_FLOOR).powf(1.0 / (cells - 1) as f64);
    let mut s_prev = 0.0;
    let mut t_prev = a.tail(0.0);
    let mut g_prev = g(y, t_prev);
    let mut s = h * GRID_FLOOR;
    let mut acc = 0.0;
    for k in 0..cells {
        if k == cells - 1 {
            s = h;
        }
        let t = a.tail(s);
        let mass = t_prev - t;
        let gv = g(y - s, t);
        if mass > 0.0 {
            acc += mass * 0.5 * (g_prev + gv);
        }
        s_prev = s;
        t_prev = t;
        g_prev = gv;
        s *= ratio;
    }
    debug_assert!(s_prev == h);
    acc
}

/// `P(A + B > y)` for independent (`theta = 0`) or FGM-coupled summands
/// on a grid with the given number of cells.
fn pair_tail_raw<A: Survival, B: Survival>(a: &A, b: &B, theta: f64, y: f64, cells: usize) -> f64 {
    let h = 0.5 * y;
    // P(B > z | A at survival level p) = t + θ t (1 - t)(1 - 2p), t = P(B > z).
    let cond_b = |z: f64, p: f64| {
        let t = b.tail(z);
        t + theta * t * (1.0 - t) * (1.0 - 2.0 * p)
    };
    let cond_a = |z: f64, p: f64| {
        let t = a.tail(z);
        t + theta * t * (1.0 - t) * (1.0 - 2.0 * p)
    };
    let (ta, tb) = (a.tail(h), b.tail(h));
    let joint = ta * tb * (1.0 + theta * (1.0 - ta) * (1.0 - tb));
    half_integral(a, &cond_b, y, cells) + half_integral(b, &cond_a, y, cells) + joint
}

/// `P(A + B > y)` with two-resolution error control.
pub fn pair_sum_tail<A: Survival, B: Survival>(
    a: &A,
    b: &B,
    theta: f64,
    y: f64,
    cells: usize,
) -> Result<ConvolutionTail> {
    if !(y.is_finite()) {
        return Err(invalid("y", "must be finite"));
    }
    if !(-1.0..=1.0).contains(&theta) {
        return Err(invalid("theta", "must lie in [-1, 1]"));
    }
    if cells < 16 {
        return Err(invalid("cells", "grid too coarse"));
    }
    // A degenerate summand is independent of the other and shifts the level.
    match (a.point_mass(), b.point_mass()) {
        (Some(u), Some(v)) => {
            return Ok(exact(if u + v > y { 1.0 } else { 0.0 }));
        }
        (Some(u), None) => return Ok(exact(b.tail(y - u))),
        (None, Some(v)) => return Ok(exact(a.tail(y - v))),
        (None, None) => {}
    }
    if y <= 0.0 {
        return Ok(exact(1.0));
    }
    let fine = pair_tail_raw(a, b, theta, y, cells);
    let coarse = pair_tail_raw(a, b, theta, y, cells / 2);
    let value = (fine + (fine - coarse) / 3.0).clamp(0.0, 1.0);
    Ok(ConvolutionTail {
        value,
        error: (fine - coarse).abs(),
    })
}

fn exact(value: f64) -> ConvolutionTail {
    ConvolutionTail { value, error: 0.0 }
}

/// `P(Σ w_j Z_j > y)` for independent summands (`theta` couples the pair
/// when exactly two nondegenerate summands remain). Supports at most three
/// nondegenerate summands.
pub fn weighted_sum_tail(
    laws: &[MarginalModel],
    weights: &[f64],
    theta: f64,
    y: f64,
    cells: usize,
) -> Result<ConvolutionTail> {
    if laws.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: laws.len(),
            found: weights.len(),
        });
    }
    let mut shift = 0.0;
    let mut active: Vec<Scaled<'_>> = Vec::new();
    for (law, &w) in laws.iter().zip(weights) {
        if w == 0.0 {
            continue;
        }
        match law.point_mass() {
            Some(v) => shift += v * w,
            None => active.push(Scaled { law, weight: w }),
        }
    }
    let level = y - shift;
    match active.as_slice() {
        [] => Ok(exact(if shift > y { 1.0 } else { 0.0 })),
        [a] => Ok(exact(a.tail(level))),
        [a, b] => pair_sum_tail(a, b, theta, level, cells),
        [a, b, c] => {
            if theta != 0.0 {
                return Err(Error::Unsupported(
                    "dependent sums of three summands".into(),
                ));
            }
            if level <= 0.0 {
                return Ok(exact(1.0));
            }
            let inner_cells = (cells / 8).max(256);
            let table_points = 1024;
            let build = |n| {
                TabulatedTail::build(
                    |z| {
                        pair_sum_tail(a, b, 0.0, z, n)
                            .map(|r| r.value)
                            .unwrap_or(f64::NAN)
                    },
                    level * 1e-10,
                    level,
                    table_points,
                )
            };
            let ab = build(inner_cells);
            let ab_coarse = build(inner_cells / 2);
            let fine = pair_sum_tail(&ab, c, 0.0, level, cells)?;
            let coarse = pair_sum_tail(&ab_coarse, c, 0.0, level, cells / 2)?;
            Ok(ConvolutionTail {
                value: fine.value,
                error: (fine.value - coarse.value).abs() + fine.error,
            })
        }
        _ => Err(Error::Unsupported(
            "grid convolution of more than three summands".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXP1: MarginalModel = MarginalModel::Exponential { rate: 1.0 };
    const PARETO: MarginalModel = MarginalModel::Pareto {
        alpha: 2.0,
        scale: 1.0,
    };

    #[test]
    fn gamma_two_closed_form() {
        let r = pair_sum_tail(&EXP1, &EXP1, 0.0, 5.0, DEFAULT_CELLS).unwrap();
        let exact = 6.0 * (-5.0f64).exp();
        assert!((r.value - exact).abs() < 1e-9, "{} vs {exact}", r.value);
        assert!(r.error < 1e-6);
    }

    #[test]
    fn three_exponentials_match_erlang_three() {
        let laws = [EXP1; 3];
        let r = weighted_sum_tail(&laws, &[1.0, 1.0, 1.0], 0.0, 4.0, DEFAULT_CELLS).unwrap();
        let exact = (-4.0f64).exp() * (1.0 + 4.0 + 8.0);
        assert!((r.value - exact).abs() < 1e-5 * exact, "{} vs {exact}", r.value);
    }

    #[test]
    fn point_mass_shifts() {
        let det = MarginalModel::Deterministic { value: 3.0 };
        let r = pair_sum_tail(&PARETO, &det, 0.0, 10.0, DEFAULT_CELLS).unwrap();
        assert_eq!(r.value, 7.0f64.powi(-2));
        let r = weighted_sum_tail(&[det, det], &[0.5, 0.5], 0.0, 2.0, DEFAULT_CELLS).unwrap();
        assert_eq!(r.value, 1.0);
    }

    #[test]
    fn commutative_within_error() {
        let ln = MarginalModel::Lognormal { mu: 0.0, sigma: 1.0 };
        for y in [2.0, 20.0, 200.0] {
            let ab = pair_sum_tail(&PARETO, &ln, 0.0, y, DEFAULT_CELLS).unwrap();
            let ba = pair_sum_tail(&ln, &PARETO, 0.0, y, DEFAULT_CELLS).unwrap();
            assert!((ab.value - ba.value).abs() <= 1e-9 * ab.value + ab.error + ba.error);
        }
    }

    #[test]
    fn fgm_with_zero_theta_is_independence() {
        let a = pair_sum_tail(&PARETO, &EXP1, 0.0, 30.0, 4096).unwrap();
        let b = pair_sum_tail(&PARETO, &EXP1, 1e-300, 30.0, 4096).unwrap();
        assert!((a.value - b.value).abs() < 1e-15);
    }

    #[test]
    fn tabulated_tail_reproduces_power_law() {
        let t = TabulatedTail::build(|x| PARETO.tail(x), 1.0, 1e4, 200);
        for x in [1.5, 37.0, 999.0, 5e3] {
            assert!((t.tail(x) - PARETO.tail(x)).abs() < 1e-12 * PARETO.tail(x).max(1e-300) + 1e-15);
        }
    }
}
