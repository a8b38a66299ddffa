//! Renewal counting processes: interarrival laws, the renewal function
//! `λ(t) = E[N(t)]`, integration against `λ(ds)`, and arrival simulation.

use std::fmt;

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate_with_breaks;

/// Grid cells for the renewal-equation solver on `[0, t]`.
pub const RENEWAL_CELLS: usize = 4096;
const MAX_DOUBLINGS: usize = 64;

/// Strictly positive interarrival law with finite mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Interarrival {
    Exponential { rate: f64 },
    /// Sum of `k` independent exponentials with the given rate.
    Erlang { k: u32, rate: f64 },
    Uniform { a: f64, b: f64 },
}

impl Interarrival {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Interarrival::Exponential { rate } | Interarrival::Erlang { rate, .. }
                if !(rate > 0.0 && rate.is_finite()) =>
            {
                Err(invalid("rate", "must be finite and positive"))
            }
            Interarrival::Erlang { k: 0, .. } => Err(invalid("k", "must be at least 1")),
            Interarrival::Uniform { a, b } if !(a >= 0.0 && b > a && b.is_finite()) => {
                Err(invalid("uniform", "need 0 ≤ a < b < ∞"))
            }
            _ => Ok(()),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match *self {
            Interarrival::Exponential { rate } => -(-rate * t).exp_m1(),
            Interarrival::Erlang { k, rate } => {
                let x = rate * t;
                let mut term = 1.0;
                let mut sum = 1.0;
                for j in 1..k {
                    term *= x / j as f64;
                    sum += term;
                }
                (1.0 - (-x).exp() * sum).max(0.0)
            }
            Interarrival::Uniform { a, b } => ((t - a) / (b - a)).clamp(0.0, 1.0),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Interarrival::Exponential { rate } => 1.0 / rate,
            Interarrival::Erlang { k, rate } => k as f64 / rate,
            Interarrival::Uniform { a, b } => 0.5 * (a + b),
        }
    }

    /// `E[e^{-sθ}]` for `s ≥ 0`.
    pub fn laplace(&self, s: f64) -> f64 {
        match *self {
            Interarrival::Exponential { rate } => rate / (rate + s),
            Interarrival::Erlang { k, rate } => (rate / (rate + s)).powi(k as i32),
            Interarrival::Uniform { a, b } => {
                if s == 0.0 {
                    1.0
                } else {
                    ((-s * a).exp() - (-s * b).exp()) / (s * (b - a))
                }
            }
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Interarrival::Exponential { rate } => {
                let u: f64 = rng.sample(Open01);
                -u.ln() / rate
            }
            Interarrival::Erlang { k, rate } => {
                let mut prod = 1.0f64;
                for _ in 0..k {
                    let u: f64 = rng.sample(Open01);
                    prod *= u;
                }
                -prod.ln() / rate
            }
            Interarrival::Uniform { a, b } => {
                let u: f64 = rng.sample(Open01);
                a + (b - a) * u
            }
        }
    }

    /// Infimum of the support; `λ(t) > 0` exactly when `t` exceeds it.
    pub fn support_start(&self) -> f64 {
        match *self {
            Interarrival::Uniform { a, .. } => a,
            _ => 0.0,
        }
    }
}

/// The renewal counting process, specified by its interarrival law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRenewalSpec")]
pub struct RenewalSpec {
    pub interarrival: Interarrival,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRenewalSpec {
    interarrival: Interarrival,
}

impl TryFrom<RawRenewalSpec> for RenewalSpec {
    type Error = Error;

    fn try_from(raw: RawRenewalSpec) -> Result<Self> {
        RenewalSpec::new(raw.interarrival)
    }
}

impl RenewalSpec {
    pub fn new(interarrival: Interarrival) -> Result<Self> {
        interarrival.validate()?;
        Ok(RenewalSpec { interarrival })
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        Self::new(Interarrival::Exponential { rate })
    }

    /// Rate of a Poisson process, if this is one.
    pub fn poisson_rate(&self) -> Option<f64> {
        match self.interarrival {
            Interarrival::Exponential { rate } => Some(rate),
            _ => None,
        }
    }

    /// Whether `t ∈ Λ = {t : λ(t) > 0}`.
    pub fn in_lambda(&self, t: f64) -> bool {
        t > self.interarrival.support_start()
    }
}

/// A finite horizon or the infinite one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

impl Horizon {
    pub fn is_finite(&self) -> bool {
        matches!(self, Horizon::Finite(_))
    }

    /// Sort key: finite horizons in order, infinity last.
    pub fn as_f64(&self) -> f64 {
        match *self {
            Horizon::Finite(t) => t,
            Horizon::Infinite => f64::INFINITY,
        }
    }
}

impl fmt::Display for Horizon {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Horizon::Finite(t) => write!(f, "{t}"),
            Horizon::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Horizon {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match *self {
            Horizon::Finite(t) => s.serialize_f64(t),
            Horizon::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Horizon {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(t) if t >= 0.0 && t.is_finite() => Ok(Horizon::Finite(t)),
            Raw::Num(t) => Err(serde::de::Error::custom(format!(
                "horizon must be finite and nonnegative, got {t}"
            ))),
            Raw::Text(s) if matches!(s.as_str(), "inf" | "infinity" | "∞") => Ok(Horizon::Infinite),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "horizon must be a number or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Renewal function tabulated on a uniform grid over `[0, t_max]`.
#[derive(Debug, Clone)]
pub struct RenewalTable {
    step: f64,
    values: Vec<f64>,
}

impl RenewalTable {
    /// Solves `m(t) = F(t) + ∫₀ᵗ m(t - s) dF(s)` with trapezoid Stieltjes
    /// weights on `cells` cells.
    pub fn solve(spec: &RenewalSpec, t_max: f64, cells: usize) -> Self {
        let h = t_max / cells as f64;
        let f = &spec.interarrival;
        let cdf: Vec<f64> = (0..=cells).map(|k| f.cdf(k as f64 * h)).collect();
        let df: Vec<f64> = cdf.windows(2).map(|w| w[1] - w[0]).collect();
        let mut m = vec![0.0; cells + 1];
        let half_first = 0.5 * df[0];
        for n in 1..=cells {
            let mut acc = cdf[n] + half_first * m[n - 1];
            for k in 2..=n {
                acc += 0.5 * (m[n - k] + m[n - k + 1]) * df[k - 1];
            }
            m[n] = acc / (1.0 - half_first);
        }
        RenewalTable { step: h, values: m }
    }

    pub fn t_max(&self) -> f64 {
        self.step * (self.values.len() - 1) as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Linear interpolation between grid nodes.
    pub fn eval(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let pos = t / self.step;
        let last = self.values.len() - 1;
        if pos >= last as f64 {
            return self.values[last];
        }
        let i = pos.floor() as usize;
        let frac = pos - i as f64;
        self.values[i] + frac * (self.values[i + 1] - self.values[i])
    }

    /// Trapezoid Stieltjes sum `Σ ½(g_k + g_{k+1}) (m_{k+1} - m_k)`.
    fn stieltjes<G: Fn(f64) -> f64>(&self, g: &G) -> f64 {
        self.stieltjes_from(g, 0.0)
    }

    /// The same sum restricted to the cells lying in `[a, t_max]`.
    fn stieltjes_from<G: Fn(f64) -> f64>(&self, g: &G, a: f64) -> f64 {
        let first = ((a / self.step).round() as usize).min(self.values.len() - 1);
        let mut acc = 0.0;
        let mut g_prev = g(first as f64 * self.step);
        for k in first + 1..self.values.len() {
            let gk = g(k as f64 * self.step);
            acc += 0.5 * (g_prev + gk) * (self.values[k] - self.values[k - 1]);
            g_prev = gk;
        }
        acc
    }
}

/// `λ(t) = E[N(t)]`.
pub fn renewal_function(spec: &RenewalSpec, t: f64) -> Result<f64> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid("t", format!("must be finite and nonnegative, got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if let Some(rate) = spec.poisson_rate() {
        return Ok(rate * t);
    }
    let coarse = RenewalTable::solve(spec, t, RENEWAL_CELLS).eval(t);
    let fine = RenewalTable::solve(spec, t, 2 * RENEWAL_CELLS).eval(t);
    Ok(fine + (fine - coarse) / 3.0)
}

/// Settings for [`integrate_against_renewal_with`].
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalIntegration {
    /// Relative tolerance.
    pub tol: f64,
    /// Smallest truncation point tried for the infinite horizon.
    pub min_truncation: f64,
    /// Points where the integrand may jump or kink.
    pub breakpoints: Vec<f64>,
}

impl RenewalIntegration {
    pub fn new(tol: f64) -> Self {
        RenewalIntegration {
            tol,
            min_truncation: 1.0,
            breakpoints: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenewalIntegral {
    pub value: f64,
    /// Relative error bound.
    pub rel_error: f64,
    /// Truncation point `T*` used for the infinite horizon.
    pub truncation: Option<f64>,
}

/// `∫₀^upper g(s) λ(ds)` for a bounded nonnegative integrand.
pub fn integrate_against_renewal<G: Fn(f64) -> f64>(
    g: G,
    spec: &RenewalSpec,
    upper: Horizon,
    tol: f64,
) -> Result<RenewalIntegral> {
    integrate_against_renewal_with(g, spec, upper, &RenewalIntegration::new(tol))
}

pub fn integrate_against_renewal_with<G: Fn(f64) -> f64>(
    g: G,
    spec: &RenewalSpec,
    upper: Horizon,
    options: &RenewalIntegration,
) -> Result<RenewalIntegral> {
    if !(options.tol > 0.0) {
        return Err(invalid("tol", "must be positive"));
    }
    match upper {
        Horizon::Finite(t) => {
            if !(t >= 0.0) || !t.is_finite() {
                return Err(invalid("t", "must be finite and nonnegative"));
            }
            let (value, rel_error) = finite_integral(&g, spec, 0.0, t, options)?;
            Ok(RenewalIntegral {
                value,
                rel_error,
                truncation: None,
            })
        }
        Horizon::Infinite => {
            let mut t = options.min_truncation.max(f64::MIN_POSITIVE);
            let (mut acc, rel) = finite_integral(&g, spec, 0.0, t, options)?;
            // absolute error, so that loose increments weigh by their size
            let mut abs_err = rel * acc;
            let mut prev_ratio = f64::INFINITY;
            let mut rising = 0;
            for _ in 0..MAX_DOUBLINGS {
                let (inc, e) = increment(&g, spec, t, options, acc)?;
                acc += inc;
                abs_err += e * inc;
                t *= 2.0;
                if inc <= options.tol * acc {
                    // one more doubling as a sanity re-check
                    let (check, e) = increment(&g, spec, t, options, acc)?;
                    acc += check;
                    abs_err += e * check;
                    t *= 2.0;
                    if check > options.tol * acc {
                        return Err(Error::NonConvergence {
                            achieved: check / acc,
                        });
                    }
                    let rel_error = if acc > 0.0 { abs_err / acc } else { 0.0 };
                    return Ok(RenewalIntegral {
                        value: acc,
                        rel_error: rel_error + options.tol,
                        truncation: Some(t),
                    });
                }
                let ratio = inc / acc.max(f64::MIN_POSITIVE);
                rising = if ratio >= prev_ratio * (1.0 - 1e-3) { rising + 1 } else { 0 };
                if rising >= 4 {
                    return Err(Error::NonConvergence { achieved: ratio });
                }
                prev_ratio = ratio;
            }
            Err(Error::NonConvergence {
                achieved: prev_ratio,
            })
        }
    }
}

/// `∫_{(t, 2t]} g dλ`.
fn increment<G: Fn(f64) -> f64>(
    g: &G,
    spec: &RenewalSpec,
    t: f64,
    options: &RenewalIntegration,
    acc: f64,
) -> Result<(f64, f64)> {
    match spec.poisson_rate() {
        Some(_) => {
            // the increment only needs accuracy relative to the running total
            finite_integral_abs(g, spec, t, 2.0 * t, options, options.tol * 1e-3 * acc)
        }
        None => {
            let coarse = RenewalTable::solve(spec, 2.0 * t, RENEWAL_CELLS).stieltjes_from(g, t);
            let fine = RenewalTable::solve(spec, 2.0 * t, 2 * RENEWAL_CELLS).stieltjes_from(g, t);
            let value = (fine + (fine - coarse) / 3.0).max(0.0);
            let err = if value > 0.0 { ((fine - coarse) / 3.0 / value).abs() } else { 0.0 };
            Ok((value, err))
        }
    }
}

fn finite_integral<G: Fn(f64) -> f64>(
    g: &G,
    spec: &RenewalSpec,
    a: f64,
    b: f64,
    options: &RenewalIntegration,
) -> Result<(f64, f64)> {
    finite_integral_abs(g, spec, a, b, options, 0.0)
}

fn finite_integral_abs<G: Fn(f64) -> f64>(
    g: &G,
    spec: &RenewalSpec,
    a: f64,
    b: f64,
    options: &RenewalIntegration,
    abs_tol: f64,
) -> Result<(f64, f64)> {
    if b <= a {
        return Ok((0.0, 0.0));
    }
    match spec.poisson_rate() {
        Some(rate) => {
            let mut breaks = vec![a];
            let mut inner: Vec<f64> = options
                .breakpoints
                .iter()
                .copied()
                .filter(|&p| p > a && p < b)
                .collect();
            inner.sort_by(f64::total_cmp);
            breaks.extend(inner);
            breaks.push(b);
            let q = integrate_with_breaks(g, &breaks, options.tol, abs_tol / rate)?;
            Ok((rate * q.value, q.rel_error()))
        }
        None => {
            debug_assert_eq!(a, 0.0);
            let coarse = RenewalTable::solve(spec, b, RENEWAL_CELLS).stieltjes(g);
            let fine = RenewalTable::solve(spec, b, 2 * RENEWAL_CELLS).stieltjes(g);
            let value = fine + (fine - coarse) / 3.0;
            let err = if value != 0.0 {
                ((fine - coarse) / 3.0 / value).abs()
            } else {
                0.0
            };
            Ok((value, err))
        }
    }
}

/// Arrival epochs in `(0, t_max]`.
pub fn simulate_arrivals<R: Rng + ?Sized>(spec: &RenewalSpec, t_max: f64, rng: &mut R) -> Vec<f64> {
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += spec.interarrival.sample(rng);
        if t > t_max {
            return out;
        }
        out.push(t);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamFactory};

    fn erlang22() -> RenewalSpec {
        RenewalSpec::new(Interarrival::Erlang { k: 2, rate: 2.0 }).unwrap()
    }

    /// Renewal function of an Erlang(2, β) process.
    fn erlang2_closed_form(beta: f64, t: f64) -> f64 {
        beta * t / 2.0 - 0.25 + 0.25 * (-2.0 * beta * t).exp()
    }

    #[test]
    fn poisson_renewal_function() {
        assert_eq!(renewal_function(&RenewalSpec::poisson(1.0).unwrap(), 5.0).unwrap(), 5.0);
        assert_eq!(renewal_function(&erlang22(), 0.0).unwrap(), 0.0);
        assert!(renewal_function(&erlang22(), -1.0).is_err());
    }

    #[test]
    fn erlang_renewal_function_matches_closed_form() {
        let v = renewal_function(&erlang22(), 1.0).unwrap();
        assert!((v - 0.754579).abs() < 1e-4);
        assert!((v - erlang2_closed_form(2.0, 1.0)).abs() < 1e-6, "{v}");
        for t in [0.1, 0.5, 2.0, 5.0] {
            let v = renewal_function(&erlang22(), t).unwrap();
            assert!((v - erlang2_closed_form(2.0, t)).abs() < 1e-4);
        }
    }

    #[test]
    fn deterministic_interarrival_rejected() {
        let r: std::result::Result<RenewalSpec, _> =
            serde_json::from_str(r#"{"interarrival": {"type": "deterministic", "value": 1.0}}"#);
        assert!(r.is_err());
        assert!(RenewalSpec::new(Interarrival::Uniform { a: 1.0, b: 1.0 }).is_err());
        assert!(RenewalSpec::new(Interarrival::Exponential { rate: 0.0 }).is_err());
    }

    #[test]
    fn renewal_function_properties() {
        let spec = RenewalSpec::new(Interarrival::Uniform { a: 0.5, b: 1.5 }).unwrap();
        let table = RenewalTable::solve(&spec, 20.0, RENEWAL_CELLS);
        let grid: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
        for w in grid.windows(2) {
            assert!(table.eval(w[1]) >= table.eval(w[0]));
        }
        for &s in &grid {
            for &t in &grid {
                if s + t <= 20.0 {
                    assert!(table.eval(s + t) <= table.eval(s) + table.eval(t) + 1.0 + 1e-9);
                }
            }
        }
        // elementary renewal theorem: λ(t)/t → 1/E[θ]
        assert!((table.eval(20.0) / 20.0 - 1.0).abs() < 0.05);
    }

    #[test]
    fn integrals_against_poisson() {
        let r = integrate_against_renewal(|_| 1.0, &RenewalSpec::poisson(2.0).unwrap(), Horizon::Finite(3.0), 1e-10)
            .unwrap();
        assert!((r.value - 6.0).abs() < 1e-12);
        let r = integrate_against_renewal(
            |s| (-0.1 * s).exp(),
            &RenewalSpec::poisson(1.0).unwrap(),
            Horizon::Infinite,
            1e-8,
        )
        .unwrap();
        assert!((r.value - 10.0).abs() < 1e-6 * 10.0, "{r:?}");
        assert!(r.truncation.is_some());
    }

    #[test]
    fn unit_integrand_reproduces_renewal_function() {
        let spec = erlang22();
        for t in [0.5, 1.0, 4.0] {
            let r = integrate_against_renewal(|_| 1.0, &spec, Horizon::Finite(t), 1e-6).unwrap();
            let m = renewal_function(&spec, t).unwrap();
            assert!((r.value - m).abs() < 1e-6, "{} vs {m}", r.value);
        }
    }

    #[test]
    fn divergent_truncation_is_reported() {
        let r = integrate_against_renewal(|_| 1.0, &RenewalSpec::poisson(1.0).unwrap(), Horizon::Infinite, 1e-6);
        assert!(matches!(r, Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn erlang_discounted_count_matches_mc() {
        let spec = erlang22();
        let quad = integrate_against_renewal(|s| (-0.1 * s).exp(), &spec, Horizon::Finite(10.0), 1e-8)
            .unwrap()
            .value;
        let factory = StreamFactory::new(17);
        let n = 1_000_000;
        let (mut sum, mut sum2) = (0.0, 0.0);
        for i in 0..n {
            let mut rng = factory.stream(i);
            let v: f64 = simulate_arrivals(&spec, 10.0, &mut rng)
                .iter()
                .map(|t| (-0.1 * t).exp())
                .sum();
            sum += v;
            sum2 += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sum2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((quad - mean).abs() < 1e-3, "quad {quad} vs mc {mean} ± {se}");
    }

    #[test]
    fn erlang_renewal_function_matches_simulation() {
        let spec = erlang22();
        let factory = StreamFactory::new(3);
        let n = 200_000;
        let counts: Vec<f64> = (0..n)
            .map(|i| simulate_arrivals(&spec, 1.0, &mut factory.stream(i)).len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - erlang2_closed_form(2.0, 1.0)).abs() < 3.0 * se);
    }

    #[test]
    fn arrival_rates() {
        for spec in [
            RenewalSpec::poisson(1.0).unwrap(),
            RenewalSpec::new(Interarrival::Uniform { a: 0.5, b: 1.5 }).unwrap(),
        ] {
            let arrivals = simulate_arrivals(&spec, 1e4, &mut stream(5, 0));
            assert!(arrivals.windows(2).all(|w| w[1] > w[0]));
            assert!((arrivals.len() as f64 / 1e4 - 1.0).abs() < 0.02);
        }
    }

    #[test]
    fn laplace_transforms() {
        let e = Interarrival::Exponential { rate: 1.0 };
        assert!((e.laplace(0.1) - 1.0 / 1.1).abs() < 1e-15);
        let u = Interarrival::Uniform { a: 0.0, b: 2.0 };
        assert!((u.laplace(1.0) - (1.0 - (-2.0f64).exp()) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn horizon_serde() {
        let h: Vec<Horizon> = serde_json::from_str(r#"[1.5, "inf"]"#).unwrap();
        assert_eq!(h, vec![Horizon::Finite(1.5), Horizon::Infinite]);
        assert_eq!(serde_json::to_string(&h).unwrap(), r#"[1.5,"inf"]"#);
        assert!(serde_json::from_str::<Horizon>(r#""soon""#).is_err());
    }
}
