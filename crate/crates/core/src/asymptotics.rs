//! Asymptotic approximations of the entrance probabilities.
//!
//! For a large level `x` the probability that the discounted aggregate
//! enters `x·A` is approximated by single-big-jump formulas: each main
//! claim arriving at `s` contributes `P(X ∈ x e^{rs} A)`, each delayed claim
//! settled at `s + y` contributes `P(Y ∈ x e^{r(s+y)} A)`, integrated
//! against the renewal measure and the delay law. When the claim laws are
//! multivariate regularly varying the integrals reduce to Laplace-type
//! factors.

use std::cell::Cell;

use rand::Rng;
use serde::Serialize;

use crate::claims::{ClaimVectorModel, EvalMethod, FallbackOptions, MrvSpec};
use crate::convolution::{Survival, TabulatedTail};
use crate::error::{invalid, Error, Result};
use crate::quadrature::integrate_with_breaks;
use crate::rare_set::RareSet;
use crate::renewal::{integrate_against_renewal_with, Horizon, RenewalIntegration};
use crate::rng::StreamFactory;
use crate::scenario::{DelayLaw, Regime, Scenario};

/// Default relative tolerance of the nested quadrature.
pub const DEFAULT_TOL: f64 = 1e-6;
/// Table nodes per unit of `ln y` for tabulated entrance probabilities.
const NODES_PER_E_FOLD: f64 = 24.0;
const MAX_TABLE_NODES: usize = 4096;
/// Multiple of the initial truncation horizon covered by the tables.
const TABLE_HORIZON_FACTOR: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Formula {
    #[serde(rename = "thm31i")]
    FiniteEquivalent,
    #[serde(rename = "thm31ii")]
    FiniteNegligible,
    #[serde(rename = "cor31i")]
    MrvFiniteEquivalent,
    #[serde(rename = "cor31ii")]
    MrvFiniteNegligible,
    #[serde(rename = "thm41i")]
    InfiniteEquivalent,
    #[serde(rename = "thm41ii")]
    InfiniteNegligible,
    #[serde(rename = "cor41i")]
    MrvInfiniteEquivalent,
    #[serde(rename = "cor41ii")]
    MrvInfiniteNegligible,
}

impl Formula {
    pub fn tag(&self) -> &'static str {
        match self {
            Formula::FiniteEquivalent => "thm31i",
            Formula::FiniteNegligible => "thm31ii",
            Formula::MrvFiniteEquivalent => "cor31i",
            Formula::MrvFiniteNegligible => "cor31ii",
            Formula::InfiniteEquivalent => "thm41i",
            Formula::InfiniteNegligible => "thm41ii",
            Formula::MrvInfiniteEquivalent => "cor41i",
            Formula::MrvInfiniteNegligible => "cor41ii",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AsymptoticValue {
    pub value: f64,
    pub formula: Formula,
    /// Relative error bound of the numerical evaluation.
    pub achieved_tol: f64,
    pub main_term: f64,
    pub delayed_term: f64,
}

impl AsymptoticValue {
    fn new(formula: Formula, main: (f64, f64), delayed: (f64, f64)) -> Self {
        let value = main.0 + delayed.0;
        let abs_err = main.0 * main.1 + delayed.0 * delayed.1;
        AsymptoticValue {
            value,
            formula,
            achieved_tol: if value > 0.0 { abs_err / value } else { 0.0 },
            main_term: main.0,
            delayed_term: delayed.0,
        }
    }
}

/// `y ↦ P(Z ∈ y·A)` prepared for repeated evaluation over a range of `y`.
#[derive(Debug, Clone)]
pub struct GaugeTail {
    model: ClaimVectorModel,
    set: RareSet,
    kind: TailKind,
    method: EvalMethod,
    rel_error: f64,
}

#[derive(Debug, Clone)]
enum TailKind {
    Direct,
    Table(TabulatedTail),
    /// Sorted sample of gauges.
    Empirical(Vec<f64>),
}

impl GaugeTail {
    /// Prepares the evaluator for `y ∈ [lo, hi]`. Closed forms are used
    /// directly; grid convolutions are tabulated in `ln y`; the Monte Carlo
    /// fallback uses one shared gauge sample for every level.
    pub fn new(model: &ClaimVectorModel, set: &RareSet, lo: f64, hi: f64) -> Result<Self> {
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(invalid("range", format!("need 0 < lo ≤ hi < ∞, got [{lo}, {hi}]")));
        }
        let probe = model.exact_entrance_prob(lo, set)?;
        let (kind, rel_error) = match probe.method {
            EvalMethod::Product | EvalMethod::Copula => (TailKind::Direct, 0.0),
            EvalMethod::Convolution => {
                let hi = if hi > lo { hi } else { lo * 1.01 };
                let nodes = (((hi / lo).ln() * NODES_PER_E_FOLD).ceil() as usize).clamp(64, MAX_TABLE_NODES);
                let mut worst = 0.0f64;
                let mut failure = None;
                let table = TabulatedTail::build(
                    |y| match model.exact_entrance_prob(y, set) {
                        Ok(p) => {
                            if p.value > 0.0 {
                                worst = worst.max(p.error / p.value);
                            }
                            p.value
                        }
                        Err(e) => {
                            failure.get_or_insert(e);
                            f64::NAN
                        }
                    },
                    lo,
                    hi,
                    nodes,
                );
                if let Some(e) = failure {
                    return Err(e);
                }
                (TailKind::Table(table), worst)
            }
            EvalMethod::McFallback => {
                let opts = FallbackOptions::default();
                let factory = StreamFactory::new(opts.seed);
                let mut z = vec![0.0; model.dim()];
                let mut gauges: Vec<f64> = (0..opts.n)
                    .map(|i| {
                        model.sample_into(&mut factory.stream(i), &mut z);
                        set.gauge_unchecked(&z)
                    })
                    .collect();
                gauges.sort_unstable_by(f64::total_cmp);
                (TailKind::Empirical(gauges), probe.error / probe.value.max(f64::MIN_POSITIVE))
            }
        };
        Ok(GaugeTail {
            model: model.clone(),
            set: set.clone(),
            kind,
            method: probe.method,
            rel_error,
        })
    }

    pub fn eval(&self, y: f64) -> f64 {
        match &self.kind {
            TailKind::Direct => self
                .model
                .exact_entrance_prob(y, &self.set)
                .map(|p| p.value)
                .unwrap_or(f64::NAN),
            TailKind::Table(t) => t.tail(y),
            TailKind::Empirical(g) => {
                let above = g.len() - g.partition_point(|&v| v <= y);
                above as f64 / g.len() as f64
            }
        }
    }

    pub fn method(&self) -> EvalMethod {
        self.method
    }

    /// Relative error of the underlying evaluator.
    pub fn rel_error(&self) -> f64 {
        self.rel_error
    }
}

/// Evaluates every asymptotic formula for one scenario, sharing the
/// prepared entrance-probability evaluators across levels and horizons.
#[derive(Debug, Clone)]
pub struct AsymptoticEvaluator {
    scenario: Scenario,
    tol: f64,
    main: GaugeTail,
    delayed: Option<GaugeTail>,
    x_range: (f64, f64),
}

impl AsymptoticEvaluator {
    /// Prepares evaluation for levels in `[x_min, x_max]` and horizons up
    /// to `horizon`.
    pub fn new(scenario: &Scenario, x_min: f64, x_max: f64, horizon: Horizon, tol: f64) -> Result<Self> {
        if !(x_min > 0.0 && x_max >= x_min) {
            return Err(invalid("x", format!("levels must be positive, got [{x_min}, {x_max}]")));
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(invalid("tol", "must lie in (0, 1)"));
        }
        let r = scenario.rate;
        let span = match horizon {
            Horizon::Finite(t) => r * t,
            Horizon::Infinite => {
                if !(r > 0.0) {
                    return Err(invalid("rate", "the infinite horizon needs a positive discount rate"));
                }
                r * TABLE_HORIZON_FACTOR * scenario.truncation_horizon(tol)?
            }
        };
        let hi = x_max * span.min(700.0).exp();
        let main = GaugeTail::new(&scenario.main_claims, &scenario.rare_set, x_min, hi)?;
        let delayed = if scenario.count.is_zero() {
            None
        } else {
            Some(GaugeTail::new(&scenario.delayed_claims, &scenario.rare_set, x_min, hi)?)
        };
        Ok(AsymptoticEvaluator {
            scenario: scenario.clone(),
            tol,
            main,
            delayed,
            x_range: (x_min, x_max),
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    fn check_x(&self, x: f64) -> Result<()> {
        let (lo, hi) = self.x_range;
        if x < lo * (1.0 - 1e-12) || x > hi * (1.0 + 1e-12) {
            return Err(invalid("x", format!("{x} lies outside the prepared range [{lo}, {hi}]")));
        }
        Ok(())
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !self.scenario.renewal.in_lambda(t) {
            return Err(Error::OutsideLambda { t });
        }
        Ok(())
    }

    fn options(&self, breakpoints: Vec<f64>) -> Result<RenewalIntegration> {
        let mut o = RenewalIntegration::new(0.5 * self.tol);
        o.breakpoints = breakpoints;
        if self.scenario.rate > 0.0 {
            o.min_truncation = self.scenario.truncation_horizon(self.tol)?;
        }
        Ok(o)
    }

    /// `∫ P(X ∈ x e^{rs} A) λ(ds)` over `[0, upper]`, with its relative error.
    fn main_integral(&self, x: f64, upper: Horizon) -> Result<(f64, f64)> {
        let r = self.scenario.rate;
        let main = &self.main;
        let res = integrate_against_renewal_with(
            |s| main.eval(x * (r * s).exp()),
            &self.scenario.renewal,
            upper,
            &self.options(vec![])?,
        )?;
        Ok((res.value, res.rel_error + main.rel_error()))
    }

    /// `E[M] ∫∫ P(Y ∈ x e^{r(s+y)} A) H(dy) λ(ds)` over `s + y ≤ upper`.
    fn delayed_integral(&self, x: f64, upper: Horizon) -> Result<(f64, f64)> {
        let Some(tail) = &self.delayed else {
            return Ok((0.0, 0.0));
        };
        let scn = &self.scenario;
        let r = scn.rate;
        let inner_tol = 0.5 * self.tol;
        let failed = Cell::new(None::<Error>);
        let g = |s: f64| {
            let remaining = match upper {
                Horizon::Finite(t) => t - s,
                Horizon::Infinite => f64::INFINITY,
            };
            match delay_integral(&scn.delay, remaining, inner_tol, |y| tail.eval(x * (r * (s + y)).exp())) {
                Ok(v) => v,
                Err(e) => {
                    failed.set(Some(e));
                    0.0
                }
            }
        };
        let breaks = match upper {
            Horizon::Finite(t) => scn.delay.breakpoints().into_iter().map(|b| t - b).collect(),
            Horizon::Infinite => vec![],
        };
        let res = integrate_against_renewal_with(g, &scn.renewal, upper, &self.options(breaks)?)?;
        if let Some(e) = failed.take() {
            return Err(e);
        }
        let m = scn.count.mean();
        Ok((m * res.value, res.rel_error + inner_tol + tail.rel_error()))
    }

    /// Two-term (`Regime::Equivalent`) or one-term approximation of
    /// `P(D_r(t) ∈ xA)` according to the scenario's regime.
    pub fn finite(&self, x: f64, t: f64) -> Result<AsymptoticValue> {
        match self.scenario.regime {
            Regime::Equivalent => self.finite_equivalent(x, t),
            Regime::Negligible => self.finite_negligible(x, t),
        }
    }

    pub fn finite_equivalent(&self, x: f64, t: f64) -> Result<AsymptoticValue> {
        self.check_x(x)?;
        self.check_t(t)?;
        let main = self.main_integral(x, Horizon::Finite(t))?;
        let delayed = self.delayed_integral(x, Horizon::Finite(t))?;
        Ok(AsymptoticValue::new(Formula::FiniteEquivalent, main, delayed))
    }

    pub fn finite_negligible(&self, x: f64, t: f64) -> Result<AsymptoticValue> {
        self.check_x(x)?;
        self.check_t(t)?;
        let main = self.main_integral(x, Horizon::Finite(t))?;
        Ok(AsymptoticValue::new(Formula::FiniteNegligible, main, (0.0, 0.0)))
    }

    pub fn infinite(&self, x: f64) -> Result<AsymptoticValue> {
        match self.scenario.regime {
            Regime::Equivalent => self.infinite_equivalent(x),
            Regime::Negligible => self.infinite_negligible(x),
        }
    }

    pub fn infinite_equivalent(&self, x: f64) -> Result<AsymptoticValue> {
        self.check_x(x)?;
        self.require_discount()?;
        let main = self.main_integral(x, Horizon::Infinite)?;
        let delayed = self.delayed_integral(x, Horizon::Infinite)?;
        Ok(AsymptoticValue::new(Formula::InfiniteEquivalent, main, delayed))
    }

    pub fn infinite_negligible(&self, x: f64) -> Result<AsymptoticValue> {
        self.check_x(x)?;
        self.require_discount()?;
        let main = self.main_integral(x, Horizon::Infinite)?;
        Ok(AsymptoticValue::new(Formula::InfiniteNegligible, main, (0.0, 0.0)))
    }

    /// Approximation for either kind of horizon.
    pub fn at(&self, x: f64, horizon: Horizon) -> Result<AsymptoticValue> {
        match horizon {
            Horizon::Finite(t) => self.finite(x, t),
            Horizon::Infinite => self.infinite(x),
        }
    }

    fn require_discount(&self) -> Result<()> {
        if self.scenario.rate > 0.0 {
            Ok(())
        } else {
            Err(invalid("rate", "the infinite horizon needs a positive discount rate"))
        }
    }
}

/// `∫_{[0, upper]} f(y) H(dy)` for the delay law `H`.
fn delay_integral<F: Fn(f64) -> f64>(delay: &DelayLaw, upper: f64, tol: f64, f: F) -> Result<f64> {
    if upper < 0.0 {
        return Ok(0.0);
    }
    match *delay {
        DelayLaw::Deterministic { value } => Ok(if value <= upper { f(value) } else { 0.0 }),
        DelayLaw::Uniform { a, b } => {
            let top = b.min(upper);
            if top <= a {
                return Ok(0.0);
            }
            let q = integrate_with_breaks(&f, &[a, top], tol, 0.0)?;
            Ok(q.value / (b - a))
        }
        DelayLaw::Exponential { rate } => {
            // beyond this point the remaining delay mass is below tol·1e-3
            let cap = ((1e3 / tol).ln() / rate).min(upper);
            if cap <= 0.0 {
                return Ok(0.0);
            }
            let q = integrate_with_breaks(|y| f(y) * rate * (-rate * y).exp(), &[0.0, cap], tol, 0.0)?;
            Ok(q.value)
        }
    }
}

/// Two-term approximation of `P(D_r(t) ∈ xA)` (both claim streams
/// contribute).
pub fn finite_horizon_equivalent(scn: &Scenario, x: f64, t: f64, tol: f64) -> Result<AsymptoticValue> {
    AsymptoticEvaluator::new(scn, x, x, Horizon::Finite(t), tol)?.finite_equivalent(x, t)
}

/// One-term approximation of `P(D_r(t) ∈ xA)` (delayed claims negligible).
pub fn finite_horizon_negligible(scn: &Scenario, x: f64, t: f64, tol: f64) -> Result<AsymptoticValue> {
    AsymptoticEvaluator::new(scn, x, x, Horizon::Finite(t), tol)?.finite_negligible(x, t)
}

pub fn infinite_horizon_equivalent(scn: &Scenario, x: f64, tol: f64) -> Result<AsymptoticValue> {
    AsymptoticEvaluator::new(scn, x, x, Horizon::Infinite, tol)?.infinite_equivalent(x)
}

pub fn infinite_horizon_negligible(scn: &Scenario, x: f64, tol: f64) -> Result<AsymptoticValue> {
    AsymptoticEvaluator::new(scn, x, x, Horizon::Infinite, tol)?.infinite_negligible(x)
}

/// `∫_{[0,u]} e^{-c y} H(dy)`.
fn discounted_delay_mass(delay: &DelayLaw, c: f64, u: f64) -> f64 {
    if u < 0.0 {
        return 0.0;
    }
    match *delay {
        DelayLaw::Exponential { rate } => rate * -(-(rate + c) * u).exp_m1() / (rate + c),
        DelayLaw::Uniform { a, b } => {
            let top = b.min(u);
            if top <= a {
                0.0
            } else if c == 0.0 {
                (top - a) / (b - a)
            } else {
                ((-c * a).exp() - (-c * top).exp()) / (c * (b - a))
            }
        }
        DelayLaw::Deterministic { value } => {
            if value <= u {
                (-c * value).exp()
            } else {
                0.0
            }
        }
    }
}

fn mrv_delayed_spec<'a>(scn: &Scenario, mrv_g: Option<&'a MrvSpec>) -> Result<Option<&'a MrvSpec>> {
    match (scn.regime, scn.count.is_zero()) {
        (Regime::Equivalent, false) => mrv_g
            .map(Some)
            .ok_or_else(|| invalid("mrv_g", "the equivalent regime needs MRV data for the delayed claims")),
        _ => Ok(None),
    }
}

/// Regular-variation form of the finite-horizon approximation:
/// `μ(A)B̄(x)∫₀ᵗ e^{-αrs} λ(ds)` plus, in the equivalent regime,
/// `ν(A)Q̄(x)E[M]∫₀ᵗ∫₀^{t-s} e^{-αr(s+y)} H(dy) λ(ds)`.
pub fn mrv_finite(
    scn: &Scenario,
    x: f64,
    t: f64,
    mrv_f: &MrvSpec,
    mrv_g: Option<&MrvSpec>,
    tol: f64,
) -> Result<AsymptoticValue> {
    if !(x > 0.0) {
        return Err(invalid("x", "must be positive"));
    }
    if !scn.renewal.in_lambda(t) {
        return Err(Error::OutsideLambda { t });
    }
    let r = scn.rate;
    let mut o = RenewalIntegration::new(tol);
    let c = mrv_f.alpha * r;
    let main_int = integrate_against_renewal_with(|s| (-c * s).exp(), &scn.renewal, Horizon::Finite(t), &o)?;
    let main = mrv_f.measure(&scn.rare_set)? * mrv_f.reference_tail.tail(x) * main_int.value;
    let delayed_spec = mrv_delayed_spec(scn, mrv_g)?;
    let (formula, delayed) = match delayed_spec {
        None => (Formula::MrvFiniteNegligible, (0.0, 0.0)),
        Some(g) => {
            let c = g.alpha * r;
            o.breakpoints = scn.delay.breakpoints().into_iter().map(|b| t - b).collect();
            let int = integrate_against_renewal_with(
                |s| (-c * s).exp() * discounted_delay_mass(&scn.delay, c, t - s),
                &scn.renewal,
                Horizon::Finite(t),
                &o,
            )?;
            let v = g.measure(&scn.rare_set)? * g.reference_tail.tail(x) * scn.count.mean() * int.value;
            (Formula::MrvFiniteEquivalent, (v, int.rel_error))
        }
    };
    Ok(AsymptoticValue::new(formula, (main, main_int.rel_error), delayed))
}

/// Closed-form infinite-horizon approximation under regular variation,
/// `μ(A)B̄(x)·L/(1-L)` with `L = E[e^{-αrθ}]`, plus the delayed term
/// `ν(A)Q̄(x)E[M]·E[e^{-αrD}]·L/(1-L)`.
pub fn mrv_infinite(scn: &Scenario, x: f64, mrv_f: &MrvSpec, mrv_g: Option<&MrvSpec>) -> Result<AsymptoticValue> {
    if !(x > 0.0) {
        return Err(invalid("x", "must be positive"));
    }
    let r = scn.rate;
    if !(r > 0.0) {
        return Err(invalid("rate", "the infinite horizon needs a positive discount rate"));
    }
    let factor = |alpha: f64| {
        let l = scn.renewal.interarrival.laplace(alpha * r);
        l / (1.0 - l)
    };
    let main = mrv_f.measure(&scn.rare_set)? * mrv_f.reference_tail.tail(x) * factor(mrv_f.alpha);
    let (formula, delayed) = match mrv_delayed_spec(scn, mrv_g)? {
        None => (Formula::MrvInfiniteNegligible, 0.0),
        Some(g) => (
            Formula::MrvInfiniteEquivalent,
            g.measure(&scn.rare_set)?
                * g.reference_tail.tail(x)
                * scn.count.mean()
                * scn.delay.laplace(g.alpha * r)
                * factor(g.alpha),
        ),
    };
    Ok(AsymptoticValue::new(formula, (main, 0.0), (delayed, 0.0)))
}

/// `1 - e^{-αrt}`, the bound on the conditional entrance-time distribution
/// function when delayed claims are comparable to main claims.
pub fn entrance_time_bound(t: f64, alpha: f64, r: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(invalid("t", "must be nonnegative"));
    }
    if !(alpha * r > 0.0) {
        return Err(invalid("alpha·r", "must be positive"));
    }
    Ok(-(-alpha * r * t).exp_m1())
}

/// Inverse-transform draw from the `Exp(αr)` law of the conditional
/// entrance time when delayed claims are negligible.
pub fn sample_limit_entrance_time<R: Rng + ?Sized>(alpha: f64, r: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample(rand::distributions::Open01);
    -u.ln() / (alpha * r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heavy_tails::MarginalModel;
    use crate::renewal::{Interarrival, RenewalSpec};
    use crate::scenario::CountLaw;

    const P2: MarginalModel = MarginalModel::Pareto {
        alpha: 2.0,
        scale: 1.0,
    };

    fn scenario(d: usize, set: RareSet, count: CountLaw, delay: DelayLaw, rate: f64, regime: Regime) -> Scenario {
        Scenario {
            id: "t".into(),
            main_claims: ClaimVectorModel::iid(P2, d).unwrap(),
            delayed_claims: ClaimVectorModel::iid(P2, d).unwrap(),
            count,
            delay,
            renewal: RenewalSpec::poisson(1.0).unwrap(),
            rate,
            rare_set: set,
            regime,
        }
        .validated()
        .unwrap()
    }

    fn a2() -> RareSet {
        RareSet::component_exceed(vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn undiscounted_collapse_with_fixed_delay() {
        let s = scenario(
            2,
            a2(),
            CountLaw::FixedCount { m: 1 },
            DelayLaw::Deterministic { value: 2.0 },
            0.0,
            Regime::Equivalent,
        );
        let x = 5.0;
        let p = s.main_claims.exact_entrance_prob(x, &s.rare_set).unwrap().value;
        let v = finite_horizon_equivalent(&s, x, 10.0, DEFAULT_TOL).unwrap();
        assert!((v.value - 18.0 * p).abs() < 1e-9 * 18.0 * p, "{v:?}");
        assert!((v.main_term - 10.0 * p).abs() < 1e-9 * p);
        let neg = finite_horizon_negligible(&s, x, 10.0, DEFAULT_TOL).unwrap();
        assert_eq!(neg.value, v.main_term);
        assert_eq!(neg.delayed_term, 0.0);
    }

    #[test]
    fn poisson_closed_forms() {
        let s = scenario(1, RareSet::unit_exceedance(), CountLaw::Zero, DelayLaw::Exponential { rate: 1.0 }, 0.05, Regime::Negligible);
        let mrv = MrvSpec::from_model(&s.main_claims, std::slice::from_ref(&s.rare_set)).unwrap();
        let x: f64 = 50.0;
        let closed = x.powi(-2) * 10.0;
        let cor = mrv_infinite(&s, x, &mrv, None).unwrap();
        assert!((cor.value - closed).abs() < 1e-12 * closed);
        assert_eq!(cor.formula, Formula::MrvInfiniteNegligible);
        let quad = infinite_horizon_negligible(&s, x, DEFAULT_TOL).unwrap();
        assert!((quad.value - closed).abs() < 1e-5 * closed, "{quad:?}");
        let fin = mrv_finite(&s, x, 10.0, &mrv, None, DEFAULT_TOL).unwrap();
        let expected = x.powi(-2) * (1.0 - (-1.0f64).exp()) / 0.1;
        assert!((fin.value - expected).abs() < 1e-9 * expected);
        let thm = finite_horizon_negligible(&s, x, 10.0, DEFAULT_TOL).unwrap();
        assert!((thm.value - expected).abs() < 1e-6 * expected);
    }

    #[test]
    fn mrv_infinite_delay_factor() {
        let s = scenario(
            1,
            RareSet::unit_exceedance(),
            CountLaw::FixedCount { m: 1 },
            DelayLaw::Exponential { rate: 1.0 },
            0.05,
            Regime::Equivalent,
        );
        let mrv = MrvSpec::from_model(&s.main_claims, std::slice::from_ref(&s.rare_set)).unwrap();
        let v = mrv_infinite(&s, 10.0, &mrv, Some(&mrv)).unwrap();
        assert!((v.main_term - 0.01 * 10.0).abs() < 1e-12);
        assert!((v.delayed_term - 0.01 * 10.0 / 1.1).abs() < 1e-12);
        assert!(mrv_infinite(&s, 10.0, &mrv, None).is_err());
        let q = infinite_horizon_equivalent(&s, 10.0, DEFAULT_TOL).unwrap();
        assert!((q.value - v.value).abs() < 1e-5 * v.value, "{q:?} vs {v:?}");
    }

    #[test]
    fn mrv_finite_exponential_delay_closed_form() {
        let s = scenario(
            1,
            RareSet::unit_exceedance(),
            CountLaw::FixedCount { m: 1 },
            DelayLaw::Exponential { rate: 1.0 },
            0.05,
            Regime::Equivalent,
        );
        let mrv = MrvSpec::from_model(&s.main_claims, std::slice::from_ref(&s.rare_set)).unwrap();
        let (t, c, eta) = (10.0, 0.1, 1.0);
        let v = mrv_finite(&s, 10.0, t, &mrv, Some(&mrv), DEFAULT_TOL).unwrap();
        let inner = |s: f64| eta * (1.0 - (-(eta + c) * (t - s)).exp()) / (eta + c);
        let q = crate::quadrature::integrate(|s| (-c * s).exp() * inner(s), 0.0, t, 1e-12, 0.0).unwrap();
        assert!((v.delayed_term - 0.01 * q.value).abs() < 1e-8 * v.delayed_term);
        // pure-Pareto gauge: the quadrature formula coincides
        let thm = finite_horizon_equivalent(&s, 10.0, t, DEFAULT_TOL).unwrap();
        assert!((thm.value - v.value).abs() < 1e-5 * v.value);
    }

    #[test]
    fn mrv_and_exact_formulas_converge() {
        let s = scenario(
            2,
            a2(),
            CountLaw::Geometric { p: 0.5 },
            DelayLaw::Exponential { rate: 1.0 },
            0.05,
            Regime::Equivalent,
        );
        let mrv = MrvSpec::from_model(&s.main_claims, std::slice::from_ref(&s.rare_set)).unwrap();
        let mut prev = f64::INFINITY;
        for x in [10.0, 100.0, 1000.0] {
            let a = mrv_finite(&s, x, 10.0, &mrv, Some(&mrv), DEFAULT_TOL).unwrap().value;
            let b = finite_horizon_equivalent(&s, x, 10.0, DEFAULT_TOL).unwrap().value;
            let gap = (a / b - 1.0).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn horizon_and_rate_monotonicity() {
        let s = scenario(
            2,
            RareSet::half_space_sum(vec![0.5, 0.5], 1.0).unwrap(),
            CountLaw::Geometric { p: 0.5 },
            DelayLaw::Uniform { a: 0.0, b: 3.0 },
            0.05,
            Regime::Equivalent,
        );
        let ev = AsymptoticEvaluator::new(&s, 20.0, 80.0, Horizon::Infinite, DEFAULT_TOL).unwrap();
        let inf = ev.infinite(20.0).unwrap().value;
        let mut prev_gap = f64::INFINITY;
        for t in [10.0, 50.0, 200.0] {
            let v = ev.finite(20.0, t).unwrap();
            assert!((v.value - v.main_term - v.delayed_term).abs() <= 1e-15 * v.value);
            let gap = inf - v.value;
            assert!(gap >= 0.0 && gap < prev_gap, "t={t}: {gap}");
            prev_gap = gap;
        }
        assert!(ev.finite(40.0, 10.0).unwrap().value < ev.finite(20.0, 10.0).unwrap().value);
        let mut prev = f64::INFINITY;
        for r in [0.0, 0.02, 0.05, 0.1] {
            let v = finite_horizon_equivalent(&s.with_rate(r).unwrap(), 20.0, 10.0, 1e-6).unwrap().value;
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn vanishing_horizon() {
        let mut s = scenario(2, a2(), CountLaw::Zero, DelayLaw::Exponential { rate: 1.0 }, 0.05, Regime::Negligible);
        s.renewal = RenewalSpec::new(Interarrival::Erlang { k: 2, rate: 2.0 }).unwrap();
        let mut prev = f64::INFINITY;
        for t in [1.0, 0.5, 0.1, 0.01] {
            let v = finite_horizon_negligible(&s, 10.0, t, 1e-6).unwrap().value;
            assert!(v < prev);
            prev = v;
        }
        assert!(prev < 1e-5);
        s.renewal = RenewalSpec::new(Interarrival::Uniform { a: 1.0, b: 2.0 }).unwrap();
        assert!(matches!(
            finite_horizon_negligible(&s, 10.0, 0.5, 1e-6),
            Err(Error::OutsideLambda { .. })
        ));
    }

    #[test]
    fn infinite_horizon_requires_discount() {
        let s = scenario(2, a2(), CountLaw::Zero, DelayLaw::Exponential { rate: 1.0 }, 0.0, Regime::Negligible);
        assert!(infinite_horizon_negligible(&s, 10.0, 1e-6).is_err());
    }

    #[test]
    fn bound_values() {
        assert_eq!(entrance_time_bound(0.0, 2.0, 0.05).unwrap(), 0.0);
        assert!((entrance_time_bound(10.0, 2.0, 0.05).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-15);
        assert!((entrance_time_bound(1e6, 2.0, 0.05).unwrap() - 1.0).abs() < 1e-15);
        assert!(entrance_time_bound(1.0, 2.0, 0.0).is_err());
    }
}
