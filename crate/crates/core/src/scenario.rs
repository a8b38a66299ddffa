//! Full model specification and path simulation of the discounted
//! aggregate claims process.
//!
//! A path is generated arrival by arrival. For each renewal epoch `τ` the
//! simulator draws, in this order, the interarrival time, the main claim
//! vector `X`, the number of delayed claims `M`, and then for every delayed
//! claim its delay `D` followed by its vector `Y`. Every claim becomes an
//! event carrying its time and its discounted vector. Paths for different
//! horizons built from the same stream share their prefix, so aggregates
//! are pathwise nondecreasing in the horizon.

use std::cmp::Ordering;

use rand::distributions::{Distribution, Open01};
use rand::Rng;
use rand_distr::{Geometric, Poisson};
use serde::{Deserialize, Serialize};

use crate::claims::ClaimVectorModel;
use crate::error::{invalid, Error, Result};
use crate::heavy_tails::{karamata_lower_analytic, MarginalModel, TailClass};
use crate::rare_set::RareSet;
use crate::renewal::RenewalSpec;

/// Law of the number `M` of delayed claims triggered by one main claim.
/// Every variant has a finite exponential moment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum CountLaw {
    Zero,
    #[serde(rename = "fixed")]
    FixedCount { m: u32 },
    /// Failures before the first success, `P(M = k) = (1-p)^k p`.
    Geometric { p: f64 },
    #[serde(rename = "poisson")]
    PoissonCount { mean: f64 },
}

impl CountLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            CountLaw::Geometric { p } if !(p > 0.0 && p <= 1.0) => {
                Err(invalid("p", "must lie in (0, 1]"))
            }
            CountLaw::PoissonCount { mean } if !(mean > 0.0 && mean.is_finite()) => {
                Err(invalid("mean", "must be finite and positive"))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            CountLaw::Zero => 0.0,
            CountLaw::FixedCount { m } => m as f64,
            CountLaw::Geometric { p } => (1.0 - p) / p,
            CountLaw::PoissonCount { mean } => mean,
        }
    }

    /// Whether `M = 0` almost surely.
    pub fn is_zero(&self) -> bool {
        matches!(self, CountLaw::Zero | CountLaw::FixedCount { m: 0 })
    }
}

#[derive(Debug, Clone, Copy)]
enum CountSampler {
    Fixed(u64),
    Geometric(Geometric),
    Poisson(Poisson<f64>),
}

impl CountSampler {
    fn new(law: &CountLaw) -> Self {
        match *law {
            CountLaw::Zero => CountSampler::Fixed(0),
            CountLaw::FixedCount { m } => CountSampler::Fixed(m as u64),
            CountLaw::Geometric { p } => {
                CountSampler::Geometric(Geometric::new(p).expect("validated"))
            }
            CountLaw::PoissonCount { mean } => {
                CountSampler::Poisson(Poisson::new(mean).expect("validated"))
            }
        }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        match self {
            CountSampler::Fixed(m) => *m,
            CountSampler::Geometric(g) => g.sample(rng),
            CountSampler::Poisson(p) => p.sample(rng) as u64,
        }
    }
}

/// Law of the settlement delay `D` of a delayed claim.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum DelayLaw {
    Exponential { rate: f64 },
    Uniform { a: f64, b: f64 },
    Deterministic { value: f64 },
}

impl DelayLaw {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DelayLaw::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => {
                Err(invalid("rate", "must be finite and positive"))
            }
            DelayLaw::Uniform { a, b } if !(a >= 0.0 && b > a && b.is_finite()) => {
                Err(invalid("uniform", "need 0 ≤ a < b < ∞"))
            }
            DelayLaw::Deterministic { value } if !(value >= 0.0 && value.is_finite()) => {
                Err(invalid("value", "must be finite and nonnegative"))
            }
            _ => Ok(()),
        }
    }

    pub fn cdf(&self, y: f64) -> f64 {
        match *self {
            DelayLaw::Exponential { rate } => {
                if y <= 0.0 {
                    0.0
                } else {
                    -(-rate * y).exp_m1()
                }
            }
            DelayLaw::Uniform { a, b } => ((y - a) / (b - a)).clamp(0.0, 1.0),
            DelayLaw::Deterministic { value } => {
                if y >= value {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `E[e^{-sD}]`.
    pub fn laplace(&self, s: f64) -> f64 {
        match *self {
            DelayLaw::Exponential { rate } => rate / (rate + s),
            DelayLaw::Uniform { a, b } => {
                if s == 0.0 {
                    1.0
                } else {
                    ((-s * a).exp() - (-s * b).exp()) / (s * (b - a))
                }
            }
            DelayLaw::Deterministic { value } => (-s * value).exp(),
        }
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DelayLaw::Exponential { rate } => {
                let u: f64 = rng.sample(Open01);
                -u.ln() / rate
            }
            DelayLaw::Uniform { a, b } => {
                let u: f64 = rng.sample(Open01);
                a + (b - a) * u
            }
            DelayLaw::Deterministic { value } => value,
        }
    }

    /// Points where the distribution function jumps or has a kink.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            DelayLaw::Exponential { .. } => vec![],
            DelayLaw::Uniform { a, b } => vec![a, b],
            DelayLaw::Deterministic { value } => vec![value],
        }
    }
}

/// Whether delayed claims are asymptotically comparable to the main
/// claims or negligible against them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Equivalent,
    Negligible,
}

/// Main and delayed claim laws, delay structure, arrivals, discount rate,
/// rare set and regime.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario")]
pub struct Scenario {
    pub id: String,
    pub main_claims: ClaimVectorModel,
    pub delayed_claims: ClaimVectorModel,
    pub count: CountLaw,
    pub delay: DelayLaw,
    pub renewal: RenewalSpec,
    pub rate: f64,
    pub rare_set: RareSet,
    pub regime: Regime,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    #[serde(default = "default_id")]
    id: String,
    main_claims: ClaimVectorModel,
    delayed_claims: ClaimVectorModel,
    count: CountLaw,
    delay: DelayLaw,
    renewal: RenewalSpec,
    rate: f64,
    rare_set: RareSet,
    regime: Regime,
}

fn default_id() -> String {
    "scenario".to_string()
}

impl TryFrom<RawScenario> for Scenario {
    type Error = Error;

    fn try_from(r: RawScenario) -> Result<Self> {
        Scenario {
            id: r.id,
            main_claims: r.main_claims,
            delayed_claims: r.delayed_claims,
            count: r.count,
            delay: r.delay,
            renewal: r.renewal,
            rate: r.rate,
            rare_set: r.rare_set,
            regime: r.regime,
        }
        .validated()
    }
}

impl Scenario {
    /// Checks every invariant and returns the scenario unchanged.
    pub fn validated(self) -> Result<Self> {
        let d = self.main_claims.dim();
        if self.delayed_claims.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.delayed_claims.dim(),
            });
        }
        if self.rare_set.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.rare_set.dim(),
            });
        }
        self.rare_set.validate()?;
        self.count.validate()?;
        self.delay.validate()?;
        self.renewal.interarrival.validate()?;
        if !(self.rate >= 0.0 && self.rate.is_finite()) {
            return Err(invalid("rate", "must be finite and nonnegative"));
        }
        if !self.count.is_zero() {
            check_regime(
                self.regime,
                &self.main_claims.tail_class(),
                &self.delayed_claims.tail_class(),
            )?;
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.main_claims.dim()
    }

    /// Same scenario with another discount rate.
    pub fn with_rate(&self, rate: f64) -> Result<Self> {
        Scenario {
            rate,
            ..self.clone()
        }
        .validated()
    }

    /// Same scenario without delayed claims.
    pub fn without_delayed_claims(&self) -> Self {
        Scenario {
            count: CountLaw::Zero,
            ..self.clone()
        }
    }

    /// Smallest finite lower Karamata index over the claim marginals that
    /// can drive an entrance, if any.
    pub fn min_karamata_index(&self) -> Option<f64> {
        let mut laws: Vec<&MarginalModel> = self.main_claims.marginals().iter().collect();
        if !self.count.is_zero() {
            laws.extend(self.delayed_claims.marginals());
        }
        laws.into_iter()
            .filter_map(|m| karamata_lower_analytic(m).ok())
            .map(|r| r.karamata_lower)
            .filter(|k| k.is_finite())
            .reduce(f64::min)
    }

    /// Horizon `T*` with `e^{-r κ T*} = tol`, where `κ` is the smallest
    /// finite lower Karamata index of the claim laws (one when all are
    /// rapidly varying).
    pub fn truncation_horizon(&self, tol: f64) -> Result<f64> {
        if !(self.rate > 0.0) {
            return Err(invalid("rate", "the infinite horizon needs a positive discount rate"));
        }
        if !(tol > 0.0 && tol < 1.0) {
            return Err(invalid("tol", "must lie in (0, 1)"));
        }
        let kappa = self.min_karamata_index().unwrap_or(1.0);
        Ok((1.0 / tol).ln() / (self.rate * kappa))
    }

    /// Allocates reusable buffers for path simulation.
    pub fn simulator(&self) -> PathSimulator<'_> {
        PathSimulator {
            scenario: self,
            count: CountSampler::new(&self.count),
            claim: vec![0.0; self.dim()],
            events: PathEvents::new(self.dim()),
        }
    }

    /// One realization of `D_r(t)`.
    pub fn simulate_discounted_aggregate<R: Rng + ?Sized>(&self, t: f64, rng: &mut R) -> Vec<f64> {
        let mut sim = self.simulator();
        sim.simulate(t, rng);
        let mut out = vec![0.0; self.dim()];
        sim.events().aggregate_at(t, &mut out);
        out
    }
}

fn check_regime(regime: Regime, main: &TailClass, delayed: &TailClass) -> Result<()> {
    let order = main.compare_heaviness(delayed);
    match regime {
        Regime::Equivalent => {
            let comparable = match (main, delayed) {
                (TailClass::Regular(a), TailClass::Regular(b)) => a == b,
                (TailClass::Lognormal { .. }, TailClass::Lognormal { .. }) => true,
                _ => order == Some(Ordering::Equal),
            };
            if comparable {
                Ok(())
            } else {
                Err(invalid(
                    "regime",
                    format!("equivalent regime needs comparable tails, got {main:?} and {delayed:?}"),
                ))
            }
        }
        Regime::Negligible => {
            if order == Some(Ordering::Less) {
                Ok(())
            } else {
                Err(invalid(
                    "regime",
                    format!("negligible regime needs delayed tails lighter than {main:?}, got {delayed:?}"),
                ))
            }
        }
    }
}

/// Claim events of one path: times and discounted vectors, stored flat.
#[derive(Debug, Clone)]
pub struct PathEvents {
    dim: usize,
    times: Vec<f64>,
    values: Vec<f64>,
    order: Vec<u32>,
}

impl PathEvents {
    fn new(dim: usize) -> Self {
        PathEvents {
            dim,
            times: Vec::new(),
            values: Vec::new(),
            order: Vec::new(),
        }
    }

    fn clear(&mut self) {
        self.times.clear();
        self.values.clear();
    }

    fn push(&mut self, time: f64, discount: f64, claim: &[f64]) {
        self.times.push(time);
        self.values.extend(claim.iter().map(|c| c * discount));
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Discounted vector of event `i`.
    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Sum of all events at or before `t`.
    pub fn aggregate_at(&self, t: f64, out: &mut [f64]) {
        out.fill(0.0);
        for (i, &time) in self.times.iter().enumerate() {
            if time <= t {
                for (o, v) in out.iter_mut().zip(self.value(i)) {
                    *o += v;
                }
            }
        }
    }

    fn sort(&mut self) {
        self.order.clear();
        self.order.extend(0..self.times.len() as u32);
        let times = &self.times;
        self.order
            .sort_unstable_by(|&a, &b| times[a as usize].total_cmp(&times[b as usize]));
    }

    /// Gauge of the running aggregate at each of the increasing horizons in
    /// `ts`, written to `out`.
    pub fn gauges_at(&mut self, set: &RareSet, ts: &[f64], acc: &mut [f64], out: &mut [f64]) {
        self.sort();
        acc.fill(0.0);
        let mut k = 0;
        for (slot, &t) in out.iter_mut().zip(ts) {
            while k < self.order.len() && self.times[self.order[k] as usize] <= t {
                let i = self.order[k] as usize;
                for (a, v) in acc.iter_mut().zip(&self.values[i * self.dim..(i + 1) * self.dim]) {
                    *a += v;
                }
                k += 1;
            }
            *slot = set.gauge_unchecked(acc);
        }
    }

    /// Time of the first event at which the running aggregate enters `x·A`.
    pub fn first_entrance(&mut self, set: &RareSet, x: f64, acc: &mut [f64]) -> Option<f64> {
        self.sort();
        acc.fill(0.0);
        for &i in &self.order {
            let i = i as usize;
            for (a, v) in acc.iter_mut().zip(&self.values[i * self.dim..(i + 1) * self.dim]) {
                *a += v;
            }
            if set.gauge_unchecked(acc) > x {
                return Some(self.times[i]);
            }
        }
        None
    }
}

/// Reusable simulation state for one worker.
#[derive(Debug, Clone)]
pub struct PathSimulator<'a> {
    scenario: &'a Scenario,
    count: CountSampler,
    claim: Vec<f64>,
    events: PathEvents,
}

impl PathSimulator<'_> {
    /// Generates every claim event up to `horizon` from `rng`.
    pub fn simulate<R: Rng + ?Sized>(&mut self, horizon: f64, rng: &mut R) {
        let scn = self.scenario;
        let r = scn.rate;
        self.events.clear();
        let mut tau = 0.0;
        loop {
            tau += scn.renewal.interarrival.sample(rng);
            if tau > horizon {
                break;
            }
            scn.main_claims.sample_into(rng, &mut self.claim);
            self.events.push(tau, (-r * tau).exp(), &self.claim);
            let m = self.count.sample(rng);
            for _ in 0..m {
                let when = tau + scn.delay.sample(rng);
                scn.delayed_claims.sample_into(rng, &mut self.claim);
                if when <= horizon {
                    self.events.push(when, (-r * when).exp(), &self.claim);
                }
            }
        }
    }

    pub fn events(&self) -> &PathEvents {
        &self.events
    }

    pub fn events_mut(&mut self) -> &mut PathEvents {
        &mut self.events
    }
}
