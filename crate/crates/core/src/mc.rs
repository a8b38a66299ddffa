//! Crude Monte Carlo estimation of entrance probabilities and entrance
//! times.
//!
//! Path `i` of a run always draws from stream `i` of the run's seed, and
//! replications are grouped into fixed-size blocks whose hit counts are
//! summed. Estimates therefore do not depend on the number of worker
//! threads or on scheduling.

use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{AsymptoticEvaluator, AsymptoticValue};
use crate::error::{invalid, Error, Result};
use crate::renewal::Horizon;
use crate::rng::StreamFactory;
use crate::scenario::Scenario;

/// Paths per work unit.
pub const BLOCK_PATHS: u64 = 1 << 12;
pub const MIN_REPLICATIONS: u64 = 1000;
/// Default tolerance `e^{-rκT*}` of the infinite-horizon truncation.
pub const DEFAULT_TRUNCATION_TOL: f64 = 1e-3;
/// Upper 95% bound multiplier `-ln 0.025` used when no path hits.
const ZERO_HIT_BOUND: f64 = 3.688_879_454_113_936;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MCEstimate {
    pub p_hat: f64,
    pub std_err: f64,
    pub n: u64,
    pub hits: u64,
    pub ci95: (f64, f64),
    pub seed: u64,
    pub horizon: Horizon,
    /// Simulated horizon `T*` for infinite-horizon estimates.
    pub truncation: Option<f64>,
    /// `|p̂(T*) - p̂(2T*)|` on shared paths.
    pub delta: Option<f64>,
    /// Set when `delta` exceeds two standard errors.
    pub flagged: bool,
}

impl MCEstimate {
    pub fn from_hits(hits: u64, n: u64, seed: u64, horizon: Horizon) -> Self {
        let p = hits as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        let ci95 = if hits == 0 {
            (0.0, ZERO_HIT_BOUND / n as f64)
        } else {
            ((p - 1.96 * se).max(0.0), (p + 1.96 * se).min(1.0))
        };
        MCEstimate {
            p_hat: p,
            std_err: se,
            n,
            hits,
            ci95,
            seed,
            horizon,
            truncation: None,
            delta: None,
            flagged: false,
        }
    }
}

fn check_run(x_grid: &[f64], n: u64) -> Result<()> {
    if n < MIN_REPLICATIONS {
        return Err(invalid("n", format!("need at least {MIN_REPLICATIONS} replications, got {n}")));
    }
    if x_grid.is_empty() {
        return Err(invalid("x_grid", "must be nonempty"));
    }
    if let Some(x) = x_grid.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(invalid("x", format!("levels must be positive and finite, got {x}")));
    }
    Ok(())
}

/// Hit counts `[x][t]` over `n` paths simulated to `max(t_grid)`.
fn grid_hits(scn: &Scenario, x_grid: &[f64], t_grid: &[f64], n: u64, seed: u64) -> Vec<u64> {
    let factory = StreamFactory::new(seed);
    let t_max = t_grid.iter().copied().fold(0.0, f64::max);
    let (nx, nt) = (x_grid.len(), t_grid.len());
    let blocks = n.div_ceil(BLOCK_PATHS);
    let merge = |mut a: Vec<u64>, b: Vec<u64>| {
        a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        a
    };
    (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut sim = scn.simulator();
            let mut acc = vec![0.0; scn.dim()];
            let mut gauges = vec![0.0; nt];
            let mut hits = vec![0u64; nx * nt];
            for i in b * BLOCK_PATHS..((b + 1) * BLOCK_PATHS).min(n) {
                sim.simulate(t_max, &mut factory.stream(i));
                if sim.events().is_empty() {
                    continue;
                }
                sim.events_mut().gauges_at(&scn.rare_set, t_grid, &mut acc, &mut gauges);
                for (xi, &x) in x_grid.iter().enumerate() {
                    for (ti, &g) in gauges.iter().enumerate() {
                        if g > x {
                            hits[xi * nt + ti] += 1;
                        }
                    }
                }
            }
            hits
        })
        .reduce(|| vec![0u64; nx * nt], merge)
}

/// Estimates `P(D_r(t) ∈ xA)` for every `(x, t)` pair from one set of
/// paths. The result is indexed `[x][t]`.
pub fn estimate_grid(
    scn: &Scenario,
    x_grid: &[f64],
    t_grid: &[f64],
    n: u64,
    seed: u64,
) -> Result<Vec<Vec<MCEstimate>>> {
    check_run(x_grid, n)?;
    if t_grid.is_empty() {
        return Err(invalid("t_grid", "must be nonempty"));
    }
    for &t in t_grid {
        if !t.is_finite() {
            return Err(invalid("t", "finite horizons only"));
        }
        if !scn.renewal.in_lambda(t) {
            return Err(Error::OutsideLambda { t });
        }
    }
    let mut order: Vec<usize> = (0..t_grid.len()).collect();
    order.sort_by(|&a, &b| t_grid[a].total_cmp(&t_grid[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| t_grid[i]).collect();
    let hits = grid_hits(scn, x_grid, &sorted, n, seed);
    let nt = t_grid.len();
    Ok((0..x_grid.len())
        .map(|xi| {
            let mut row = vec![MCEstimate::from_hits(0, n, seed, Horizon::Finite(0.0)); nt];
            for (k, &ti) in order.iter().enumerate() {
                row[ti] = MCEstimate::from_hits(hits[xi * nt + k], n, seed, Horizon::Finite(t_grid[ti]));
            }
            row
        })
        .collect())
}

/// Estimates `P(D_r(t) ∈ xA)` from `n` independent paths.
pub fn estimate_entrance_prob(scn: &Scenario, x: f64, t: f64, n: u64, seed: u64) -> Result<MCEstimate> {
    Ok(estimate_grid(scn, &[x], &[t], n, seed)?[0][0])
}

/// Estimates `P(D_r(∞) ∈ xA)` for each level by simulating to the
/// truncation horizon `T*` and checking the estimate against `2T*` on the
/// same paths.
pub fn estimate_infinite_grid(scn: &Scenario, x_grid: &[f64], n: u64, seed: u64, tol: f64) -> Result<Vec<MCEstimate>> {
    check_run(x_grid, n)?;
    if !(scn.rate > 0.0) {
        return Err(invalid("rate", "the infinite horizon needs a positive discount rate"));
    }
    let t_star = scn.truncation_horizon(tol)?;
    let hits = grid_hits(scn, x_grid, &[t_star, 2.0 * t_star], n, seed);
    Ok(x_grid
        .iter()
        .enumerate()
        .map(|(xi, _)| {
            let mut est = MCEstimate::from_hits(hits[2 * xi], n, seed, Horizon::Infinite);
            let doubled = hits[2 * xi + 1] as f64 / n as f64;
            let delta = (doubled - est.p_hat).abs();
            est.truncation = Some(t_star);
            est.delta = Some(delta);
            est.flagged = delta > 2.0 * est.std_err;
            est
        })
        .collect())
}

pub fn estimate_infinite_horizon(scn: &Scenario, x: f64, n: u64, seed: u64) -> Result<MCEstimate> {
    Ok(estimate_infinite_grid(scn, &[x], n, seed, DEFAULT_TRUNCATION_TOL)?[0])
}

/// First time the path from `rng` enters `x·A`, if before the truncation
/// horizon.
pub fn sample_entrance_time<R: rand::Rng + ?Sized>(scn: &Scenario, x: f64, rng: &mut R) -> Result<Option<f64>> {
    let t_star = scn.truncation_horizon(DEFAULT_TRUNCATION_TOL)?;
    let mut sim = scn.simulator();
    sim.simulate(t_star, rng);
    let mut acc = vec![0.0; scn.dim()];
    Ok(sim.events_mut().first_entrance(&scn.rare_set, x, &mut acc))
}

/// Entrance times of the paths that entered before `truncation`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntranceSample {
    /// Sorted entrance times.
    pub times: Vec<f64>,
    pub n: u64,
    pub truncation: f64,
    pub seed: u64,
}

impl EntranceSample {
    /// Empirical `P(τ ≤ t | τ < T*)` with its binomial standard error.
    pub fn conditional_cdf(&self, t: f64) -> (f64, f64) {
        let k = self.times.partition_point(|&s| s <= t) as f64;
        let m = self.times.len() as f64;
        if m == 0.0 {
            return (0.0, 0.0);
        }
        let p = k / m;
        (p, (p * (1.0 - p) / m).sqrt())
    }
}

/// Entrance times over `n` paths, each simulated to the truncation horizon.
pub fn entrance_times(scn: &Scenario, x: f64, n: u64, seed: u64, tol: f64) -> Result<EntranceSample> {
    check_run(&[x], n)?;
    let t_star = scn.truncation_horizon(tol)?;
    let factory = StreamFactory::new(seed);
    let blocks = n.div_ceil(BLOCK_PATHS);
    let per_block: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut sim = scn.simulator();
            let mut acc = vec![0.0; scn.dim()];
            let mut times = Vec::new();
            for i in b * BLOCK_PATHS..((b + 1) * BLOCK_PATHS).min(n) {
                sim.simulate(t_star, &mut factory.stream(i));
                if let Some(t) = sim.events_mut().first_entrance(&scn.rare_set, x, &mut acc) {
                    times.push(t);
                }
            }
            times
        })
        .collect();
    let mut times: Vec<f64> = per_block.into_iter().flatten().collect();
    times.sort_by(f64::total_cmp);
    Ok(EntranceSample {
        times,
        n,
        truncation: t_star,
        seed,
    })
}

/// Kolmogorov–Smirnov distance between a sample and a continuous CDF.
pub fn ks_distance<F: Fn(f64) -> f64>(sample: &[f64], cdf: F) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = cdf(v);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Monte Carlo estimate next to its asymptotic approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub x: f64,
    pub t: Horizon,
    pub mc: MCEstimate,
    pub asym: AsymptoticValue,
    /// `mc.p_hat / asym.value`.
    pub ratio: f64,
    /// The 95% interval of the estimate divided by `asym.value`.
    pub ratio_ci: (f64, f64),
}

impl ComparisonRow {
    pub fn new(x: f64, t: Horizon, mc: MCEstimate, asym: AsymptoticValue) -> Self {
        ComparisonRow {
            x,
            t,
            mc,
            asym,
            ratio: mc.p_hat / asym.value,
            ratio_ci: (mc.ci95.0 / asym.value, mc.ci95.1 / asym.value),
        }
    }

    /// Standard error of the ratio.
    pub fn ratio_std_err(&self) -> f64 {
        self.mc.std_err / self.asym.value
    }
}

/// Worst relative deviation over the horizons at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UniformitySummary {
    pub x: f64,
    /// `sup_t |ratio - 1|`.
    pub sup_abs_dev: f64,
    /// Horizon attaining the supremum.
    pub t_at_sup: Horizon,
    /// Standard error of the ratio at that horizon.
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformityProfile {
    pub rows: Vec<ComparisonRow>,
    pub summary: Vec<UniformitySummary>,
    /// Horizons dropped because no arrival can occur by then.
    pub excluded_t: Vec<f64>,
}

impl UniformityProfile {
    /// Whether the summary deviations are nonincreasing in `x`, allowing
    /// each step to rise by at most `k` combined standard errors.
    pub fn is_nonincreasing_within(&self, k: f64) -> bool {
        self.summary.windows(2).all(|w| {
            let noise = (w[0].std_err.powi(2) + w[1].std_err.powi(2)).sqrt();
            w[1].sup_abs_dev <= w[0].sup_abs_dev + k * noise
        })
    }
}

/// Compares Monte Carlo estimates with the asymptotic approximation of the
/// scenario's regime on an `(x, t)` grid.
pub fn uniformity_profile(
    scn: &Scenario,
    x_grid: &[f64],
    t_grid: &[f64],
    n: u64,
    seed: u64,
    tol: f64,
) -> Result<UniformityProfile> {
    let (kept, excluded_t): (Vec<f64>, Vec<f64>) = t_grid.iter().partition(|&&t| scn.renewal.in_lambda(t));
    if kept.is_empty() {
        return Err(Error::OutsideLambda { t: excluded_t[0] });
    }
    let mut xs = x_grid.to_vec();
    xs.sort_by(f64::total_cmp);
    let mut ts = kept;
    ts.sort_by(f64::total_cmp);
    let mc = estimate_grid(scn, &xs, &ts, n, seed)?;
    let t_max = *ts.last().expect("nonempty");
    let eval = AsymptoticEvaluator::new(scn, xs[0], *xs.last().expect("nonempty"), Horizon::Finite(t_max), tol)?;
    let mut rows = Vec::with_capacity(xs.len() * ts.len());
    let mut summary = Vec::with_capacity(xs.len());
    for (xi, &x) in xs.iter().enumerate() {
        let mut worst: Option<UniformitySummary> = None;
        for (ti, &t) in ts.iter().enumerate() {
            let row = ComparisonRow::new(x, Horizon::Finite(t), mc[xi][ti], eval.finite(x, t)?);
            let dev = (row.ratio - 1.0).abs();
            if worst.is_none_or(|w| dev > w.sup_abs_dev) {
                worst = Some(UniformitySummary {
                    x,
                    sup_abs_dev: dev,
                    t_at_sup: row.t,
                    std_err: row.ratio_std_err(),
                });
            }
            rows.push(row);
        }
        summary.push(worst.expect("nonempty t grid"));
    }
    Ok(UniformityProfile {
        rows,
        summary,
        excluded_t,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::claims::ClaimVectorModel;
    use crate::heavy_tails::MarginalModel;
    use crate::rare_set::RareSet;
    use crate::renewal::{Interarrival, RenewalSpec};
    use crate::scenario::{CountLaw, DelayLaw, Regime};

    const P2: MarginalModel = MarginalModel::Pareto {
        alpha: 2.0,
        scale: 1.0,
    };

    fn compound(d: usize, rate: f64) -> Scenario {
        let set = if d == 1 {
            RareSet::unit_exceedance()
        } else {
            RareSet::component_exceed(vec![1.0; d]).unwrap()
        };
        Scenario {
            id: "t".into(),
            main_claims: ClaimVectorModel::iid(P2, d).unwrap(),
            delayed_claims: ClaimVectorModel::iid(P2, d).unwrap(),
            count: CountLaw::Zero,
            delay: DelayLaw::Exponential { rate: 1.0 },
            renewal: RenewalSpec::poisson(1.0).unwrap(),
            rate,
            rare_set: set,
            regime: Regime::Equivalent,
        }
        .validated()
        .unwrap()
    }

    /// `P(Σ_{i≤N} X_i > x)` for `N ~ Poisson(1)` and Pareto(2, 1) summands,
    /// from n-fold convolution tails truncated at `N ≤ 30`.
    fn compound_poisson_tail(x: f64) -> f64 {
        use crate::convolution::{pair_sum_tail, Survival, TabulatedTail};
        let mut total = 0.0;
        let mut weight = (-1.0f64).exp();
        let mut table: Option<TabulatedTail> = None;
        for k in 1..=30 {
            weight /= k as f64;
            let tail_k = |y: f64| match &table {
                None => P2.tail(y),
                Some(t) => pair_sum_tail(t, &P2, 0.0, y, 4096).unwrap().value,
            };
            let next = TabulatedTail::build(tail_k, 1e-3, 1e3, 1200);
            total += weight * next.tail(x);
            table = Some(next);
            if k as f64 > x {
                break;
            }
        }
        total
    }

    #[test]
    fn compound_poisson_oracle() {
        let s = compound(1, 0.0);
        let est = estimate_entrance_prob(&s, 10.0, 1.0, 1_000_000, 42).unwrap();
        let oracle = compound_poisson_tail(10.0);
        assert!((est.p_hat - oracle).abs() < 4.0 * est.std_err, "{est:?} vs {oracle}");
    }

    #[test]
    fn zero_hits_and_determinism() {
        let s = compound(2, 0.05);
        let a = estimate_entrance_prob(&s, 1e12, 1.0, 10_000, 1).unwrap();
        assert_eq!(a.hits, 0);
        assert_eq!(a.ci95, (0.0, ZERO_HIT_BOUND / 10_000.0));
        let b = estimate_entrance_prob(&s, 5.0, 3.0, 20_000, 7).unwrap();
        let c = estimate_entrance_prob(&s, 5.0, 3.0, 20_000, 7).unwrap();
        assert_eq!(b, c);
        let lo = (b.p_hat - 1.96 * b.std_err).max(0.0);
        assert_eq!(b.ci95.0, lo);
    }

    #[test]
    fn thread_count_does_not_matter() {
        let s = compound(2, 0.05);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_grid(&s, &[2.0, 5.0], &[1.0, 4.0], 30_000, 3).unwrap())
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn input_errors() {
        let s = compound(2, 0.05);
        assert!(estimate_entrance_prob(&s, 0.0, 1.0, 10_000, 1).is_err());
        assert!(estimate_entrance_prob(&s, 1.0, 1.0, 999, 1).is_err());
        let mut u = s.clone();
        u.renewal = RenewalSpec::new(Interarrival::Uniform { a: 2.0, b: 3.0 }).unwrap();
        assert!(matches!(
            estimate_entrance_prob(&u, 1.0, 1.5, 10_000, 1),
            Err(Error::OutsideLambda { .. })
        ));
        assert!(estimate_infinite_horizon(&s.with_rate(0.0).unwrap(), 1.0, 10_000, 1).is_err());
    }

    #[test]
    fn monotone_in_horizon_and_level() {
        let s = compound(2, 0.05);
        let grid = estimate_grid(&s, &[3.0, 6.0, 12.0], &[10.0, 2.0, 5.0], 20_000, 11).unwrap();
        for row in &grid {
            assert!(row[1].hits <= row[2].hits && row[2].hits <= row[0].hits);
        }
        for ((a, b), c) in grid[0].iter().zip(&grid[1]).zip(&grid[2]) {
            assert!(a.hits >= b.hits && b.hits >= c.hits);
        }
        let inf = estimate_infinite_horizon(&s, 6.0, 20_000, 11).unwrap();
        assert!(inf.hits >= grid[1][0].hits);
        assert!(inf.truncation.unwrap() > 10.0);
    }

    #[test]
    fn infinite_horizon_without_delays_ignores_delay_law() {
        let s = compound(2, 0.05);
        let mut other = s.clone();
        other.delayed_claims = ClaimVectorModel::iid(MarginalModel::Exponential { rate: 3.0 }, 2).unwrap();
        other.delay = DelayLaw::Deterministic { value: 1.0 };
        let a = estimate_infinite_horizon(&s, 8.0, 20_000, 5).unwrap();
        let b = estimate_infinite_horizon(&other, 8.0, 20_000, 5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn infinite_horizon_self_consistency() {
        let mut s = compound(2, 0.05);
        s.count = CountLaw::Geometric { p: 0.5 };
        let s = s.validated().unwrap();
        let est = estimate_infinite_horizon(&s, 20.0, 100_000, 8).unwrap();
        assert!(est.delta.unwrap() <= 4.0 * est.std_err, "{est:?}");
    }

    #[test]
    fn tiny_level_entrance_is_first_arrival() {
        let s = compound(2, 0.05);
        let n = 100_000;
        let sample = entrance_times(&s, 1e-6, n, 21, DEFAULT_TRUNCATION_TOL).unwrap();
        assert_eq!(sample.times.len() as u64, n);
        let d = ks_distance(&sample.times, |t| 1.0 - (-t).exp());
        assert!(d < 0.01, "{d}");
    }

    #[test]
    fn ks_distance_basics() {
        let sample: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_distance(&sample, |u| u) - 0.005).abs() < 1e-12);
    }

    #[test]
    fn single_cell_profile() {
        let s = compound(2, 0.05);
        let p = uniformity_profile(&s, &[5.0], &[3.0], 10_000, 2, 1e-6).unwrap();
        assert_eq!(p.rows.len(), 1);
        assert_eq!(p.summary.len(), 1);
        assert!((p.rows[0].ratio - p.rows[0].mc.p_hat / p.rows[0].asym.value).abs() < 1e-15);
        let mut u = s.clone();
        u.renewal = RenewalSpec::new(Interarrival::Uniform { a: 2.0, b: 3.0 }).unwrap();
        let p = uniformity_profile(&u, &[5.0], &[1.0, 3.0], 10_000, 2, 1e-6).unwrap();
        assert_eq!(p.excluded_t, vec![1.0]);
        assert_eq!(p.rows.len(), 1);
    }
}
