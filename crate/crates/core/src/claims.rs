//! Claim-vector laws: marginals plus an independent or FGM dependence
//! structure, with samplers and entrance-probability evaluators.

use rand::distributions::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::convolution::{weighted_sum_tail, DEFAULT_CELLS};
use crate::error::{invalid, Error, Result};
use crate::heavy_tails::{MarginalModel, TailClass};
use crate::rare_set::RareSet;
use crate::rng::StreamFactory;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Dependence {
    Independent,
    /// Farlie–Gumbel–Morgenstern copula with pairwise parameters listed
    /// in the order (1,2), (1,3), …, (1,d), (2,3), …, (d-1,d).
    Fgm { theta: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClaimVectorModel")]
pub struct ClaimVectorModel {
    marginals: Vec<MarginalModel>,
    dependence: Dependence,
}

#[derive(Deserialize)]
struct RawClaimVectorModel {
    marginals: Vec<MarginalModel>,
    #[serde(default = "independent")]
    dependence: Dependence,
}

fn independent() -> Dependence {
    Dependence::Independent
}

impl TryFrom<RawClaimVectorModel> for ClaimVectorModel {
    type Error = Error;

    fn try_from(raw: RawClaimVectorModel) -> Result<Self> {
        ClaimVectorModel::new(raw.marginals, raw.dependence)
    }
}

/// How an entrance probability was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMethod {
    Product,
    Copula,
    Convolution,
    McFallback,
}

impl EvalMethod {
    pub fn tag(&self) -> &'static str {
        match self {
            EvalMethod::Product => "product",
            EvalMethod::Copula => "copula",
            EvalMethod::Convolution => "convolution",
            EvalMethod::McFallback => "mc-fallback",
        }
    }
}

/// A probability with the numerical error of its evaluator (standard
/// error for the Monte Carlo fallback).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntranceProb {
    pub value: f64,
    pub error: f64,
    pub method: EvalMethod,
}

/// Replications and seed used when no closed form or grid evaluator applies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FallbackOptions {
    pub n: u64,
    pub seed: u64,
    pub cells: usize,
}

impl Default for FallbackOptions {
    fn default() -> Self {
        FallbackOptions {
            n: 1_000_000,
            seed: 0x5eed,
            cells: DEFAULT_CELLS,
        }
    }
}

impl ClaimVectorModel {
    pub fn new(marginals: Vec<MarginalModel>, dependence: Dependence) -> Result<Self> {
        if marginals.is_empty() {
            return Err(invalid("marginals", "need at least one component"));
        }
        for m in &marginals {
            m.validate()?;
        }
        if marginals.iter().all(MarginalModel::is_degenerate_zero) {
            return Err(invalid("marginals", "claim vectors cannot be almost surely zero"));
        }
        if let Dependence::Fgm { theta } = &dependence {
            let d = marginals.len();
            let pairs = d * (d - 1) / 2;
            if theta.len() != pairs {
                return Err(Error::DimensionMismatch {
                    expected: pairs,
                    found: theta.len(),
                });
            }
            if theta.iter().any(|t| !(-1.0..=1.0).contains(t)) {
                return Err(invalid("theta", "pairwise parameters must lie in [-1, 1]"));
            }
            // The density 1 + Σ θ_ij a_i a_j is multilinear in a ∈ [-1,1]^d,
            // so nonnegativity on the vertices suffices.
            if d > 20 {
                return Err(Error::Unsupported("FGM copulas above dimension 20".into()));
            }
            for mask in 0u32..(1 << d) {
                let sign = |i: usize| if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                let mut density = 1.0;
                let mut k = 0;
                for i in 0..d {
                    for j in i + 1..d {
                        density += theta[k] * sign(i) * sign(j);
                        k += 1;
                    }
                }
                if density < -1e-12 {
                    return Err(invalid("theta", "FGM density would be negative"));
                }
            }
        }
        Ok(ClaimVectorModel {
            marginals,
            dependence,
        })
    }

    pub fn independent(marginals: Vec<MarginalModel>) -> Result<Self> {
        Self::new(marginals, Dependence::Independent)
    }

    /// `d` independent copies of one marginal.
    pub fn iid(marginal: MarginalModel, d: usize) -> Result<Self> {
        Self::independent(vec![marginal; d])
    }

    pub fn dim(&self) -> usize {
        self.marginals.len()
    }

    pub fn marginals(&self) -> &[MarginalModel] {
        &self.marginals
    }

    pub fn dependence(&self) -> &Dependence {
        &self.dependence
    }

    fn theta(&self, i: usize, j: usize) -> f64 {
        match &self.dependence {
            Dependence::Independent => 0.0,
            Dependence::Fgm { theta } => {
                let (i, j) = if i < j { (i, j) } else { (j, i) };
                let d = self.dim();
                // offset of row i in the upper-triangular listing
                let k = i * (2 * d - i - 1) / 2 + (j - i - 1);
                theta[k]
            }
        }
    }

    /// Heaviest marginal tail class.
    pub fn tail_class(&self) -> TailClass {
        self.marginals
            .iter()
            .map(MarginalModel::tail_class)
            .reduce(|a, b| match a.compare_heaviness(&b) {
                Some(std::cmp::Ordering::Greater) => b,
                _ => a,
            })
            .expect("nonempty")
    }

    /// Constant `C` bounding the conditional density of one component
    /// given another relative to its marginal density.
    pub fn regression_dependence_constant(&self) -> f64 {
        let d = self.dim();
        (0..d)
            .map(|i| 1.0 + (0..d).filter(|&j| j != i).map(|j| self.theta(i, j).abs()).sum::<f64>())
            .fold(1.0, f64::max)
    }

    /// One claim vector written into `out`; consumes exactly `d` uniforms.
    #[inline]
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim());
        match &self.dependence {
            Dependence::Independent => {
                for (o, m) in out.iter_mut().zip(&self.marginals) {
                    *o = m.sample(rng);
                }
            }
            Dependence::Fgm { .. } => {
                // Sequential conditional inversion. Given the earlier
                // survival levels, the next one has density 1 + β(1 - 2u)
                // on (0,1); its CDF is u + βu(1 - u).
                let d = self.dim();
                let mut a = [0.0f64; 32];
                let mut partial = 1.0;
                for k in 0..d {
                    let w: f64 = rng.sample(Open01);
                    let mut b = 0.0;
                    for (i, ai) in a.iter().enumerate().take(k) {
                        b += self.theta(i, k) * ai;
                    }
                    let beta = b / partial;
                    let u = if beta.abs() < 1e-12 {
                        w
                    } else {
                        let disc = ((1.0 + beta) * (1.0 + beta) - 4.0 * beta * w).max(0.0);
                        2.0 * w / ((1.0 + beta) + disc.sqrt())
                    };
                    let ak = 1.0 - 2.0 * u;
                    if k < 32 {
                        a[k] = ak;
                    }
                    partial += ak * b;
                    out[k] = self.marginals[k].inverse_tail(u);
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.sample_into(rng, &mut out);
        out
    }

    /// `P(Z ∈ y·A)` with the default fallback settings.
    pub fn exact_entrance_prob(&self, y: f64, set: &RareSet) -> Result<EntranceProb> {
        self.exact_entrance_prob_with(y, set, &FallbackOptions::default())
    }

    pub fn exact_entrance_prob_with(
        &self,
        y: f64,
        set: &RareSet,
        options: &FallbackOptions,
    ) -> Result<EntranceProb> {
        if !(y > 0.0) {
            return Err(invalid("y", format!("scale must be positive, got {y}")));
        }
        if set.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: set.dim(),
            });
        }
        let d = self.dim();
        match set {
            RareSet::ComponentExceed { thresholds } => {
                let tails: Vec<f64> = self
                    .marginals
                    .iter()
                    .zip(thresholds)
                    .map(|(m, c)| m.tail(y * c))
                    .collect();
                // 1 - Π(1 - t_j), accurate for small tails
                let log_none: f64 = tails.iter().map(|t| (-t).ln_1p()).sum();
                let any = -log_none.exp_m1();
                match &self.dependence {
                    Dependence::Independent => Ok(EntranceProb {
                        value: any,
                        error: 0.0,
                        method: EvalMethod::Product,
                    }),
                    Dependence::Fgm { .. } => {
                        let mut cross = 0.0;
                        for i in 0..d {
                            for j in i + 1..d {
                                cross += self.theta(i, j) * tails[i] * tails[j];
                            }
                        }
                        let value = (any - log_none.exp() * cross).clamp(0.0, 1.0);
                        Ok(EntranceProb {
                            value,
                            error: 0.0,
                            method: EvalMethod::Copula,
                        })
                    }
                }
            }
            RareSet::HalfSpaceSum { .. } | RareSet::IndexSet { .. }
                if set.index_points().len() == 1 =>
            {
                let weights = &set.index_points()[0];
                let theta = match &self.dependence {
                    Dependence::Independent => Some(0.0),
                    Dependence::Fgm { .. } => {
                        let active: Vec<usize> = (0..d)
                            .filter(|&j| weights[j] > 0.0 && self.marginals[j].point_mass_free())
                            .collect();
                        match active.as_slice() {
                            [i, j] => Some(self.theta(*i, *j)),
                            [_] | [] => Some(0.0),
                            _ => None,
                        }
                    }
                };
                let nondegenerate = (0..d)
                    .filter(|&j| weights[j] > 0.0 && self.marginals[j].point_mass_free())
                    .count();
                match theta {
                    Some(theta) if nondegenerate <= 3 => {
                        let r = weighted_sum_tail(&self.marginals, weights, theta, y, options.cells)?;
                        Ok(EntranceProb {
                            value: r.value,
                            error: r.error,
                            method: EvalMethod::Convolution,
                        })
                    }
                    _ => self.mc_entrance_prob(y, set, options),
                }
            }
            _ => self.mc_entrance_prob(y, set, options),
        }
    }

    fn mc_entrance_prob(&self, y: f64, set: &RareSet, options: &FallbackOptions) -> Result<EntranceProb> {
        use rayon::prelude::*;
        const BLOCK: u64 = 4096;
        let factory = StreamFactory::new(options.seed);
        let blocks = options.n.div_ceil(BLOCK);
        let hits: u64 = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut z = vec![0.0; self.dim()];
                let mut hits = 0u64;
                for i in b * BLOCK..((b + 1) * BLOCK).min(options.n) {
                    let mut rng = factory.stream(i);
                    self.sample_into(&mut rng, &mut z);
                    if set.gauge_unchecked(&z) > y {
                        hits += 1;
                    }
                }
                hits
            })
            .sum();
        let p = hits as f64 / options.n as f64;
        Ok(EntranceProb {
            value: p,
            error: (p * (1.0 - p) / options.n as f64).sqrt(),
            method: EvalMethod::McFallback,
        })
    }

    /// Sum of the one-dimensional exceedance probabilities that dominate
    /// `P(Z ∈ y·A)` under the single-big-jump principle.
    pub fn marginal_sum_tail(&self, y: f64, set: &RareSet) -> Result<f64> {
        if set.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: set.dim(),
            });
        }
        match set {
            RareSet::HalfSpaceSum { weights, threshold } => Ok(self
                .marginals
                .iter()
                .zip(weights)
                .filter(|(_, &l)| l > 0.0)
                .map(|(m, l)| m.tail(y * threshold / l))
                .sum()),
            RareSet::ComponentExceed { thresholds } => Ok(self
                .marginals
                .iter()
                .zip(thresholds)
                .map(|(m, c)| m.tail(y * c))
                .sum()),
            RareSet::IndexSet { .. } => Err(Error::Unsupported(
                "marginal-sum asymptotics for explicit index sets".into(),
            )),
        }
    }

    /// `μ(A) = lim P(Z ∈ xA) / B̄(x)` for Pareto marginals with a common
    /// index, relative to a Pareto reference tail with the same index.
    pub fn limit_measure(&self, set: &RareSet, reference: &MarginalModel) -> Result<f64> {
        if set.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: set.dim(),
            });
        }
        let alpha = self.common_pareto_index()?;
        let ref_scale = match *reference {
            MarginalModel::Pareto { alpha: a, scale } if a == alpha => scale,
            _ => {
                return Err(Error::Unsupported(format!(
                    "reference tail must be Pareto with index {alpha}"
                )))
            }
        };
        let points = set.index_points();
        // Components are asymptotically independent: a single large
        // component j drives the gauge to max_p p_j Z_j.
        let mu = self
            .marginals
            .iter()
            .enumerate()
            .map(|(j, m)| {
                let scale = match *m {
                    MarginalModel::Pareto { scale, .. } => scale,
                    _ => unreachable!(),
                };
                let weight = points.iter().map(|p| p[j]).fold(0.0, f64::max);
                (weight * scale / ref_scale).powf(alpha)
            })
            .sum();
        Ok(mu)
    }

    /// The common Pareto index of all marginals.
    pub fn common_pareto_index(&self) -> Result<f64> {
        let mut alpha = None;
        for m in &self.marginals {
            match *m {
                MarginalModel::Pareto { alpha: a, .. } => match alpha {
                    None => alpha = Some(a),
                    Some(b) if b == a => {}
                    Some(_) => {
                        return Err(Error::Unsupported(
                            "regular variation needs one common Pareto index".into(),
                        ))
                    }
                },
                _ => {
                    return Err(Error::Unsupported(
                        "limit measures need Pareto marginals".into(),
                    ))
                }
            }
        }
        Ok(alpha.expect("nonempty"))
    }
}

impl MarginalModel {
    fn point_mass_free(&self) -> bool {
        !matches!(self, MarginalModel::Deterministic { .. })
    }
}

/// Multivariate regular variation data: index, reference tail and the
/// limit measure of each registered set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MrvSpec {
    pub alpha: f64,
    pub reference_tail: MarginalModel,
    pub limit_measure: Vec<(RareSet, f64)>,
}

impl MrvSpec {
    /// MRV data for `model`, with the first marginal as reference tail.
    pub fn from_model(model: &ClaimVectorModel, sets: &[RareSet]) -> Result<Self> {
        let reference = model.marginals()[0];
        Self::with_reference(model, reference, sets)
    }

    pub fn with_reference(
        model: &ClaimVectorModel,
        reference: MarginalModel,
        sets: &[RareSet],
    ) -> Result<Self> {
        let alpha = model.common_pareto_index()?;
        let limit_measure = sets
            .iter()
            .map(|s| Ok((s.clone(), model.limit_measure(s, &reference)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(MrvSpec {
            alpha,
            reference_tail: reference,
            limit_measure,
        })
    }

    pub fn measure(&self, set: &RareSet) -> Result<f64> {
        self.limit_measure
            .iter()
            .find(|(s, _)| s == set)
            .map(|(_, m)| *m)
            .ok_or_else(|| Error::Unsupported("set has no registered limit measure".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heavy_tails::MarginalModel as M;
    use crate::rng::stream;

    const P2: M = M::Pareto {
        alpha: 2.0,
        scale: 1.0,
    };

    fn a1() -> RareSet {
        RareSet::half_space_sum(vec![0.5, 0.5], 1.0).unwrap()
    }

    #[test]
    fn construction_checks() {
        assert!(ClaimVectorModel::iid(M::Deterministic { value: 0.0 }, 2).is_err());
        assert!(ClaimVectorModel::new(vec![P2, P2], Dependence::Fgm { theta: vec![1.5] }).is_err());
        assert!(ClaimVectorModel::new(vec![P2, P2], Dependence::Fgm { theta: vec![] }).is_err());
        // pairwise parameters that are individually fine but jointly invalid
        assert!(ClaimVectorModel::new(
            vec![P2; 3],
            Dependence::Fgm {
                theta: vec![-1.0, -1.0, -1.0]
            }
        )
        .is_err());
        assert!(ClaimVectorModel::new(
            vec![P2; 3],
            Dependence::Fgm {
                theta: vec![0.3, 0.3, 0.3]
            }
        )
        .is_ok());
        let m = ClaimVectorModel::new(vec![P2, M::Deterministic { value: 0.0 }], Dependence::Independent);
        assert!(m.is_ok());
    }

    #[test]
    fn one_dimensional_sampling_reduces_to_marginal() {
        let m = ClaimVectorModel::iid(P2, 1).unwrap();
        let fgm = ClaimVectorModel::new(vec![P2], Dependence::Fgm { theta: vec![] }).unwrap();
        for i in 0..100 {
            let direct = P2.sample(&mut stream(9, i));
            assert_eq!(m.sample(&mut stream(9, i))[0], direct);
            assert_eq!(fgm.sample(&mut stream(9, i))[0], direct);
        }
    }

    #[test]
    fn independent_joint_exceedance() {
        let m = ClaimVectorModel::iid(P2, 2).unwrap();
        let mut rng = stream(1, 0);
        let n = 10_000_000u64;
        let mut hits = 0u64;
        let mut z = [0.0; 2];
        for _ in 0..n {
            m.sample_into(&mut rng, &mut z);
            if z[0] > 10.0 && z[1] > 10.0 {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let se = (1e-4 * (1.0 - 1e-4) / n as f64).sqrt();
        assert!((p - 1e-4).abs() < 4.0 * se, "p = {p}");
    }

    #[test]
    fn fgm_copula_at_centre() {
        let u = M::Exponential { rate: 1.0 };
        let m = ClaimVectorModel::new(vec![u, u], Dependence::Fgm { theta: vec![1.0] }).unwrap();
        let median = 2f64.ln();
        let n = 1_000_000u64;
        let mut rng = stream(2, 0);
        let mut z = [0.0; 2];
        let mut hits = 0u64;
        for _ in 0..n {
            m.sample_into(&mut rng, &mut z);
            if z[0] <= median && z[1] <= median {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let exact: f64 = 0.25 + 0.25 * 0.25;
        assert!((exact - 0.3125).abs() < 1e-15);
        let se = (exact * (1.0 - exact) / n as f64).sqrt();
        assert!((p - exact).abs() < 4.0 * se, "p = {p}");
    }

    #[test]
    fn fgm_marginals_are_preserved() {
        let e = M::Exponential { rate: 1.0 };
        let m = ClaimVectorModel::new(
            vec![e; 3],
            Dependence::Fgm {
                theta: vec![0.3, -0.2, 0.3],
            },
        )
        .unwrap();
        let n = 200_000;
        let mut rng = stream(3, 0);
        let mut cols: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(n)).collect();
        let mut z = [0.0; 3];
        for _ in 0..n {
            m.sample_into(&mut rng, &mut z);
            for j in 0..3 {
                cols[j].push(z[j]);
            }
        }
        for col in &mut cols {
            col.sort_by(f64::total_cmp);
            let ks = col
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let f = e.cdf(x);
                    (f - i as f64 / n as f64).abs().max(((i + 1) as f64 / n as f64 - f).abs())
                })
                .fold(0.0, f64::max);
            assert!(ks < 1.63 / (n as f64).sqrt(), "KS = {ks}");
        }
    }

    #[test]
    fn product_formula_for_component_exceedance() {
        let m = ClaimVectorModel::iid(P2, 2).unwrap();
        let a2 = RareSet::component_exceed(vec![1.0, 1.0]).unwrap();
        let r = m.exact_entrance_prob(10.0, &a2).unwrap();
        assert!((r.value - 0.0199).abs() < 1e-15);
        assert_eq!(r.method, EvalMethod::Product);
        for y in [1.5, 3.0, 10.0, 1e3] {
            let t = P2.tail(y);
            let v = m.exact_entrance_prob(y, &a2).unwrap().value;
            assert!((v - (1.0 - (1.0 - t) * (1.0 - t))).abs() < 1e-15);
        }
    }

    #[test]
    fn one_dimensional_reduction() {
        let m = ClaimVectorModel::iid(P2, 1).unwrap();
        let r = m.exact_entrance_prob(7.0, &RareSet::unit_exceedance()).unwrap();
        assert_eq!(r.value, P2.tail(7.0));
    }

    #[test]
    fn half_space_convolution_matches_mc() {
        let m = ClaimVectorModel::iid(P2, 2).unwrap();
        let conv = m.exact_entrance_prob(50.0, &a1()).unwrap();
        assert_eq!(conv.method, EvalMethod::Convolution);
        let mc = m
            .mc_entrance_prob(
                50.0,
                &a1(),
                &FallbackOptions {
                    n: 10_000_000,
                    seed: 4,
                    ..Default::default()
                },
            )
            .unwrap();
        assert!(
            (conv.value - mc.value).abs() < 4.0 * mc.error + conv.error,
            "{conv:?} vs {mc:?}"
        );
    }

    #[test]
    fn fgm_half_space_matches_mc() {
        let m = ClaimVectorModel::new(vec![P2, P2], Dependence::Fgm { theta: vec![0.8] }).unwrap();
        let conv = m.exact_entrance_prob(5.0, &a1()).unwrap();
        assert_eq!(conv.method, EvalMethod::Convolution);
        let mc = m
            .mc_entrance_prob(5.0, &a1(), &FallbackOptions { n: 2_000_000, seed: 5, ..Default::default() })
            .unwrap();
        assert!((conv.value - mc.value).abs() < 4.0 * mc.error, "{conv:?} vs {mc:?}");
        let a2 = RareSet::component_exceed(vec![1.0, 2.0]).unwrap();
        let cop = m.exact_entrance_prob(3.0, &a2).unwrap();
        assert_eq!(cop.method, EvalMethod::Copula);
        let mc = m
            .mc_entrance_prob(3.0, &a2, &FallbackOptions { n: 2_000_000, seed: 6, ..Default::default() })
            .unwrap();
        assert!((cop.value - mc.value).abs() < 4.0 * mc.error, "{cop:?} vs {mc:?}");
    }

    #[test]
    fn marginal_sum_examples() {
        let m = ClaimVectorModel::iid(P2, 2).unwrap();
        let v = m.marginal_sum_tail(100.0, &a1()).unwrap();
        assert!((v - 5e-5).abs() < 1e-18);
        let a2 = RareSet::component_exceed(vec![1.0, 2.0]).unwrap();
        let v = m.marginal_sum_tail(100.0, &a2).unwrap();
        assert!((v - 1.25e-4).abs() < 1e-18);
        let s = RareSet::index_set(vec![vec![1.0, 1.0]]).unwrap();
        assert!(m.marginal_sum_tail(100.0, &s).is_err());
        let lopsided = RareSet::half_space_sum(vec![1.0, 0.0], 1.0).unwrap();
        assert_eq!(m.marginal_sum_tail(10.0, &lopsided).unwrap(), 0.01);
    }

    #[test]
    fn single_big_jump_ratio_approaches_one() {
        let m = ClaimVectorModel::iid(P2, 2).unwrap();
        let mut prev = f64::INFINITY;
        for y in [1e2, 1e3, 1e4] {
            let exact = m.exact_entrance_prob(y, &a1()).unwrap();
            let gap = (exact.value / m.marginal_sum_tail(y, &a1()).unwrap() - 1.0).abs();
            assert!(gap < prev + exact.error / exact.value, "y = {y}: {gap}");
            prev = gap;
        }
        assert!(prev < 1e-2);
        let fgm = ClaimVectorModel::new(vec![P2, P2], Dependence::Fgm { theta: vec![-0.7] }).unwrap();
        let a2 = RareSet::component_exceed(vec![1.0, 1.0]).unwrap();
        let r = fgm.exact_entrance_prob(1e4, &a2).unwrap().value / fgm.marginal_sum_tail(1e4, &a2).unwrap();
        assert!((r - 1.0).abs() < 1e-7);
    }

    #[test]
    fn limit_measures() {
        let m = ClaimVectorModel::iid(P2, 2).unwrap();
        let a2 = RareSet::component_exceed(vec![1.0, 2.0]).unwrap();
        let mu2 = m.limit_measure(&a2, &P2).unwrap();
        assert!((mu2 - 1.25).abs() < 1e-15);
        let x: f64 = 1e4;
        let oracle = x.powi(2) * m.exact_entrance_prob(x, &a2).unwrap().value;
        assert!((oracle - 1.25).abs() < 1e-3, "{oracle}");

        let mu1 = m.limit_measure(&a1(), &P2).unwrap();
        assert!((mu1 - 0.5).abs() < 1e-15);
        let oracle = x.powi(2) * m.exact_entrance_prob(x, &a1()).unwrap().value;
        assert!((oracle - 0.5).abs() < 1e-3, "{oracle}");

        for k in [0.5f64, 2.0, 10.0] {
            for set in [&a1(), &a2] {
                let scaled = m.limit_measure(&set.scaled(k).unwrap(), &P2).unwrap();
                let base = m.limit_measure(set, &P2).unwrap();
                assert!((scaled - k.powf(-2.0) * base).abs() < 1e-14);
            }
        }
        let mixed = ClaimVectorModel::independent(vec![P2, M::Pareto { alpha: 3.0, scale: 1.0 }]).unwrap();
        assert!(mixed.limit_measure(&a2, &P2).is_err());
        let ln = ClaimVectorModel::iid(M::Lognormal { mu: 0.0, sigma: 1.0 }, 2).unwrap();
        assert!(ln.limit_measure(&a2, &P2).is_err());
    }

    #[test]
    fn mrv_spec_lookup() {
        let m = ClaimVectorModel::iid(P2, 2).unwrap();
        let spec = MrvSpec::from_model(&m, &[a1()]).unwrap();
        assert_eq!(spec.alpha, 2.0);
        assert!((spec.measure(&a1()).unwrap() - 0.5).abs() < 1e-15);
        assert!(spec.measure(&RareSet::component_exceed(vec![1.0, 1.0]).unwrap()).is_err());
    }

    #[test]
    fn fgm_regression_constant() {
        let m = ClaimVectorModel::new(vec![P2, P2], Dependence::Fgm { theta: vec![-0.6] }).unwrap();
        assert!((m.regression_dependence_constant() - 1.6).abs() < 1e-15);
        assert_eq!(ClaimVectorModel::iid(P2, 2).unwrap().regression_dependence_constant(), 1.0);
    }
}
