//! Rare sets and their gauge functions.
//!
//! Every supported set is open, increasing, and bounded away from the
//! origin. Membership of a scaled set `x·A` reduces to a scalar comparison
//! through the gauge `Z_A = sup{u : z ∈ u·A}`, which is positively
//! homogeneous of degree one.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A rare set, described through a finite index set of linear functionals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RareSet {
    /// `{y : Σ l_j y_j > c}` with nonnegative weights summing to one.
    HalfSpaceSum { weights: Vec<f64>, threshold: f64 },
    /// `{y : y_j > c_j for some j}`.
    ComponentExceed { thresholds: Vec<f64> },
    /// `{y : max_p p·y > 1}` over an explicit finite list of points.
    IndexSet { points: Vec<Vec<f64>> },
}

impl RareSet {
    pub fn half_space_sum(weights: Vec<f64>, threshold: f64) -> Result<Self> {
        let set = RareSet::HalfSpaceSum { weights, threshold };
        set.validate()?;
        Ok(set)
    }

    pub fn component_exceed(thresholds: Vec<f64>) -> Result<Self> {
        let set = RareSet::ComponentExceed { thresholds };
        set.validate()?;
        Ok(set)
    }

    pub fn index_set(points: Vec<Vec<f64>>) -> Result<Self> {
        let set = RareSet::IndexSet { points };
        set.validate()?;
        Ok(set)
    }

    /// The one-dimensional set `(1, ∞)`.
    pub fn unit_exceedance() -> Self {
        RareSet::ComponentExceed {
            thresholds: vec![1.0],
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            RareSet::HalfSpaceSum { weights, .. } => weights.len(),
            RareSet::ComponentExceed { thresholds } => thresholds.len(),
            RareSet::IndexSet { points } => points.first().map_or(0, Vec::len),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            RareSet::HalfSpaceSum { weights, threshold } => {
                if weights.is_empty() {
                    return Err(invalid("weights", "must be nonempty"));
                }
                if weights.iter().any(|&l| !(l >= 0.0) || !l.is_finite()) {
                    return Err(invalid("weights", "must be finite and nonnegative"));
                }
                let sum: f64 = weights.iter().sum();
                if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
                    return Err(invalid("weights", format!("must sum to 1, got {sum}")));
                }
                if !(*threshold > 0.0) || !threshold.is_finite() {
                    return Err(invalid("threshold", "must be finite and positive"));
                }
            }
            RareSet::ComponentExceed { thresholds } => {
                if thresholds.is_empty() {
                    return Err(invalid("thresholds", "must be nonempty"));
                }
                if thresholds.iter().any(|&c| !(c > 0.0) || !c.is_finite()) {
                    return Err(invalid("thresholds", "must be finite and positive"));
                }
            }
            RareSet::IndexSet { points } => {
                let d = match points.first() {
                    Some(p) if !p.is_empty() => p.len(),
                    _ => return Err(invalid("points", "must be a nonempty list of nonempty vectors")),
                };
                for p in points {
                    if p.len() != d {
                        return Err(Error::DimensionMismatch {
                            expected: d,
                            found: p.len(),
                        });
                    }
                    if p.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                        return Err(invalid("points", "coordinates must be finite and nonnegative"));
                    }
                    if !p.iter().any(|&v| v > 0.0) {
                        return Err(invalid("points", "every point needs a positive coordinate"));
                    }
                }
            }
        }
        Ok(())
    }

    /// Linear functionals whose maximum is the gauge.
    ///
    /// `ComponentExceed` uses the scaled basis vectors `e_j / c_j`, which
    /// gives the maximum form `max_j z_j / c_j`.
    pub fn index_points(&self) -> Vec<Vec<f64>> {
        match self {
            RareSet::HalfSpaceSum { weights, threshold } => {
                vec![weights.iter().map(|l| l / threshold).collect()]
            }
            RareSet::ComponentExceed { thresholds } => {
                let d = thresholds.len();
                (0..d)
                    .map(|j| {
                        let mut p = vec![0.0; d];
                        p[j] = 1.0 / thresholds[j];
                        p
                    })
                    .collect()
            }
            RareSet::IndexSet { points } => points.clone(),
        }
    }

    /// The gauge `sup{u : z ∈ u·A}`; zero at the origin.
    pub fn gauge(&self, z: &[f64]) -> Result<f64> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: z.len(),
            });
        }
        Ok(self.gauge_unchecked(z))
    }

    /// Gauge without the dimension check; used in simulation hot loops.
    #[inline]
    pub(crate) fn gauge_unchecked(&self, z: &[f64]) -> f64 {
        match self {
            RareSet::HalfSpaceSum { weights, threshold } => {
                weights.iter().zip(z).map(|(l, v)| l * v).sum::<f64>() / threshold
            }
            RareSet::ComponentExceed { thresholds } => thresholds
                .iter()
                .zip(z)
                .map(|(c, v)| v / c)
                .fold(0.0, f64::max),
            RareSet::IndexSet { points } => points
                .iter()
                .map(|p| p.iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
                .fold(0.0, f64::max),
        }
    }

    /// Whether `z ∈ x·A`. The set is open, so the boundary is excluded.
    pub fn member(&self, z: &[f64], x: f64) -> Result<bool> {
        if !(x > 0.0) {
            return Err(invalid("x", format!("scale must be positive, got {x}")));
        }
        Ok(self.gauge(z)? > x)
    }

    /// The set `k·A`.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(invalid("k", "scale factor must be finite and positive"));
        }
        Ok(match self {
            RareSet::HalfSpaceSum { weights, threshold } => RareSet::HalfSpaceSum {
                weights: weights.clone(),
                threshold: threshold * k,
            },
            RareSet::ComponentExceed { thresholds } => RareSet::ComponentExceed {
                thresholds: thresholds.iter().map(|c| c * k).collect(),
            },
            RareSet::IndexSet { points } => RareSet::IndexSet {
                points: points
                    .iter()
                    .map(|p| p.iter().map(|v| v / k).collect())
                    .collect(),
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn a1() -> RareSet {
        RareSet::half_space_sum(vec![0.5, 0.5], 1.0).unwrap()
    }

    fn a2() -> RareSet {
        RareSet::component_exceed(vec![1.0, 2.0]).unwrap()
    }

    #[test]
    fn gauge_examples() {
        assert_eq!(a1().gauge(&[2.0, 4.0]).unwrap(), 3.0);
        assert_eq!(a2().gauge(&[2.0, 4.0]).unwrap(), 2.0);
        assert_eq!(a1().gauge(&[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(a2().gauge(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn membership_is_strict() {
        assert!(a1().member(&[2.0, 4.0], 2.9).unwrap());
        assert!(!a1().member(&[2.0, 4.0], 3.0).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(
            a1().gauge(&[1.0, 2.0, 3.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(a1().member(&[1.0, 1.0], 0.0).is_err());
        assert!(a1().member(&[1.0, 1.0], -1.0).is_err());
        assert!(RareSet::half_space_sum(vec![0.5, 0.6], 1.0).is_err());
        assert!(RareSet::half_space_sum(vec![1.2, -0.2], 1.0).is_err());
        assert!(RareSet::component_exceed(vec![1.0, 0.0]).is_err());
        assert!(RareSet::index_set(vec![vec![0.0, 0.0]]).is_err());
        assert!(RareSet::index_set(vec![]).is_err());
    }

    #[test]
    fn component_exceed_is_max_not_sum() {
        let set = RareSet::component_exceed(vec![1.0, 1.0]).unwrap();
        assert_eq!(set.gauge(&[3.0, 3.0]).unwrap(), 3.0);
        let explicit = RareSet::index_set(set.index_points()).unwrap();
        assert_eq!(explicit.gauge(&[3.0, 5.0]).unwrap(), 5.0);
    }

    #[test]
    fn brute_force_grid_matches_set_definition() {
        let (l, c) = ([0.5, 0.5], 1.0);
        let thresholds = [1.0, 2.0];
        let (s1, s2) = (a1(), a2());
        for x in [0.5, 1.0, 2.9, 4.0] {
            for i in 0..=100 {
                for j in 0..=100 {
                    let z = [i as f64 * 0.1, j as f64 * 0.1];
                    let in_a1 = l[0] * z[0] + l[1] * z[1] > x * c;
                    let in_a2 = z[0] > x * thresholds[0] || z[1] > x * thresholds[1];
                    assert_eq!(s1.member(&z, x).unwrap(), in_a1, "A1 at {z:?}, x={x}");
                    assert_eq!(s2.member(&z, x).unwrap(), in_a2, "A2 at {z:?}, x={x}");
                }
            }
        }
    }

    fn any_set() -> impl Strategy<Value = RareSet> {
        prop_oneof![
            (0.0..1.0f64, 0.1..5.0f64)
                .prop_map(|(l, c)| RareSet::half_space_sum(vec![l, 1.0 - l], c).unwrap()),
            (0.1..5.0f64, 0.1..5.0f64)
                .prop_map(|(a, b)| RareSet::component_exceed(vec![a, b]).unwrap()),
            proptest::collection::vec((0.0..3.0f64, 0.01..3.0f64), 1..4).prop_map(|ps| {
                RareSet::index_set(ps.into_iter().map(|(a, b)| vec![a, b]).collect()).unwrap()
            }),
        ]
    }

    proptest! {
        #[test]
        fn gauge_is_homogeneous(set in any_set(), z0 in 0.0..50.0f64, z1 in 0.0..50.0f64, k in 0.01..100.0f64) {
            let g = set.gauge(&[z0, z1]).unwrap();
            let gk = set.gauge(&[k * z0, k * z1]).unwrap();
            prop_assert!((gk - k * g).abs() <= 1e-12 * gk.abs().max(1.0));
        }

        #[test]
        fn gauge_is_monotone(set in any_set(), z0 in 0.0..50.0f64, z1 in 0.0..50.0f64, d0 in 0.0..5.0f64, d1 in 0.0..5.0f64) {
            let g = set.gauge(&[z0, z1]).unwrap();
            let g2 = set.gauge(&[z0 + d0, z1 + d1]).unwrap();
            prop_assert!(g <= g2);
        }

        #[test]
        fn scaling_closure(set in any_set(), z0 in 0.0..50.0f64, z1 in 0.0..50.0f64, k in 0.1..10.0f64, x in 0.1..10.0f64) {
            // z ∈ x·(kA) ⇔ z/k ∈ x·A
            let scaled = set.scaled(k).unwrap();
            let lhs = scaled.member(&[z0, z1], x).unwrap();
            let rhs = set.member(&[z0 / k, z1 / k], x).unwrap();
            let g = set.gauge(&[z0 / k, z1 / k]).unwrap();
            if (g - x).abs() > 1e-9 * x {
                prop_assert_eq!(lhs, rhs);
            }
        }
    }
}
