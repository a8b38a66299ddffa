//! Exact entrance probabilities `P(Y ∈ yA)` for independent and FGM claim
//! vectors, checked against plain sampling.

use delayed_claims::claims::{ClaimVectorModel, Dependence};
use delayed_claims::rng::stream;
use delayed_claims::{MarginalModel, RareSet};

fn main() -> delayed_claims::Result<()> {
    let pareto = MarginalModel::Pareto { alpha: 2.0, scale: 1.0 };
    let weibull = MarginalModel::Weibull { shape: 0.6, scale: 1.0 };
    let models = [
        ("independent", ClaimVectorModel::independent(vec![pareto, weibull])?),
        ("fgm θ=0.8", ClaimVectorModel::new(vec![pareto, weibull], Dependence::Fgm { theta: vec![0.8] })?),
    ];
    let sets = [
        ("max exceed", RareSet::component_exceed(vec![1.0, 1.0])?),
        ("mean exceed", RareSet::half_space_sum(vec![0.5, 0.5], 1.0)?),
    ];
    let n = 400_000;
    for (name, model) in &models {
        for (set_name, set) in &sets {
            for y in [5.0, 20.0] {
                let exact = model.exact_entrance_prob(y, set)?;
                let mut rng = stream(42, 0);
                let mut hits = 0u64;
                for _ in 0..n {
                    if set.member(&model.sample(&mut rng), y)? {
                        hits += 1;
                    }
                }
                println!(
                    "{name:<12} {set_name:<12} y={y:<4} exact {:.5e} ({}, err {:.1e})  sampled {:.5e}",
                    exact.value,
                    exact.method.tag(),
                    exact.error,
                    hits as f64 / n as f64
                );
            }
        }
    }
    Ok(())
}
