//! Distribution of the first entrance time into `xA` given entrance before
//! the truncation horizon, against the limit law `1 - e^{-αrt}`.

use delayed_claims::asymptotics::entrance_time_bound;
use delayed_claims::claims::ClaimVectorModel;
use delayed_claims::mc::{entrance_times, ks_distance, DEFAULT_TRUNCATION_TOL};
use delayed_claims::renewal::RenewalSpec;
use delayed_claims::scenario::{CountLaw, DelayLaw, Regime, Scenario};
use delayed_claims::{MarginalModel, RareSet};

fn main() -> delayed_claims::Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(Ok(4_000_000), |s| s.parse()).expect("replications");
    let scn = Scenario {
        id: "sparse-arrivals".into(),
        main_claims: ClaimVectorModel::iid(MarginalModel::Pareto { alpha: 2.0, scale: 1.0 }, 2)?,
        delayed_claims: ClaimVectorModel::iid(MarginalModel::Exponential { rate: 10.0 }, 2)?,
        count: CountLaw::Geometric { p: 0.5 },
        delay: DelayLaw::Exponential { rate: 1.0 },
        renewal: RenewalSpec::poisson(0.02)?,
        rate: 0.05,
        rare_set: RareSet::component_exceed(vec![1.0, 1.0])?,
        regime: Regime::Negligible,
    }
    .validated()?;
    let alpha = scn.min_karamata_index().expect("regularly varying main claims");
    let x = 40.0;
    let sample = entrance_times(&scn, x, n, 17, DEFAULT_TRUNCATION_TOL)?;
    println!("{} entrances out of {} paths before T* = {:.1}", sample.times.len(), n, sample.truncation);
    for k in 1..=8 {
        let t = sample.truncation * k as f64 / 8.0;
        let (p, se) = sample.conditional_cdf(t);
        println!("  t={t:>6.1}  P(τ ≤ t | τ < T*) = {p:.4} ± {se:.4}   limit {:.4}", entrance_time_bound(t, alpha, scn.rate)?);
    }
    let ks = ks_distance(&sample.times, |t| -(-alpha * scn.rate * t).exp_m1());
    println!("KS distance to the limit law: {ks:.4}");
    Ok(())
}
