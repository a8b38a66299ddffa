//! Monte Carlo against the asymptotic approximation on an `(x, t)` grid and
//! the worst relative deviation over horizons at each level.

use delayed_claims::asymptotics::DEFAULT_TOL;
use delayed_claims::claims::ClaimVectorModel;
use delayed_claims::mc::uniformity_profile;
use delayed_claims::renewal::RenewalSpec;
use delayed_claims::scenario::{CountLaw, DelayLaw, Regime, Scenario};
use delayed_claims::{MarginalModel, RareSet};

fn main() -> delayed_claims::Result<()> {
    let n: u64 = std::env::args().nth(1).map_or(Ok(1_000_000), |s| s.parse()).expect("replications");
    let scn = Scenario {
        id: "negligible".into(),
        main_claims: ClaimVectorModel::iid(MarginalModel::Pareto { alpha: 2.0, scale: 0.2 }, 2)?,
        delayed_claims: ClaimVectorModel::iid(MarginalModel::Exponential { rate: 10.0 }, 2)?,
        count: CountLaw::Geometric { p: 0.5 },
        delay: DelayLaw::Exponential { rate: 1.0 },
        renewal: RenewalSpec::poisson(1.0)?,
        rate: 0.05,
        rare_set: RareSet::component_exceed(vec![1.0, 1.0])?,
        regime: Regime::Negligible,
    }
    .validated()?;
    let profile = uniformity_profile(&scn, &[20.0, 40.0, 80.0], &[2.0, 6.0, 10.0], n, 5, DEFAULT_TOL)?;
    for row in &profile.rows {
        println!(
            "x={:<4} t={:<3} mc {:.4e} ± {:.1e}  asym {:.4e}  ratio {:.3} [{:.3}, {:.3}]",
            row.x, row.t.to_string(), row.mc.p_hat, row.mc.std_err, row.asym.value, row.ratio, row.ratio_ci.0, row.ratio_ci.1
        );
    }
    for s in &profile.summary {
        println!("x={:<4} sup_t |ratio-1| = {:.3} at t={} (se {:.3})", s.x, s.sup_abs_dev, s.t_at_sup, s.std_err);
    }
    println!("deviation nonincreasing in x within 2 se: {}", profile.is_nonincreasing_within(2.0));
    Ok(())
}
