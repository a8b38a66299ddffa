//! Asymptotic approximations in both regimes and over finite and infinite
//! horizons, plus the closed forms available under regular variation.

use delayed_claims::asymptotics::{mrv_finite, mrv_infinite, AsymptoticEvaluator, DEFAULT_TOL};
use delayed_claims::claims::{ClaimVectorModel, MrvSpec};
use delayed_claims::renewal::{Horizon, RenewalSpec};
use delayed_claims::scenario::{CountLaw, DelayLaw, Regime, Scenario};
use delayed_claims::{MarginalModel, RareSet};

fn main() -> delayed_claims::Result<()> {
    let pareto = MarginalModel::Pareto { alpha: 2.0, scale: 0.2 };
    let base = Scenario {
        id: "equivalent".into(),
        main_claims: ClaimVectorModel::iid(pareto, 2)?,
        delayed_claims: ClaimVectorModel::iid(pareto, 2)?,
        count: CountLaw::Geometric { p: 0.5 },
        delay: DelayLaw::Exponential { rate: 1.0 },
        renewal: RenewalSpec::poisson(1.0)?,
        rate: 0.05,
        rare_set: RareSet::component_exceed(vec![1.0, 1.0])?,
        regime: Regime::Equivalent,
    }
    .validated()?;
    let negligible = Scenario {
        id: "negligible".into(),
        delayed_claims: ClaimVectorModel::iid(MarginalModel::Exponential { rate: 10.0 }, 2)?,
        regime: Regime::Negligible,
        ..base.clone()
    }
    .validated()?;

    let xs = [20.0, 80.0, 320.0];
    for scn in [&base, &negligible] {
        println!("scenario {}", scn.id);
        let ev = AsymptoticEvaluator::new(scn, xs[0], xs[2], Horizon::Infinite, DEFAULT_TOL)?;
        let sets = [scn.rare_set.clone()];
        let mrv_f = MrvSpec::from_model(&scn.main_claims, &sets)?;
        let mrv_g = match scn.regime {
            Regime::Equivalent => Some(MrvSpec::from_model(&scn.delayed_claims, &sets)?),
            Regime::Negligible => None,
        };
        for &x in &xs {
            for h in [Horizon::Finite(5.0), Horizon::Finite(50.0), Horizon::Infinite] {
                let v = ev.at(x, h)?;
                let closed = match h {
                    Horizon::Finite(t) => mrv_finite(scn, x, t, &mrv_f, mrv_g.as_ref(), DEFAULT_TOL)?,
                    Horizon::Infinite => mrv_infinite(scn, x, &mrv_f, mrv_g.as_ref())?,
                };
                println!(
                    "  x={x:<5} t={:<4} {:<8} {:.6e} (main {:.3e} + delayed {:.3e}, tol {:.0e})   {:<8} {:.6e}",
                    h.to_string(),
                    v.formula.tag(),
                    v.value,
                    v.main_term,
                    v.delayed_term,
                    v.achieved_tol,
                    closed.formula.tag(),
                    closed.value
                );
            }
        }
    }
    Ok(())
}
