//! Lower Karamata index of several claim laws: closed form next to the
//! least-squares estimate from the tail on a finite grid.

use delayed_claims::heavy_tails::{estimate_karamata_lower, karamata_lower_analytic, KaramataConfig};
use delayed_claims::MarginalModel;

fn main() -> delayed_claims::Result<()> {
    let laws = [
        MarginalModel::Pareto { alpha: 1.5, scale: 1.0 },
        MarginalModel::Pareto { alpha: 3.0, scale: 1.0 },
        MarginalModel::Lognormal { mu: 0.0, sigma: 1.0 },
        MarginalModel::Weibull { shape: 0.5, scale: 1.0 },
        MarginalModel::Exponential { rate: 1.0 },
    ];
    let config = KaramataConfig::with_x_range(10.0, 1e4);
    println!("{:<55} {:>12} {:>12} {:>10}", "law", "analytic K-", "estimate", "J-");
    for law in &laws {
        let exact = karamata_lower_analytic(law)?;
        // the exponential tail underflows on this range; the error names the usable limit
        let fitted = match estimate_karamata_lower(|x| law.tail(x), &config) {
            Ok(report) => format!("{:.4}", report.karamata_lower),
            Err(err) => format!("({err})"),
        };
        println!(
            "{:<55} {:>12.4} {:>12} {:>10}",
            format!("{law:?}"),
            exact.karamata_lower,
            fitted,
            exact.matuszewska_lower.map_or("-".into(), |j| format!("{j:.3}"))
        );
    }
    Ok(())
}
