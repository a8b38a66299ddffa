//! Closure properties of the heavy-tailed classes: tail additivity, the
//! dominant-tail rule, max-sum equivalence, the Kesten bound and the
//! product-convolution index inequality.

use delayed_claims::claims::ClaimVectorModel;
use delayed_claims::closure::{
    check_max_sum_equivalence, check_tail_additivity, kesten_probe, product_convolution_check, ClosureReport,
    KestenOptions, WeightLaw,
};
use delayed_claims::heavy_tails::log_grid;
use delayed_claims::{MarginalModel, RareSet};

fn show(report: &ClosureReport) {
    println!("{} (band {:?}): {}", report.property.tag(), report.band, if report.pass { "pass" } else { "fail" });
    for row in &report.rows {
        let param = row.param.map_or(String::new(), |p| format!(" param={p}"));
        println!("  x={:<8}{param} ratio {:.4}{}", row.x, row.ratio, if row.in_band { "" } else { "  (out of band)" });
    }
    for (k, v) in &report.constants {
        println!("  {k} = {v}");
    }
    for w in &report.warnings {
        println!("  warning: {w}");
    }
}

fn main() -> delayed_claims::Result<()> {
    let p2 = MarginalModel::Pareto { alpha: 2.0, scale: 1.0 };
    let p3 = MarginalModel::Pareto { alpha: 3.0, scale: 1.0 };
    let ln = MarginalModel::Lognormal { mu: 0.0, sigma: 1.0 };
    let xs = [10.0, 30.0, 100.0, 300.0, 1000.0];
    show(&check_tail_additivity(&p2, &p3, &xs, false, None)?);
    show(&check_tail_additivity(&ln, &ln, &[10.0, 100.0, 1e3, 1e4, 1e5], false, None)?);
    show(&check_tail_additivity(&p2, &MarginalModel::Exponential { rate: 1.0 }, &xs, true, None)?);
    show(&check_max_sum_equivalence(&p2, &p3, &xs)?);
    // one dimension uses exact n-fold convolutions; higher dimensions simulate
    let model = ClaimVectorModel::iid(p2, 1)?;
    let set = RareSet::component_exceed(vec![1.0])?;
    let options = KestenOptions { replications: 2_000_000, seed: 3 };
    show(&kesten_probe(&model, &set, 0.5, 8, &[10.0, 100.0, 1000.0, 10000.0], &options)?);
    let weight = WeightLaw::Uniform { a: 0.25, b: 1.0 };
    show(&product_convolution_check(&p2, &weight, &[1.5, 2.0, 4.0, 8.0], &log_grid(10.0, 1e4, 64))?);
    Ok(())
}
