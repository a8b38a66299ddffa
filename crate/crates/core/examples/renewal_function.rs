//! Renewal functions and discounted renewal integrals for Poisson, Erlang
//! and uniform inter-arrival laws, compared with simulated arrival counts.

use delayed_claims::renewal::{
    integrate_against_renewal, renewal_function, simulate_arrivals, Horizon, Interarrival, RenewalSpec,
};
use delayed_claims::rng::StreamFactory;

fn main() -> delayed_claims::Result<()> {
    let specs = [
        ("poisson(1)", RenewalSpec::poisson(1.0)?),
        ("erlang(2, 2)", RenewalSpec::new(Interarrival::Erlang { k: 2, rate: 2.0 })?),
        ("uniform(0.5, 1.5)", RenewalSpec::new(Interarrival::Uniform { a: 0.5, b: 1.5 })?),
    ];
    let r = 0.05;
    let reps = 20_000;
    for (name, spec) in &specs {
        println!("{name}");
        for t in [1.0, 5.0, 20.0] {
            let factory = StreamFactory::new(9);
            let mean_count: f64 = (0..reps)
                .map(|i| simulate_arrivals(spec, t, &mut factory.stream(i)).len() as f64)
                .sum::<f64>()
                / reps as f64;
            println!("  λ({t:>4}) = {:.5}   simulated {:.5}", renewal_function(spec, t)?, mean_count);
        }
        let discounted = integrate_against_renewal(|s| (-r * s).exp(), spec, Horizon::Infinite, 1e-6)?;
        let l = spec.interarrival.laplace(r);
        println!(
            "  ∫ e^(-rs) λ(ds) = {:.6} (truncated at {:?}), closed form {:.6}",
            discounted.value,
            discounted.truncation,
            l / (1.0 - l)
        );
    }
    Ok(())
}
