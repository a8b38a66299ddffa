//! Gauges and scaled-set membership for the three supported rare-set shapes.

use delayed_claims::RareSet;

fn main() -> delayed_claims::Result<()> {
    let sets = [
        ("half-space sum", RareSet::half_space_sum(vec![0.5, 0.5], 1.0)?),
        ("component exceed", RareSet::component_exceed(vec![1.0, 2.0])?),
        ("index set", RareSet::index_set(vec![vec![1.0, 0.0], vec![0.3, 0.7]])?),
    ];
    let points = [[3.0, 1.0], [0.5, 4.0], [2.0, 2.0]];
    for (name, set) in &sets {
        println!("{name}: index points {:?}", set.index_points());
        for z in &points {
            let g = set.gauge(z)?;
            println!(
                "  z = {z:?}: gauge {g:.4}, in 2A: {}, in gauge·A: {}",
                set.member(z, 2.0)?,
                set.member(z, g)?
            );
        }
    }
    Ok(())
}
