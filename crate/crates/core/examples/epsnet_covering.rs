//! Snaps random points onto uniform grids and reports the worst distance
//! next to the covering radius.

use rand::Rng;
use rfos::epsnet::{cardinality_bound, EpsNet};
use rfos::seeded_rng;

fn main() -> rfos::Result<()> {
    let mut rng = seeded_rng(7);
    println!("{:>3} {:>6} {:>12} {:>10} {:>10}", "D", "λ", "points", "α", "worst");
    for dim in [1usize, 2, 3, 8] {
        for lambda in [0.1, 0.25, 0.5] {
            let net = EpsNet::unit(dim, lambda)?;
            let mut worst = 0.0f64;
            for _ in 0..20_000 {
                let x: Vec<f64> = (0..dim).map(|_| rng.gen()).collect();
                let snapped = net.snap(&x)?;
                let d = x
                    .iter()
                    .zip(&snapped.point)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
                worst = worst.max(d);
            }
            println!(
                "{dim:>3} {lambda:>6} {:>12} {:>10.4} {worst:>10.4}",
                net.cardinality()?,
                net.alpha()
            );
        }
    }
    // the bound used in the analysis counts a ball of radius √D
    println!("size bound, D = 4, R = 2, λ = 1: {}", cardinality_bound(4, 2.0, 1.0)?);
    Ok(())
}
