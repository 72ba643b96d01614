//! R-MAX on small random MDPs: value of the learned greedy policy against
//! the optimum, and the value-iteration trigger log.

use rfos::learners::ActionRule;
use rfos::oracle::{random_mdp, run_rmax};
use rfos::rmax::RmaxConfig;
use rfos::seeded_rng;

fn main() -> rfos::Result<()> {
    let cfg = RmaxConfig {
        m: 50,
        ..RmaxConfig::default()
    };
    println!("sweeps per value iteration: {}", cfg.sweeps());
    let mut rng = seeded_rng(3);
    for i in 0..8 {
        let n = 2 + i % 7;
        let k = 2 + i % 2;
        let mdp = random_mdp(&mut rng, n, k, 0.8)?;
        let (model, pi) = run_rmax(&mdp, cfg, 200 * n * k * cfg.m as usize, &ActionRule::Greedy, i as u64)?;
        let (v_star, _) = mdp.exact_vi(1e-12)?;
        let v = mdp.policy_value(&pi)?;
        let gap = v
            .iter()
            .zip(&v_star)
            .map(|(a, b)| b - a)
            .fold(f64::NEG_INFINITY, f64::max);
        println!(
            "{n} states x {k} actions: known {}/{}, vi runs {}, worst V* - V {gap:.4}",
            model.known_pairs(),
            n * k,
            model.vi_log().len()
        );
    }
    Ok(())
}
