//! Value error of coarse grids on a smooth continuous MDP, against a fine
//! reference grid, with the transition-gap constant for each spacing.

use rfos::oracle::{family_discretisation_errors, loglog_slope, transition_gap, SyntheticContinuousMdp};
use rfos::seeded_rng;

fn main() -> rfos::Result<()> {
    let lambdas = [0.25, 0.125, 0.0625, 0.03125];
    let mdp = SyntheticContinuousMdp::random(&mut seeded_rng(0), 3, 0.8)?;
    println!(
        "reward Lipschitz {:.3}, density Lipschitz {:.3}",
        mdp.reward_lipschitz(),
        mdp.density_lipschitz()
    );
    for &l in &lambdas {
        let g = transition_gap(&mdp, l, 2048)?;
        println!(
            "λ = {l:<8} α = {:.4}  density gap {:.4}  gap/α {:.3}",
            g.alpha, g.gap, g.k_p
        );
    }

    let seeds: Vec<u64> = (0..10).collect();
    let errs = family_discretisation_errors(&seeds, 3, 0.8, &lambdas, 1.0 / 256.0)?;
    println!("mean over {} members:", seeds.len());
    for (l, e) in &errs {
        println!("  λ = {l:<8} ‖V_λ − V_ref‖∞ = {e:.5}");
    }
    println!("log-log slope {:.3}", loglog_slope(&errs)?);
    Ok(())
}
