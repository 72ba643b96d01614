//! The simulation lemma on random perturbed pairs, then a two-state pair on
//! which the bound is nearly tight, so a smaller transition term fails.

use rfos::bounds::simulation_gap;
use rfos::oracle::{check_simulation_lemma, perturb, random_mdp, ExplicitMdp};
use rfos::seeded_rng;

fn main() -> rfos::Result<()> {
    let mut rng = seeded_rng(1);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let m = random_mdp(&mut rng, 2 + i % 7, 2 + i % 2, 0.8)?;
        let m_hat = perturb(&m, &mut rng, 0.1, 0.3)?;
        let policy: Vec<usize> = (0..m.n_states).map(|s| (s * 7 + i) % m.n_actions).collect();
        let c = check_simulation_lemma(&m, &m_hat, &policy)?;
        assert!(c.holds, "pair {i}: {c:?}");
        worst = worst.max(c.lhs / c.rhs);
    }
    println!("1000 random pairs hold, worst lhs/rhs {worst:.3}");

    // state 0 pays 1 and leaks into an absorbing zero state with probability p
    let gamma = 0.9;
    let pair = |p: f64| ExplicitMdp::new(2, 1, vec![1.0 - p, p, 0.0, 1.0], vec![1.0, 0.0], gamma);
    println!("{:>8} {:>10} {:>10} {:>12}", "p", "lhs", "rhs", "rhs, ε_P/2");
    for p in [0.1, 0.01, 0.001] {
        let c = check_simulation_lemma(&pair(0.0)?, &pair(p)?, &[0, 0])?;
        let halved = simulation_gap(c.eps_r, c.eps_p / 2.0, gamma, 1.0 / (1.0 - gamma));
        println!(
            "{p:>8} {:>10.5} {:>10.5} {halved:>12.5}{}",
            c.lhs,
            c.rhs,
            if c.lhs > halved { "  violated" } else { "" }
        );
    }
    Ok(())
}
