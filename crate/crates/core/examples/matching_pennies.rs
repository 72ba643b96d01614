//! One R-FOS run on Matching Pennies with the default settings, compared to
//! the exhaustive best response against the same opponent.
//!
//!     cargo run --release --example matching_pennies [seed]

use rfos::games::MatrixGame;
use rfos::harness::{run_cell, RunConfig};
use rfos::metagame::OpponentConfig;
use rfos::oracle::{best_response_return, BestResponseProblem};

fn main() -> rfos::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = RunConfig::default();
    let h = cfg.meta.h;
    let rec = run_cell(&cfg, h, seed, None)?;

    println!(
        "h = {h}, m = {}, {} steps, seed {seed}",
        rec.summary.m, rec.summary.total_steps
    );
    println!("{:>6} {:>10} {:>10}", "step", "reward", "known");
    let block = rec.rows.len() / 10;
    for chunk in rec.rows.chunks(block) {
        let mean = chunk.iter().map(|r| r.reward_norm).sum::<f64>() / chunk.len() as f64;
        let last = chunk.last().unwrap();
        println!("{:>6} {mean:>10.3} {:>10.3}", last.step, last.known_frac);
    }

    let mut problem = BestResponseProblem::new(MatrixGame::matching_pennies(), OpponentConfig::default(), h, 200);
    problem.episode_len = cfg.meta.h_meta;
    let br = best_response_return(&problem)?;
    println!(
        "final mean reward {:.3}, best response {:.3}, ratio {:.3}",
        rec.summary.final_mean_reward,
        br.value,
        rec.summary.final_mean_reward / br.value
    );
    println!("value iteration ran {} times", rec.summary.vi_count);
    Ok(())
}
