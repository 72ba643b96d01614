//! Exhaustive best response against greedy Q-learners in Matching Pennies,
//! for window lengths 1 and 2.

use rfos::games::MatrixGame;
use rfos::metagame::OpponentConfig;
use rfos::oracle::{best_response_return, BestResponseProblem};

fn main() -> rfos::Result<()> {
    for h in [1, 2] {
        let mut p = BestResponseProblem::new(MatrixGame::matching_pennies(), OpponentConfig::default(), h, 200);
        p.episode_len = 100;
        let br = best_response_return(&p)?;
        println!("h = {h}: value {:.4} after {} nodes", br.value, br.nodes);
        for (window, action) in &br.policy {
            println!("  window {window:>3} -> {}", if *action == 0 { "H" } else { "T" });
        }
    }
    Ok(())
}
