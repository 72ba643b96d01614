//! Policy-parameter meta-states on a single-state game with a coarse grid:
//! meta-state codes round-trip, and a short R-FOS run.

use rfos::games::MatrixGame;
use rfos::harness::{run_cell, RunConfig};
use rfos::metagame::{Case, MetaAction, MetaConfig, MetaGame, OpponentConfig};
use rfos::seeded_rng;

fn main() -> rfos::Result<()> {
    let config = MetaConfig {
        case: Case::I,
        lambda: 0.5,
        ..MetaConfig::default()
    };
    let mut game = MetaGame::new(MatrixGame::matching_pennies(), config, &OpponentConfig::default())?;
    println!(
        "{} meta-states, {} meta-actions",
        game.n_states(),
        game.n_meta_actions()
    );
    let mut rng = seeded_rng(0);
    let mut state = game.reset()?.clone();
    for a in 0..game.n_meta_actions() {
        let action = game.action_from_code(a)?;
        let out = game.meta_step(&action, &mut rng)?;
        let code = game.encode(&out.next_state)?;
        assert_eq!(game.decode(code)?, out.next_state);
        if let MetaAction::FullPolicy { grid } = &action {
            println!("action {grid:?}: reward {:.2}, next state {code}", out.reward);
        }
        state = out.next_state;
    }
    println!("last state {:?}", state);

    let mut cfg = RunConfig::default();
    cfg.meta.case = Case::I;
    cfg.meta.h_meta = 50;
    cfg.rmax.m = 5;
    cfg.run.total_steps = Some(2000);
    let rec = run_cell(&cfg, 2, 0, None)?;
    println!(
        "2000 meta-steps: {} pairs known, final mean reward {:.3}",
        rec.model.known_pairs(),
        rec.summary.final_mean_reward
    );
    Ok(())
}
