//! Two greedy Q-learners playing Matching Pennies against each other.

use rfos::games::{rollout, MatrixGame, Policy};
use rfos::learners::{ActionRule, NaiveLearner, QTable};
use rfos::seeded_rng;

fn main() -> rfos::Result<()> {
    let game = MatrixGame::matching_pennies();
    let mut players: Vec<NaiveLearner> = (0..2)
        .map(|_| {
            Ok(NaiveLearner {
                q: QTable::new(1, 2, 0.5, 0.1)?,
                rule: ActionRule::Greedy,
            })
        })
        .collect::<rfos::Result<_>>()?;
    let mut rng = seeded_rng(0);
    for ep in 0..12 {
        let traj = {
            let policies: Vec<&dyn Policy> = players.iter().map(|p| p as &dyn Policy).collect();
            rollout(&game, &policies, &mut rng)?
        };
        let step = &traj.steps[0];
        for (i, p) in players.iter_mut().enumerate() {
            p.q.naive_update(0, step.action.player(i), step.normalized_rewards[i], None)?;
        }
        println!(
            "episode {ep:>2}: actions {:?}, rewards {:?}, Q0 {:?}",
            step.action.actions(),
            step.raw_rewards,
            players[0].q.row(0)
        );
    }
    Ok(())
}
