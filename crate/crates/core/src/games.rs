//! Inner stochastic games: payoff lookup, reward normalisation and rollouts.
//!
//! Games are small lookup tables. A joint action is encoded in mixed radix
//! with player 0 as the most significant digit, so in Matching Pennies the
//! joint actions `(H,H), (H,T), (T,H), (T,T)` have codes `0..4`.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{check_index, invalid, Error, Result};

pub const HEADS: usize = 0;
pub const TAILS: usize = 1;

/// One action index per player.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct JointAction(Vec<usize>);

impl JointAction {
    pub fn new(actions: Vec<usize>) -> Self {
        JointAction(actions)
    }

    pub fn actions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn player(&self, i: usize) -> usize {
        self.0[i]
    }
}

/// Anything that picks an inner action for one player.
pub trait Policy {
    fn act(&self, state: usize, rng: &mut dyn RngCore) -> usize;
}

/// Always plays the same action, whatever the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedAction(pub usize);

impl Policy for FixedAction {
    fn act(&self, _state: usize, _rng: &mut dyn RngCore) -> usize {
        self.0
    }
}

/// Plays uniformly at random.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UniformRandom(pub usize);

impl Policy for UniformRandom {
    fn act(&self, _state: usize, rng: &mut dyn RngCore) -> usize {
        rng.gen_range(0..self.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub rewards: Vec<f64>,
    pub next_state: usize,
}

/// A finite general-sum stochastic game with deterministic transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixGame {
    name: String,
    n_states: usize,
    actions: Vec<usize>,
    /// `[state][joint][player]`, flattened.
    payoff: Vec<f64>,
    /// `[state][joint]`, flattened.
    transitions: Vec<usize>,
    h_inner: usize,
}

impl MatrixGame {
    /// Builds a game from a flattened payoff tensor `[state][joint][player]`
    /// and a transition table `[state][joint]`.
    pub fn new(
        name: impl Into<String>,
        n_states: usize,
        actions: Vec<usize>,
        payoff: Vec<f64>,
        transitions: Vec<usize>,
        h_inner: usize,
    ) -> Result<Self> {
        if n_states == 0 {
            return Err(invalid("n_states", "must be positive"));
        }
        if actions.is_empty() || actions.contains(&0) {
            return Err(invalid("actions", "every player needs at least one action"));
        }
        if h_inner == 0 {
            return Err(invalid("h_inner", "must be positive"));
        }
        let joint: usize = actions.iter().product();
        let n = actions.len();
        if payoff.len() != n_states * joint * n {
            return Err(invalid(
                "payoff",
                format!("expected {} entries, got {}", n_states * joint * n, payoff.len()),
            ));
        }
        if payoff.iter().any(|r| !r.is_finite()) {
            return Err(invalid("payoff", "entries must be finite"));
        }
        if transitions.len() != n_states * joint {
            return Err(invalid(
                "transitions",
                format!("expected {} entries, got {}", n_states * joint, transitions.len()),
            ));
        }
        if let Some(&bad) = transitions.iter().find(|&&s| s >= n_states) {
            return Err(invalid("transitions", format!("next state {bad} out of range")));
        }
        Ok(MatrixGame {
            name: name.into(),
            n_states,
            actions,
            payoff,
            transitions,
            h_inner,
        })
    }

    /// Single-state game given one payoff row per joint action.
    pub fn normal_form(name: impl Into<String>, actions: Vec<usize>, payoff: Vec<f64>, h_inner: usize) -> Result<Self> {
        let joint: usize = actions.iter().product();
        Self::new(name, 1, actions, payoff, vec![0; joint], h_inner)
    }

    /// Two-player zero-sum Matching Pennies; player 0 wins on a match.
    pub fn matching_pennies() -> Self {
        #[rustfmt::skip]
        let payoff = vec![
            1.0, -1.0,  // (H, H)
            -1.0, 1.0,  // (H, T)
            -1.0, 1.0,  // (T, H)
            1.0, -1.0,  // (T, T)
        ];
        Self::normal_form("matching_pennies", vec![2, 2], payoff, 1).expect("matching pennies table is well formed")
    }

    /// Looks up a named built-in game.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "matching_pennies" => Ok(Self::matching_pennies()),
            other => Err(Error::Config(format!("unknown game preset `{other}`"))),
        }
    }

    /// Random single-state game with payoffs uniform in `[-1, 1]`.
    pub fn random_normal_form(actions: Vec<usize>, rng: &mut dyn RngCore) -> Result<Self> {
        let joint: usize = actions.iter().product();
        let payoff = (0..joint * actions.len()).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        Self::normal_form("random", actions, payoff, 1)
    }

    pub fn with_horizon(mut self, h_inner: usize) -> Result<Self> {
        if h_inner == 0 {
            return Err(invalid("h_inner", "must be positive"));
        }
        self.h_inner = h_inner;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_players(&self) -> usize {
        self.actions.len()
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn actions_per_player(&self) -> &[usize] {
        &self.actions
    }

    pub fn n_actions(&self, player: usize) -> usize {
        self.actions[player]
    }

    pub fn n_joint_actions(&self) -> usize {
        self.actions.iter().product()
    }

    pub fn h_inner(&self) -> usize {
        self.h_inner
    }

    pub fn joint_index(&self, a: &JointAction) -> Result<usize> {
        if a.len() != self.n_players() {
            return Err(invalid(
                "joint action",
                format!("expected {} actions, got {}", self.n_players(), a.len()),
            ));
        }
        let mut code = 0;
        for (player, (&act, &size)) in a.actions().iter().zip(&self.actions).enumerate() {
            check_index(
                if player == 0 {
                    "player 0 action"
                } else {
                    "opponent action"
                },
                act,
                size,
            )?;
            code = code * size + act;
        }
        Ok(code)
    }

    pub fn joint_from_index(&self, mut code: usize) -> Result<JointAction> {
        check_index("joint action", code, self.n_joint_actions())?;
        let mut out = vec![0; self.n_players()];
        for (slot, &size) in out.iter_mut().zip(&self.actions).rev() {
            *slot = code % size;
            code /= size;
        }
        Ok(JointAction(out))
    }

    /// Raw rewards and next state for one simultaneous move.
    pub fn step(&self, state: usize, a: &JointAction) -> Result<StepOutcome> {
        check_index("state", state, self.n_states)?;
        let joint = self.joint_index(a)?;
        let n = self.n_players();
        let base = (state * self.n_joint_actions() + joint) * n;
        Ok(StepOutcome {
            rewards: self.payoff[base..base + n].to_vec(),
            next_state: self.transitions[state * self.n_joint_actions() + joint],
        })
    }

    /// Smallest and largest raw payoff over all players and entries.
    pub fn reward_range(&self) -> (f64, f64) {
        self.payoff
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
                (lo.min(r), hi.max(r))
            })
    }

    /// Maps a raw payoff into `[0, 1/h_inner]` using the game's payoff range.
    pub fn normalize(&self, r_raw: f64) -> Result<f64> {
        let (lo, hi) = self.reward_range();
        normalize_reward(r_raw, lo, hi, self.h_inner)
    }
}

/// Affine map of `[r_min, r_max_raw]` onto `[0, 1/h_inner]`.
pub fn normalize_reward(r_raw: f64, r_min: f64, r_max_raw: f64, h_inner: usize) -> Result<f64> {
    if r_min == r_max_raw {
        return Err(Error::DegenerateRange {
            min: r_min,
            max: r_max_raw,
        });
    }
    if r_min > r_max_raw {
        return Err(invalid("r_min", "must be below r_max"));
    }
    if h_inner == 0 {
        return Err(invalid("h_inner", "must be positive"));
    }
    if !(r_min..=r_max_raw).contains(&r_raw) {
        return Err(invalid("r_raw", format!("{r_raw} outside [{r_min}, {r_max_raw}]")));
    }
    Ok((r_raw - r_min) / (r_max_raw - r_min) / h_inner as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerStep {
    pub state: usize,
    pub action: JointAction,
    pub raw_rewards: Vec<f64>,
    pub normalized_rewards: Vec<f64>,
    pub next_state: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InnerTrajectory {
    pub steps: Vec<InnerStep>,
    pub raw_returns: Vec<f64>,
    /// Undiscounted sum of normalised rewards, in `[0, 1]` per player.
    pub normalized_returns: Vec<f64>,
}

impl InnerTrajectory {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}

/// Plays one inner episode of exactly `h_inner` steps from state 0.
pub fn rollout(game: &MatrixGame, policies: &[&dyn Policy], rng: &mut dyn RngCore) -> Result<InnerTrajectory> {
    let n = game.n_players();
    if policies.len() != n {
        return Err(invalid(
            "policies",
            format!("expected {n} policies, got {}", policies.len()),
        ));
    }
    let mut state = 0;
    let mut steps = Vec::with_capacity(game.h_inner());
    let mut raw_returns = vec![0.0; n];
    let mut normalized_returns = vec![0.0; n];
    for _ in 0..game.h_inner() {
        let action = JointAction(policies.iter().map(|p| p.act(state, rng)).collect());
        let out = game.step(state, &action)?;
        let normalized = out
            .rewards
            .iter()
            .map(|&r| game.normalize(r))
            .collect::<Result<Vec<_>>>()?;
        for i in 0..n {
            raw_returns[i] += out.rewards[i];
            normalized_returns[i] += normalized[i];
        }
        steps.push(InnerStep {
            state,
            action,
            raw_rewards: out.rewards,
            normalized_rewards: normalized,
            next_state: out.next_state,
        });
        state = out.next_state;
    }
    Ok(InnerTrajectory {
        steps,
        raw_returns,
        normalized_returns,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use proptest::prelude::*;

    fn ja(a: usize, b: usize) -> JointAction {
        JointAction::new(vec![a, b])
    }

    #[test]
    fn matching_pennies_table() {
        let mp = MatrixGame::matching_pennies();
        assert_eq!(mp.step(0, &ja(HEADS, HEADS)).unwrap().rewards, vec![1.0, -1.0]);
        assert_eq!(mp.step(0, &ja(HEADS, TAILS)).unwrap().rewards, vec![-1.0, 1.0]);
        assert_eq!(mp.step(0, &ja(TAILS, HEADS)).unwrap().rewards, vec![-1.0, 1.0]);
        assert_eq!(mp.step(0, &ja(TAILS, TAILS)).unwrap().rewards, vec![1.0, -1.0]);
        assert_eq!(mp.step(0, &ja(TAILS, TAILS)).unwrap().next_state, 0);
        assert_eq!(mp.n_players(), 2);
        assert_eq!(mp.n_states(), 1);
        assert_eq!(mp.h_inner(), 1);
    }

    #[test]
    fn matching_pennies_is_zero_sum() {
        let mp = MatrixGame::matching_pennies();
        for j in 0..mp.n_joint_actions() {
            let r = mp.step(0, &mp.joint_from_index(j).unwrap()).unwrap().rewards;
            assert_eq!(r[0] + r[1], 0.0);
        }
    }

    #[test]
    fn step_rejects_bad_indices() {
        let mp = MatrixGame::matching_pennies();
        assert!(matches!(
            mp.step(1, &ja(0, 0)),
            Err(Error::IndexOutOfRange { what: "state", .. })
        ));
        assert!(mp.step(0, &ja(2, 0)).is_err());
        assert!(mp.step(0, &JointAction::new(vec![0])).is_err());
    }

    #[test]
    fn joint_index_layout() {
        let mp = MatrixGame::matching_pennies();
        assert_eq!(mp.joint_index(&ja(HEADS, TAILS)).unwrap(), 1);
        assert_eq!(mp.joint_index(&ja(TAILS, HEADS)).unwrap(), 2);
        assert_eq!(mp.joint_from_index(3).unwrap(), ja(TAILS, TAILS));
        assert!(mp.joint_from_index(4).is_err());
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_reward(1.0, -1.0, 1.0, 1).unwrap(), 1.0);
        assert_eq!(normalize_reward(-1.0, -1.0, 1.0, 1).unwrap(), 0.0);
        assert_eq!(normalize_reward(0.0, -1.0, 1.0, 2).unwrap(), 0.25);
        assert!(matches!(
            normalize_reward(0.0, 1.0, 1.0, 1),
            Err(Error::DegenerateRange { .. })
        ));
        assert!(normalize_reward(2.0, -1.0, 1.0, 1).is_err());
    }

    #[test]
    fn rollout_fixed_heads() {
        let mp = MatrixGame::matching_pennies();
        let mut rng = seeded_rng(0);
        let h = FixedAction(HEADS);
        let t = rollout(&mp, &[&h, &h], &mut rng).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.steps[0].state, 0);
        assert_eq!(t.steps[0].action, ja(HEADS, HEADS));
        assert_eq!(t.raw_returns, vec![1.0, -1.0]);
        assert_eq!(t.normalized_returns, vec![1.0, 0.0]);
    }

    #[test]
    fn rollout_length_is_horizon() {
        let mp = MatrixGame::matching_pennies().with_horizon(5).unwrap();
        let u = UniformRandom(2);
        let t = rollout(&mp, &[&u, &u], &mut seeded_rng(3)).unwrap();
        assert_eq!(t.len(), 5);
        for r in &t.normalized_returns {
            assert!((0.0..=1.0).contains(r));
        }
    }

    #[test]
    fn rollout_needs_one_policy_per_player() {
        let mp = MatrixGame::matching_pennies();
        let h = FixedAction(HEADS);
        assert!(rollout(&mp, &[&h], &mut seeded_rng(0)).is_err());
    }

    #[test]
    fn preset_lookup() {
        assert_eq!(
            MatrixGame::preset("matching_pennies").unwrap(),
            MatrixGame::matching_pennies()
        );
        assert!(MatrixGame::preset("chess").is_err());
    }

    proptest! {
        #[test]
        fn normalized_step_reward_bounded(seed in any::<u64>(), h in 1usize..6) {
            let mut rng = seeded_rng(seed);
            let game = MatrixGame::random_normal_form(vec![3, 2], &mut rng).unwrap()
                .with_horizon(h).unwrap();
            let u = UniformRandom(3);
            let v = UniformRandom(2);
            let t = rollout(&game, &[&u, &v], &mut rng).unwrap();
            for step in &t.steps {
                for &r in &step.normalized_rewards {
                    prop_assert!((0.0..=1.0 / h as f64 + 1e-15).contains(&r));
                }
            }
            for &ret in &t.normalized_returns {
                prop_assert!((0.0..=1.0 + 1e-12).contains(&ret));
            }
        }

        #[test]
        fn rollout_replays_under_seed(seed in any::<u64>()) {
            let mp = MatrixGame::matching_pennies().with_horizon(4).unwrap();
            let u = UniformRandom(2);
            let a = rollout(&mp, &[&u, &u], &mut seeded_rng(seed)).unwrap();
            let b = rollout(&mp, &[&u, &u], &mut seeded_rng(seed)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
