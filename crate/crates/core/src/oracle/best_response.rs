use std::collections::BTreeMap;

use crate::error::{invalid, Error, Result};
use crate::games::MatrixGame;
use crate::learners::ActionRule;
use crate::metagame::{Case, MetaConfig, MetaGame, OpponentConfig};
use crate::rmax::Environment;
use crate::seeded_rng;

/// Search problem: the best deterministic window-to-action map against
/// greedy naive opponents, scored by mean meta-reward over `horizon` steps
/// with an episode reset every `episode_len` steps.
#[derive(Debug, Clone)]
pub struct BestResponseProblem {
    pub game: MatrixGame,
    pub opponent: OpponentConfig,
    pub meta: MetaConfig,
    pub horizon: usize,
    pub episode_len: usize,
    /// Give up with [`Error::TooLarge`] after this many search nodes.
    pub node_budget: u64,
}

impl BestResponseProblem {
    pub fn new(game: MatrixGame, opponent: OpponentConfig, h: usize, horizon: usize) -> Self {
        BestResponseProblem {
            game,
            opponent,
            meta: MetaConfig {
                h,
                ..MetaConfig::default()
            },
            horizon,
            episode_len: horizon,
            node_budget: 5_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BestResponse {
    /// Mean normalised meta-reward of the best policy.
    pub value: f64,
    /// Window code to action, for every window the policy reaches.
    pub policy: BTreeMap<u64, usize>,
    pub nodes: u64,
}

/// Largest window-state count the search accepts.
const MAX_STATES: u64 = 128;

struct Search<'a> {
    problem: &'a BestResponseProblem,
    n_actions: usize,
    best: f64,
    best_policy: Vec<Option<usize>>,
    nodes: u64,
}

impl Search<'_> {
    fn dfs(
        &mut self,
        mut env: MetaGame,
        mut state: u64,
        mut t: usize,
        mut total: f64,
        assign: &mut Vec<Option<usize>>,
    ) -> Result<()> {
        let p = self.problem;
        loop {
            if t == p.horizon {
                if total > self.best {
                    self.best = total;
                    self.best_policy = assign.clone();
                }
                break;
            }
            if total + (p.horizon - t) as f64 <= self.best {
                break;
            }
            if t > 0 && t % p.episode_len == 0 {
                state = Environment::reset(&mut env)?;
            }
            self.nodes += 1;
            if self.nodes > p.node_budget {
                return Err(Error::TooLarge(format!(
                    "best-response search exceeded {} nodes",
                    p.node_budget
                )));
            }
            match assign[state as usize] {
                Some(a) => {
                    let fb = env.step(a, &mut seeded_rng(0))?;
                    total += fb.reward;
                    state = fb.next_state;
                    t += 1;
                }
                None => {
                    let mut children = Vec::with_capacity(self.n_actions);
                    for a in 0..self.n_actions {
                        let mut child = env.clone();
                        let fb = child.step(a, &mut seeded_rng(0))?;
                        children.push((a, fb.reward, fb.next_state, child));
                    }
                    // most rewarding first, stable on ties
                    children.sort_by(|x, y| y.1.total_cmp(&x.1));
                    for (a, r, next, child) in children {
                        assign[state as usize] = Some(a);
                        self.dfs(child, next, t + 1, total + r, assign)?;
                    }
                    assign[state as usize] = None;
                    break;
                }
            }
        }
        Ok(())
    }
}

/// Exhaustive search with branch and bound. Only the simplified window case
/// with greedy opponents is supported, since that makes every step
/// deterministic.
pub fn best_response_return(problem: &BestResponseProblem) -> Result<BestResponse> {
    if problem.meta.case != Case::SimplifiedII {
        return Err(invalid("case", "best response search needs simplified_II"));
    }
    if problem.opponent.rule != ActionRule::Greedy {
        return Err(invalid("opponent.rule", "best response search needs greedy opponents"));
    }
    if problem.horizon == 0 || problem.episode_len == 0 {
        return Err(invalid("horizon", "must be positive"));
    }
    let mut env = MetaGame::new(problem.game.clone(), problem.meta.clone(), &problem.opponent)?;
    if env.n_states() > MAX_STATES {
        return Err(Error::TooLarge(format!(
            "{} window states (limit {MAX_STATES})",
            env.n_states()
        )));
    }
    let start = Environment::reset(&mut env)?;
    let mut search = Search {
        problem,
        n_actions: env.n_meta_actions() as usize,
        best: f64::NEG_INFINITY,
        best_policy: vec![],
        nodes: 0,
    };
    let mut assign = vec![None; env.n_states() as usize];
    search.dfs(env, start, 0, 0.0, &mut assign)?;
    let policy = search
        .best_policy
        .iter()
        .enumerate()
        .filter_map(|(s, a)| a.map(|a| (s as u64, a)))
        .collect();
    Ok(BestResponse {
        value: search.best / problem.horizon as f64,
        policy,
        nodes: search.nodes,
    })
}
