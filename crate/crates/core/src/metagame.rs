//! The meta-MDP played by the shaper.
//!
//! One meta-step plays `K` inner episodes with the shaper's inner policy
//! fixed by the meta-action, then lets every opponent apply its naive
//! Q-learning update. Three meta-state representations are supported:
//!
//! - [`Case::I`]: the snapped Q-tables of every inner agent,
//! - [`Case::II`]: the last `h` inner `(state, joint action)` pairs,
//! - [`Case::SimplifiedII`]: the last `h` joint actions, with the meta-action
//!   reduced to a single inner action.
//!
//! Windows start filled with blanks. A window with `k` filled slots encodes
//! to `Σ_{j<k} A^j + value`, where `value` reads the filled symbols as a
//! base-`A` number, oldest first; the all-blank window is code 0.

use std::collections::VecDeque;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::epsnet::EpsNet;
use crate::error::{check_index, invalid, Error, Result};
use crate::games::{rollout, FixedAction, InnerTrajectory, JointAction, MatrixGame, Policy};
use crate::learners::{ActionRule, NaiveLearner, QTable, TablePolicy};
use crate::rmax::{Environment, Feedback};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Case {
    #[serde(rename = "I")]
    I,
    #[serde(rename = "II")]
    II,
    #[serde(rename = "simplified_II")]
    SimplifiedII,
}

impl Case {
    pub fn label(&self) -> &'static str {
        match self {
            Case::I => "Case I",
            Case::II => "Case II",
            Case::SimplifiedII => "simplified Case II",
        }
    }
}

/// What a simplified window slot records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowContent {
    /// Everybody's action.
    Joint,
    /// Only the opponents' actions.
    OpponentOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaConfig {
    pub case: Case,
    /// Window length for the trajectory cases.
    pub h: usize,
    /// Inner episodes per meta-step.
    pub k_inner: usize,
    /// Grid spacing for Q-table nets.
    pub lambda: f64,
    pub window: WindowContent,
    /// How the shaper's Q-table picks inner actions in Case I and II.
    pub shaper_rule: ActionRule,
    /// Restore the opponents' initial Q-tables on every reset.
    pub reset_opponents: bool,
}

impl Default for MetaConfig {
    fn default() -> Self {
        MetaConfig {
            case: Case::SimplifiedII,
            h: 2,
            k_inner: 1,
            lambda: 0.5,
            window: WindowContent::Joint,
            shaper_rule: ActionRule::Greedy,
            reset_opponents: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpponentConfig {
    pub lr: f64,
    pub init: f64,
    pub rule: ActionRule,
}

impl Default for OpponentConfig {
    fn default() -> Self {
        OpponentConfig {
            lr: 0.1,
            init: 0.5,
            rule: ActionRule::Greedy,
        }
    }
}

/// Fixed-length FIFO with a blank prefix.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Window<T> {
    slots: VecDeque<Option<T>>,
}

impl<T: Clone> Window<T> {
    pub fn blank(h: usize) -> Self {
        Window {
            slots: std::iter::repeat(None).take(h).collect(),
        }
    }

    /// Builds a window from its slots, oldest first. Blanks must form a prefix.
    pub fn from_slots(slots: Vec<Option<T>>) -> Result<Self> {
        let first_filled = slots.iter().position(Option::is_some).unwrap_or(slots.len());
        if slots[first_filled..].iter().any(Option::is_none) {
            return Err(invalid("window", "blank slots must form a prefix"));
        }
        Ok(Window { slots: slots.into() })
    }

    pub fn push(&mut self, item: T) {
        if self.slots.is_empty() {
            return;
        }
        self.slots.pop_front();
        self.slots.push_back(Some(item));
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn filled(&self) -> usize {
        self.slots.iter().filter(|s| s.is_some()).count()
    }

    pub fn slots(&self) -> impl Iterator<Item = Option<&T>> {
        self.slots.iter().map(Option::as_ref)
    }

    pub fn items(&self) -> impl Iterator<Item = &T> {
        self.slots.iter().flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetaState {
    /// Grid index of every agent's Q-table, shaper first.
    CaseI {
        grid: Vec<usize>,
    },
    CaseII {
        window: Window<(usize, JointAction)>,
    },
    /// Holds opponents-only actions when the window content is
    /// [`WindowContent::OpponentOnly`].
    SimplifiedCaseII {
        window: Window<JointAction>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MetaAction {
    /// Grid index of the shaper's Q-table.
    FullPolicy { grid: Vec<usize> },
    /// Inner action the shaper plays throughout the meta-step.
    GreedyAction { action: usize },
}

impl MetaAction {
    fn label(&self) -> &'static str {
        match self {
            MetaAction::FullPolicy { .. } => "FullPolicy",
            MetaAction::GreedyAction { .. } => "GreedyAction",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaStepResult {
    /// Mean normalised shaper return over the `K` episodes, in `[0, 1]`.
    pub reward: f64,
    /// Mean raw shaper return, for reporting.
    pub reward_raw: f64,
    pub next_state: MetaState,
    pub trajectories: Vec<InnerTrajectory>,
}

#[derive(Debug, Clone)]
pub struct MetaGame {
    game: MatrixGame,
    config: MetaConfig,
    opponents: Vec<NaiveLearner>,
    initial_opponents: Vec<NaiveLearner>,
    initial_shaper: QTable,
    state: MetaState,
    /// Case I meta-state net over all agents' tables.
    state_net: Option<EpsNet>,
    /// Net over the shaper's table (Case I and II).
    action_net: Option<EpsNet>,
    alphabet: u64,
    n_states: u64,
    n_actions: u64,
}

fn checked_window_count(alphabet: u64, h: usize) -> Result<u64> {
    let mut total = 0u64;
    let mut level = 1u64;
    for k in 0..=h {
        total = total
            .checked_add(level)
            .ok_or_else(|| Error::Overflow(format!("window state count for h = {h}")))?;
        if k < h {
            level = level
                .checked_mul(alphabet)
                .ok_or_else(|| Error::Overflow(format!("window state count for h = {h}")))?;
        }
    }
    Ok(total)
}

impl MetaGame {
    pub fn new(game: MatrixGame, config: MetaConfig, opponent: &OpponentConfig) -> Result<Self> {
        if game.n_players() < 2 {
            return Err(invalid("game", "needs the shaper plus at least one opponent"));
        }
        if config.k_inner == 0 {
            return Err(invalid("K", "must be positive"));
        }
        opponent.rule.validate()?;
        config.shaper_rule.validate()?;
        if config.case == Case::II && config.window == WindowContent::OpponentOnly {
            return Err(invalid("window", "opponent_only applies to simplified_II only"));
        }
        let s = game.n_states();
        let opponents: Vec<NaiveLearner> = (1..game.n_players())
            .map(|p| {
                Ok(NaiveLearner {
                    q: QTable::new(s, game.n_actions(p), opponent.init, opponent.lr)?,
                    rule: opponent.rule,
                })
            })
            .collect::<Result<_>>()?;
        let initial_shaper = QTable::new(s, game.n_actions(0), opponent.init, 0.0)?;

        let table_dims: usize = (0..game.n_players()).map(|p| s * game.n_actions(p)).sum();
        let own_dims = s * game.n_actions(0);
        let (state_net, action_net) = match config.case {
            Case::I => (
                Some(EpsNet::unit(table_dims, config.lambda)?),
                Some(EpsNet::unit(own_dims, config.lambda)?),
            ),
            Case::II => (None, Some(EpsNet::unit(own_dims, config.lambda)?)),
            Case::SimplifiedII => (None, None),
        };
        let alphabet = match (config.case, config.window) {
            (Case::I, _) => 0,
            (Case::II, _) => (s * game.n_joint_actions()) as u64,
            (Case::SimplifiedII, WindowContent::Joint) => game.n_joint_actions() as u64,
            (Case::SimplifiedII, WindowContent::OpponentOnly) => {
                (1..game.n_players()).map(|p| game.n_actions(p) as u64).product()
            }
        };
        let n_states = match &state_net {
            Some(net) => net.cardinality()?,
            None => checked_window_count(alphabet, config.h)?,
        };
        let n_actions = match &action_net {
            Some(net) => net.cardinality()?,
            None => game.n_actions(0) as u64,
        };

        let mut meta = MetaGame {
            game,
            config,
            initial_opponents: opponents.clone(),
            opponents,
            initial_shaper,
            state: MetaState::CaseI { grid: vec![] },
            state_net,
            action_net,
            alphabet,
            n_states,
            n_actions,
        };
        meta.state = meta.initial_state()?;
        Ok(meta)
    }

    pub fn game(&self) -> &MatrixGame {
        &self.game
    }

    pub fn config(&self) -> &MetaConfig {
        &self.config
    }

    pub fn state(&self) -> &MetaState {
        &self.state
    }

    pub fn opponents(&self) -> &[NaiveLearner] {
        &self.opponents
    }

    pub fn opponents_mut(&mut self) -> &mut [NaiveLearner] {
        &mut self.opponents
    }

    /// Size of the encoded meta-state space, blank-padded windows included.
    pub fn n_states(&self) -> u64 {
        self.n_states
    }

    pub fn n_meta_actions(&self) -> u64 {
        self.n_actions
    }

    /// Window symbols (0 for Case I).
    pub fn alphabet(&self) -> u64 {
        self.alphabet
    }

    /// States with no blank slot (all states for Case I).
    pub fn steady_state_count(&self) -> u64 {
        match self.config.case {
            Case::I => self.n_states,
            _ => self.n_states - self.first_steady_code(),
        }
    }

    fn first_steady_code(&self) -> u64 {
        match self.config.case {
            Case::I => 0,
            // cannot overflow: the full count was checked at construction
            _ => checked_window_count(self.alphabet, self.config.h).unwrap() - self.alphabet.pow(self.config.h as u32),
        }
    }

    pub fn is_steady_code(&self, code: u64) -> bool {
        code >= self.first_steady_code() && code < self.n_states
    }

    fn initial_state(&self) -> Result<MetaState> {
        Ok(match self.config.case {
            Case::I => MetaState::CaseI {
                grid: self.snap_tables(&self.initial_shaper)?,
            },
            Case::II => MetaState::CaseII {
                window: Window::blank(self.config.h),
            },
            Case::SimplifiedII => MetaState::SimplifiedCaseII {
                window: Window::blank(self.config.h),
            },
        })
    }

    /// Blank window (or initial tables) and, when configured, fresh opponents.
    pub fn reset(&mut self) -> Result<&MetaState> {
        if self.config.reset_opponents {
            self.opponents = self.initial_opponents.clone();
        }
        self.state = self.initial_state()?;
        Ok(&self.state)
    }

    fn snap_tables(&self, shaper: &QTable) -> Result<Vec<usize>> {
        let net = self.state_net.as_ref().expect("Case I has a state net");
        let mut flat = shaper.values().to_vec();
        for opp in &self.opponents {
            flat.extend_from_slice(opp.q.values());
        }
        Ok(net.snap(&flat)?.index)
    }

    /// The shaper's Q-table for a full-policy meta-action.
    pub fn shaper_table(&self, grid: &[usize]) -> Result<QTable> {
        let net = self.action_net.as_ref().ok_or(Error::CaseMismatch {
            case: self.config.case.label(),
            action: "FullPolicy",
        })?;
        let values = net.point(grid)?;
        QTable::from_values(self.game.n_states(), self.game.n_actions(0), values, 0.0)
    }

    fn check_compatible(&self, action: &MetaAction) -> Result<()> {
        let ok = matches!(
            (self.config.case, action),
            (Case::I | Case::II, MetaAction::FullPolicy { .. }) | (Case::SimplifiedII, MetaAction::GreedyAction { .. })
        );
        if ok {
            Ok(())
        } else {
            Err(Error::CaseMismatch {
                case: self.config.case.label(),
                action: action.label(),
            })
        }
    }

    /// Plays one meta-step from the current meta-state.
    pub fn meta_step(&mut self, action: &MetaAction, rng: &mut dyn RngCore) -> Result<MetaStepResult> {
        self.check_compatible(action)?;
        let shaper_table = match action {
            MetaAction::FullPolicy { grid } => Some(self.shaper_table(grid)?),
            MetaAction::GreedyAction { action } => {
                check_index("meta-action", *action, self.game.n_actions(0))?;
                None
            }
        };
        let fixed;
        let table_policy;
        let shaper: &dyn Policy = match (&shaper_table, action) {
            (Some(q), _) => {
                table_policy = TablePolicy {
                    q,
                    rule: self.config.shaper_rule,
                };
                &table_policy
            }
            (None, MetaAction::GreedyAction { action }) => {
                fixed = FixedAction(*action);
                &fixed
            }
            (None, MetaAction::FullPolicy { .. }) => unreachable!(),
        };

        let mut trajectories = Vec::with_capacity(self.config.k_inner);
        for _ in 0..self.config.k_inner {
            let mut policies: Vec<&dyn Policy> = vec![shaper];
            policies.extend(self.opponents.iter().map(|o| o as &dyn Policy));
            trajectories.push(rollout(&self.game, &policies, rng)?);
        }

        for traj in &trajectories {
            let last = traj.steps.len() - 1;
            for (t, step) in traj.steps.iter().enumerate() {
                let next = (t < last).then_some(step.next_state);
                for (j, opp) in self.opponents.iter_mut().enumerate() {
                    opp.q.naive_update(
                        step.state,
                        step.action.player(j + 1),
                        step.normalized_rewards[j + 1],
                        next,
                    )?;
                }
            }
        }

        let k = trajectories.len() as f64;
        let reward = trajectories.iter().map(|t| t.normalized_returns[0]).sum::<f64>() / k;
        let reward_raw = trajectories.iter().map(|t| t.raw_returns[0]).sum::<f64>() / k;

        let next_state = match &mut self.state {
            MetaState::CaseI { .. } => MetaState::CaseI {
                grid: self.snap_tables(shaper_table.as_ref().expect("Case I uses full policies"))?,
            },
            MetaState::CaseII { window } => {
                for traj in &trajectories {
                    for step in &traj.steps {
                        window.push((step.state, step.action.clone()));
                    }
                }
                self.state.clone()
            }
            MetaState::SimplifiedCaseII { window } => {
                for traj in &trajectories {
                    for step in &traj.steps {
                        let item = match self.config.window {
                            WindowContent::Joint => step.action.clone(),
                            WindowContent::OpponentOnly => JointAction::new(step.action.actions()[1..].to_vec()),
                        };
                        window.push(item);
                    }
                }
                self.state.clone()
            }
        };
        self.state = next_state.clone();
        Ok(MetaStepResult {
            reward,
            reward_raw,
            next_state,
            trajectories,
        })
    }

    fn symbol_of_joint(&self, a: &JointAction) -> Result<u64> {
        match self.config.window {
            WindowContent::Joint => Ok(self.game.joint_index(a)? as u64),
            WindowContent::OpponentOnly => {
                let sizes = &self.game.actions_per_player()[1..];
                if a.len() != sizes.len() {
                    return Err(invalid("window entry", "expected opponents' actions only"));
                }
                let mut code = 0u64;
                for (&act, &size) in a.actions().iter().zip(sizes) {
                    check_index("opponent action", act, size)?;
                    code = code * size as u64 + act as u64;
                }
                Ok(code)
            }
        }
    }

    fn joint_of_symbol(&self, mut code: u64) -> Result<JointAction> {
        match self.config.window {
            WindowContent::Joint => self.game.joint_from_index(code as usize),
            WindowContent::OpponentOnly => {
                let sizes = &self.game.actions_per_player()[1..];
                let mut out = vec![0; sizes.len()];
                for (slot, &size) in out.iter_mut().zip(sizes).rev() {
                    *slot = (code % size as u64) as usize;
                    code /= size as u64;
                }
                Ok(JointAction::new(out))
            }
        }
    }

    fn encode_symbols(&self, symbols: &[u64], h: usize) -> u64 {
        let k = symbols.len();
        let offset = checked_window_count(self.alphabet, k).unwrap() - self.alphabet.pow(k as u32);
        debug_assert!(k <= h);
        let value = symbols.iter().fold(0u64, |acc, &s| acc * self.alphabet + s);
        offset + value
    }

    pub fn encode(&self, state: &MetaState) -> Result<u64> {
        match (state, self.config.case) {
            (MetaState::CaseI { grid }, Case::I) => self.state_net.as_ref().unwrap().flatten(grid),
            (MetaState::CaseII { window }, Case::II) => {
                self.check_window_len(window.len())?;
                let joint = self.game.n_joint_actions() as u64;
                let symbols = window
                    .items()
                    .map(|(s, a)| {
                        check_index("state", *s, self.game.n_states())?;
                        Ok(*s as u64 * joint + self.game.joint_index(a)? as u64)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(self.encode_symbols(&symbols, self.config.h))
            }
            (MetaState::SimplifiedCaseII { window }, Case::SimplifiedII) => {
                self.check_window_len(window.len())?;
                let symbols = window
                    .items()
                    .map(|a| self.symbol_of_joint(a))
                    .collect::<Result<Vec<_>>>()?;
                Ok(self.encode_symbols(&symbols, self.config.h))
            }
            _ => Err(invalid(
                "meta-state",
                format!("not a {} state", self.config.case.label()),
            )),
        }
    }

    fn check_window_len(&self, len: usize) -> Result<()> {
        if len == self.config.h {
            Ok(())
        } else {
            Err(invalid("window", format!("length {len}, expected {}", self.config.h)))
        }
    }

    pub fn decode(&self, code: u64) -> Result<MetaState> {
        if code >= self.n_states {
            return Err(Error::IndexOutOfRange {
                what: "meta-state code",
                index: code,
                limit: self.n_states,
            });
        }
        if self.config.case == Case::I {
            return Ok(MetaState::CaseI {
                grid: self.state_net.as_ref().unwrap().unflatten(code)?,
            });
        }
        let h = self.config.h;
        let mut k = 0;
        let mut rest = code;
        let mut level = 1u64;
        while rest >= level {
            rest -= level;
            k += 1;
            level *= self.alphabet;
        }
        let mut symbols = vec![0u64; k];
        for slot in symbols.iter_mut().rev() {
            *slot = rest % self.alphabet;
            rest /= self.alphabet;
        }
        let blanks = h - k;
        Ok(match self.config.case {
            Case::II => {
                let joint = self.game.n_joint_actions() as u64;
                let mut slots = vec![None; blanks];
                for s in symbols {
                    slots.push(Some((
                        (s / joint) as usize,
                        self.game.joint_from_index((s % joint) as usize)?,
                    )));
                }
                MetaState::CaseII {
                    window: Window::from_slots(slots)?,
                }
            }
            Case::SimplifiedII => {
                let mut slots = vec![None; blanks];
                for s in symbols {
                    slots.push(Some(self.joint_of_symbol(s)?));
                }
                MetaState::SimplifiedCaseII {
                    window: Window::from_slots(slots)?,
                }
            }
            Case::I => unreachable!(),
        })
    }

    pub fn action_code(&self, action: &MetaAction) -> Result<u64> {
        self.check_compatible(action)?;
        match action {
            MetaAction::FullPolicy { grid } => self.action_net.as_ref().unwrap().flatten(grid),
            MetaAction::GreedyAction { action } => {
                check_index("meta-action", *action, self.game.n_actions(0))?;
                Ok(*action as u64)
            }
        }
    }

    pub fn action_from_code(&self, code: u64) -> Result<MetaAction> {
        if code >= self.n_actions {
            return Err(Error::IndexOutOfRange {
                what: "meta-action code",
                index: code,
                limit: self.n_actions,
            });
        }
        Ok(match self.config.case {
            Case::I | Case::II => MetaAction::FullPolicy {
                grid: self.action_net.as_ref().unwrap().unflatten(code)?,
            },
            Case::SimplifiedII => MetaAction::GreedyAction { action: code as usize },
        })
    }
}

impl Environment for MetaGame {
    fn n_actions(&self) -> usize {
        self.n_actions as usize
    }

    fn reset(&mut self) -> Result<u64> {
        MetaGame::reset(self)?;
        self.encode(&self.state)
    }

    fn step(&mut self, action: usize, rng: &mut dyn RngCore) -> Result<Feedback> {
        let meta_action = self.action_from_code(action as u64)?;
        let out = self.meta_step(&meta_action, rng)?;
        Ok(Feedback {
            reward: out.reward,
            reward_raw: out.reward_raw,
            next_state: self.encode(&out.next_state)?,
        })
    }
}
