//! Naive inner learners and action-selection rules.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{check_index, invalid, Result};
use crate::games::Policy;

/// How an action is picked from a row of values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActionRule {
    /// Argmax, ties broken towards the lowest index.
    Greedy,
    /// Samples proportionally to `exp(value / temperature)`.
    Boltzmann { temperature: f64 },
}

impl ActionRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ActionRule::Greedy => Ok(()),
            ActionRule::Boltzmann { temperature } if temperature > 0.0 && temperature.is_finite() => Ok(()),
            ActionRule::Boltzmann { temperature } => Err(invalid(
                "temperature",
                format!("must be positive and finite, got {temperature}"),
            )),
        }
    }

    /// Picks an index from `values`. Greedy never touches `rng`.
    pub fn select(&self, values: &[f64], rng: &mut dyn RngCore) -> usize {
        match *self {
            ActionRule::Greedy => argmax(values),
            ActionRule::Boltzmann { temperature } => boltzmann(values, temperature, rng),
        }
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Softmax probabilities at the given temperature.
pub fn softmax(values: &[f64], temperature: f64) -> Vec<f64> {
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = values.iter().map(|&v| ((v - top) / temperature).exp()).collect();
    let z: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / z).collect()
}

fn boltzmann(values: &[f64], temperature: f64, rng: &mut dyn RngCore) -> usize {
    let probs = softmax(values, temperature);
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding gap at the top; take the last action with mass
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Tabular action values for one inner agent, every entry in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QTable {
    n_states: usize,
    n_actions: usize,
    values: Vec<f64>,
    learning_rate: f64,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize, init: f64, learning_rate: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&init) {
            return Err(invalid("init", format!("{init} outside [0, 1]")));
        }
        Self::from_values(n_states, n_actions, vec![init; n_states * n_actions], learning_rate)
    }

    pub fn from_values(n_states: usize, n_actions: usize, values: Vec<f64>, learning_rate: f64) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(invalid("dims", "must be positive"));
        }
        if values.len() != n_states * n_actions {
            return Err(invalid("values", "length must equal n_states * n_actions"));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid("values", format!("{v} outside [0, 1]")));
        }
        if !(0.0..=1.0).contains(&learning_rate) {
            return Err(invalid("learning_rate", format!("{learning_rate} outside [0, 1]")));
        }
        Ok(QTable {
            n_states,
            n_actions,
            values,
            learning_rate,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n_states, self.n_actions)
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    /// One Q-learning step with undiscounted bootstrap. `next = None` marks
    /// the end of an inner episode, which has no continuation value.
    pub fn naive_update(&mut self, s: usize, a: usize, r: f64, next: Option<usize>) -> Result<()> {
        check_index("state", s, self.n_states)?;
        check_index("action", a, self.n_actions)?;
        let bootstrap = match next {
            Some(s2) => {
                check_index("state", s2, self.n_states)?;
                self.row(s2).iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
            None => 0.0,
        };
        let lr = self.learning_rate;
        let i = s * self.n_actions + a;
        let updated = (1.0 - lr) * self.values[i] + lr * (r + bootstrap);
        self.values[i] = updated.clamp(0.0, 1.0);
        Ok(())
    }

    pub fn select_action(&self, s: usize, rule: &ActionRule, rng: &mut dyn RngCore) -> usize {
        rule.select(self.row(s), rng)
    }
}

/// A naive opponent: a Q-table plus the rule it acts with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveLearner {
    pub q: QTable,
    pub rule: ActionRule,
}

impl Policy for NaiveLearner {
    fn act(&self, state: usize, rng: &mut dyn RngCore) -> usize {
        self.q.select_action(state, &self.rule, rng)
    }
}

/// A frozen Q-table used as a policy (the shaper's inner agent in Case I/II).
#[derive(Debug, Clone, Copy)]
pub struct TablePolicy<'a> {
    pub q: &'a QTable,
    pub rule: ActionRule,
}

impl Policy for TablePolicy<'_> {
    fn act(&self, state: usize, rng: &mut dyn RngCore) -> usize {
        self.q.select_action(state, &self.rule, rng)
    }
}
