use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};

use crate::error::{check_index, invalid, Error, Result};
use crate::learners::{argmax, ActionRule};
use crate::rmax::{run_steps, Environment, Feedback, RmaxConfig, RmaxModel};
use crate::seeded_rng;

/// Dense finite MDP with rewards in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitMdp {
    pub n_states: usize,
    pub n_actions: usize,
    /// `[s][a][s']`, flattened.
    pub transitions: Vec<f64>,
    /// `[s][a]`, flattened.
    pub rewards: Vec<f64>,
    pub gamma: f64,
}

impl ExplicitMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<f64>,
        rewards: Vec<f64>,
        gamma: f64,
    ) -> Result<Self> {
        let mdp = ExplicitMdp {
            n_states,
            n_actions,
            transitions,
            rewards,
            gamma,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(invalid("dims", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(invalid("gamma", format!("{} outside [0, 1)", self.gamma)));
        }
        let (s, a) = (self.n_states, self.n_actions);
        if self.transitions.len() != s * a * s || self.rewards.len() != s * a {
            return Err(invalid("tables", "wrong length"));
        }
        if self.rewards.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(invalid("rewards", "must lie in [0, 1]"));
        }
        for (i, row) in self.transitions.chunks(s).enumerate() {
            let mass: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= 0.0)) || (mass - 1.0).abs() > 1e-12 {
                return Err(invalid(
                    "transitions",
                    format!("row (s={}, a={}) sums to {mass}", i / a, i % a),
                ));
            }
        }
        Ok(())
    }

    pub fn p(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.transitions[(s * self.n_actions + a) * self.n_states + s2]
    }

    pub fn row(&self, s: usize, a: usize) -> &[f64] {
        let start = (s * self.n_actions + a) * self.n_states;
        &self.transitions[start..start + self.n_states]
    }

    pub fn r(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.n_actions + a]
    }

    pub fn v_max(&self) -> f64 {
        1.0 / (1.0 - self.gamma)
    }

    pub fn q_values(&self, v: &[f64]) -> Vec<f64> {
        let mut q = Vec::with_capacity(self.n_states * self.n_actions);
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let ev: f64 = self.row(s, a).iter().zip(v).map(|(p, x)| p * x).sum();
                q.push(self.r(s, a) + self.gamma * ev);
            }
        }
        q
    }

    /// Value iteration until the Bellman residual is at most `tol`, so the
    /// returned values are within `tol·γ/(1−γ)` of optimal. The policy is
    /// greedy with lowest-index ties.
    pub fn exact_vi(&self, tol: f64) -> Result<(Vec<f64>, Vec<usize>)> {
        self.validate()?;
        if !(tol > 0.0) {
            return Err(invalid("tol", "must be positive"));
        }
        let mut v = vec![0.0; self.n_states];
        loop {
            let q = self.q_values(&v);
            let next: Vec<f64> = q
                .chunks(self.n_actions)
                .map(|row| row.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
                .collect();
            let residual = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            v = next;
            if residual <= tol {
                let policy = self.q_values(&v).chunks(self.n_actions).map(argmax).collect();
                return Ok((v, policy));
            }
        }
    }

    /// Exact value of a deterministic policy by solving `(I − γP_π)V = R_π`.
    pub fn policy_value(&self, policy: &[usize]) -> Result<Vec<f64>> {
        self.validate()?;
        if policy.len() != self.n_states {
            return Err(invalid("policy", "needs one action per state"));
        }
        let n = self.n_states;
        let mut lhs = DMatrix::<f64>::identity(n, n);
        let mut rhs = DVector::<f64>::zeros(n);
        for (s, &a) in policy.iter().enumerate() {
            check_index("action", a, self.n_actions)?;
            rhs[s] = self.r(s, a);
            for (s2, p) in self.row(s, a).iter().enumerate() {
                lhs[(s, s2)] -= self.gamma * p;
            }
        }
        let v = lhs
            .lu()
            .solve(&rhs)
            .ok_or_else(|| invalid("policy", "singular evaluation system"))?;
        Ok(v.iter().copied().collect())
    }
}

/// Random MDP: rewards uniform in `[0, 1]`, transition rows normalised
/// uniform weights.
pub fn random_mdp(rng: &mut dyn RngCore, n_states: usize, n_actions: usize, gamma: f64) -> Result<ExplicitMdp> {
    let mut transitions = Vec::with_capacity(n_states * n_actions * n_states);
    for _ in 0..n_states * n_actions {
        let w: Vec<f64> = (0..n_states).map(|_| rng.gen::<f64>() + 1e-3).collect();
        let z: f64 = w.iter().sum();
        transitions.extend(w.into_iter().map(|x| x / z));
    }
    let rewards = (0..n_states * n_actions).map(|_| rng.gen()).collect();
    let mut mdp = ExplicitMdp {
        n_states,
        n_actions,
        transitions,
        rewards,
        gamma,
    };
    renormalise_rows(&mut mdp);
    mdp.validate()?;
    Ok(mdp)
}

fn renormalise_rows(mdp: &mut ExplicitMdp) {
    for row in mdp.transitions.chunks_mut(mdp.n_states) {
        let z: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= z);
    }
}

/// Copy of `mdp` with rewards shifted by up to `reward_noise` (clamped to
/// `[0, 1]`) and each transition row mixed with a random distribution at a
/// weight up to `mix`.
pub fn perturb(mdp: &ExplicitMdp, rng: &mut dyn RngCore, reward_noise: f64, mix: f64) -> Result<ExplicitMdp> {
    let mut out = mdp.clone();
    for r in &mut out.rewards {
        *r = (*r + rng.gen_range(-reward_noise..=reward_noise)).clamp(0.0, 1.0);
    }
    for row in out.transitions.chunks_mut(mdp.n_states) {
        let w = rng.gen_range(0.0..=mix);
        let noise: Vec<f64> = (0..row.len()).map(|_| rng.gen::<f64>()).collect();
        let z: f64 = noise.iter().sum();
        for (p, q) in row.iter_mut().zip(noise) {
            *p = (1.0 - w) * *p + w * q / z;
        }
    }
    renormalise_rows(&mut out);
    out.validate()?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationCheck {
    /// `‖V^π_M − V^π_M̂‖∞`
    pub lhs: f64,
    /// `ε_R/(1−γ) + γ ε_P V_max/(2(1−γ))`
    pub rhs: f64,
    pub eps_r: f64,
    pub eps_p: f64,
    pub holds: bool,
}

/// Evaluates both sides of the simulation lemma for one policy. `ε_R` and
/// `ε_P` are measured as the largest reward gap and transition L1 gap.
pub fn check_simulation_lemma(m: &ExplicitMdp, m_hat: &ExplicitMdp, policy: &[usize]) -> Result<SimulationCheck> {
    if m.n_states != m_hat.n_states || m.n_actions != m_hat.n_actions || m.gamma != m_hat.gamma {
        return Err(invalid("mdp pair", "must share states, actions and discount"));
    }
    let v = m.policy_value(policy)?;
    let v_hat = m_hat.policy_value(policy)?;
    let lhs = v.iter().zip(&v_hat).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let eps_r = m
        .rewards
        .iter()
        .zip(&m_hat.rewards)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let eps_p = m
        .transitions
        .chunks(m.n_states)
        .zip(m_hat.transitions.chunks(m.n_states))
        .map(|(p, q)| p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let rhs = crate::bounds::simulation_gap(eps_r, eps_p, m.gamma, m.v_max());
    Ok(SimulationCheck {
        lhs,
        rhs,
        eps_r,
        eps_p,
        // single-state pairs meet the bound with equality; allow rounding
        holds: lhs <= rhs + 1e-12 * rhs.max(1.0),
    })
}

/// Samples an [`ExplicitMdp`] as an environment for the learner.
#[derive(Debug, Clone)]
pub struct MdpEnv<'a> {
    mdp: &'a ExplicitMdp,
    start: usize,
    state: usize,
}

impl<'a> MdpEnv<'a> {
    pub fn new(mdp: &'a ExplicitMdp, start: usize) -> Result<Self> {
        check_index("start state", start, mdp.n_states)?;
        Ok(MdpEnv {
            mdp,
            start,
            state: start,
        })
    }
}

impl Environment for MdpEnv<'_> {
    fn n_actions(&self) -> usize {
        self.mdp.n_actions
    }

    fn reset(&mut self) -> Result<u64> {
        self.state = self.start;
        Ok(self.start as u64)
    }

    fn step(&mut self, action: usize, rng: &mut dyn RngCore) -> Result<Feedback> {
        check_index("action", action, self.mdp.n_actions)?;
        let reward = self.mdp.r(self.state, action);
        let u: f64 = rng.gen();
        let row = self.mdp.row(self.state, action);
        let mut acc = 0.0;
        let mut next = row.iter().rposition(|&p| p > 0.0).ok_or(Error::ZeroMass {
            state: self.state,
            action,
        })?;
        for (s2, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                next = s2;
                break;
            }
        }
        self.state = next;
        Ok(Feedback {
            reward,
            reward_raw: reward,
            next_state: next as u64,
        })
    }
}

/// Runs the learner on `mdp` for `steps` steps from state 0 and returns the
/// model together with its final greedy policy.
pub fn run_rmax(
    mdp: &ExplicitMdp,
    config: RmaxConfig,
    steps: usize,
    rule: &ActionRule,
    seed: u64,
) -> Result<(RmaxModel, Vec<usize>)> {
    let mut env = MdpEnv::new(mdp, 0)?;
    let mut model = RmaxModel::new(config, mdp.n_actions)?;
    let mut rng = seeded_rng(seed);
    let start = env.reset()?;
    run_steps(&mut env, &mut model, start, steps, rule, &mut rng, |_, _| {})?;
    let policy = (0..mdp.n_states).map(|s| argmax(&model.q_row(s as u64))).collect();
    Ok((model, policy))
}
