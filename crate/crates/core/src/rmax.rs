//! The R-MAX meta-agent.
//!
//! Counts are kept per `(state, action)` until the pair has been tried `m`
//! times; after that it is *known* and its statistics are frozen. Unknown
//! pairs are modelled as self-loops paying `R_max = 1`, so their value is
//! `V_max = 1/(1−γ)`. Value iteration runs exactly when a pair becomes known,
//! for `⌈ln(1/(ε(1−γ)))/(1−γ)⌉` sweeps.
//!
//! Tables are sparse: a state has a row only once it has been visited.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use num_rational::BigRational;
use num_traits::One;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::bounds::decimal;
use crate::error::{check_index, invalid, Error, Result};
use crate::learners::ActionRule;

pub const R_MAX: f64 = 1.0;

/// Result of acting in an environment the learner sees as a tabular MDP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feedback {
    /// Reward in `[0, 1]`.
    pub reward: f64,
    /// Unscaled reward, for logging only.
    pub reward_raw: f64,
    pub next_state: u64,
}

/// A tabular MDP driven by integer state and action codes.
pub trait Environment {
    fn n_actions(&self) -> usize;
    fn reset(&mut self) -> Result<u64>;
    fn step(&mut self, action: usize, rng: &mut dyn RngCore) -> Result<Feedback>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmaxConfig {
    pub m: u32,
    pub gamma: f64,
    pub epsilon: f64,
    /// Start every `Q̂` at `V_max`; `false` starts at 0 instead.
    pub optimistic_init: bool,
}

impl Default for RmaxConfig {
    fn default() -> Self {
        RmaxConfig {
            m: 10,
            gamma: 0.8,
            epsilon: 0.1,
            optimistic_init: true,
        }
    }
}

impl RmaxConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(invalid("m", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(invalid("gamma", format!("{} outside [0, 1)", self.gamma)));
        }
        // exact on the decimals, so ε = 5 is rejected at γ = 0.8
        let scaled = decimal(self.epsilon) * (BigRational::one() - decimal(self.gamma));
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) || scaled >= BigRational::one() {
            return Err(invalid("epsilon", format!("{} outside (0, 1/(1−γ))", self.epsilon)));
        }
        Ok(())
    }

    pub fn v_max(&self) -> f64 {
        R_MAX / (1.0 - self.gamma)
    }

    /// `⌈ln(1/(ε(1−γ)))/(1−γ)⌉`.
    pub fn sweeps(&self) -> usize {
        let g = 1.0 - self.gamma;
        ((1.0 / (self.epsilon * g)).ln() / g).ceil().max(0.0) as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Row {
    q: Vec<f64>,
    n: Vec<u32>,
    r_sum: Vec<f64>,
    next: Vec<BTreeMap<u64, u32>>,
}

impl Row {
    fn new(n_actions: usize, q0: f64) -> Self {
        Row {
            q: vec![q0; n_actions],
            n: vec![0; n_actions],
            r_sum: vec![0.0; n_actions],
            next: vec![BTreeMap::new(); n_actions],
        }
    }
}

/// Record of one pair crossing the `m` threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViEvent {
    pub state: u64,
    pub action: usize,
    pub sweeps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmaxModel {
    config: RmaxConfig,
    n_actions: usize,
    rows: HashMap<u64, Row>,
    known: usize,
    vi_log: Vec<ViEvent>,
}

impl RmaxModel {
    pub fn new(config: RmaxConfig, n_actions: usize) -> Result<Self> {
        config.validate()?;
        if n_actions == 0 {
            return Err(invalid("n_actions", "must be positive"));
        }
        Ok(RmaxModel {
            config,
            n_actions,
            rows: HashMap::new(),
            known: 0,
            vi_log: Vec::new(),
        })
    }

    pub fn config(&self) -> &RmaxConfig {
        &self.config
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn q0(&self) -> f64 {
        if self.config.optimistic_init {
            self.config.v_max()
        } else {
            0.0
        }
    }

    pub fn q(&self, s: u64, a: usize) -> f64 {
        self.rows.get(&s).map_or(self.q0(), |r| r.q[a])
    }

    pub fn q_row(&self, s: u64) -> Vec<f64> {
        self.rows
            .get(&s)
            .map_or_else(|| vec![self.q0(); self.n_actions], |r| r.q.clone())
    }

    pub fn value(&self, s: u64) -> f64 {
        self.rows
            .get(&s)
            .map_or(self.q0(), |r| r.q.iter().cloned().fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn count(&self, s: u64, a: usize) -> u32 {
        self.rows.get(&s).map_or(0, |r| r.n[a])
    }

    pub fn transition_count(&self, s: u64, a: usize, s2: u64) -> u32 {
        self.rows.get(&s).and_then(|r| r.next[a].get(&s2).copied()).unwrap_or(0)
    }

    pub fn is_known(&self, s: u64, a: usize) -> bool {
        self.count(s, a) >= self.config.m
    }

    /// Number of m-known pairs.
    pub fn known_pairs(&self) -> usize {
        self.known
    }

    pub fn known_pairs_where(&self, mut keep: impl FnMut(u64) -> bool) -> usize {
        self.rows
            .iter()
            .filter(|(s, _)| keep(**s))
            .map(|(_, r)| r.n.iter().filter(|&&n| n >= self.config.m).count())
            .sum()
    }

    /// States with at least one recorded visit.
    pub fn visited_states(&self) -> usize {
        self.rows.len()
    }

    /// Every time value iteration ran, in order.
    pub fn vi_log(&self) -> &[ViEvent] {
        &self.vi_log
    }

    /// Greedy (lowest index on ties) or Boltzmann choice over `Q̂(s, ·)`.
    pub fn choose_action(&self, s: u64, rule: &ActionRule, rng: &mut dyn RngCore) -> usize {
        match self.rows.get(&s) {
            Some(row) => rule.select(&row.q, rng),
            None => rule.select(&vec![self.q0(); self.n_actions], rng),
        }
    }

    /// Adds one observed transition. Returns whether value iteration ran.
    pub fn record(&mut self, s: u64, a: usize, r: f64, s_next: u64) -> Result<bool> {
        check_index("action", a, self.n_actions)?;
        if !(0.0..=R_MAX).contains(&r) {
            return Err(invalid("reward", format!("{r} outside [0, 1]")));
        }
        let m = self.config.m;
        let q0 = self.q0();
        let n_actions = self.n_actions;
        let row = self.rows.entry(s).or_insert_with(|| Row::new(n_actions, q0));
        if row.n[a] >= m {
            return Ok(false);
        }
        row.r_sum[a] += r;
        row.n[a] += 1;
        *row.next[a].entry(s_next).or_insert(0) += 1;
        if row.n[a] == m {
            self.known += 1;
            let sweeps = self.value_iteration();
            self.vi_log.push(ViEvent {
                state: s,
                action: a,
                sweeps,
            });
            return Ok(true);
        }
        Ok(false)
    }

    /// `(R̂, T̂)` of the empirical m-known MDP. Unknown pairs are maximally
    /// rewarding self-loops.
    pub fn empirical_model(&self, s: u64, a: usize) -> (f64, Vec<(u64, f64)>) {
        match self.rows.get(&s) {
            Some(row) if row.n[a] >= self.config.m => {
                let n = row.n[a] as f64;
                let t = row.next[a].iter().map(|(&s2, &c)| (s2, c as f64 / n)).collect();
                (row.r_sum[a] / n, t)
            }
            _ => (R_MAX, vec![(s, 1.0)]),
        }
    }

    /// Synchronous value iteration over the known pairs; unknown pairs keep
    /// their current value. Returns the number of sweeps performed.
    pub fn value_iteration(&mut self) -> usize {
        let sweeps = self.config.sweeps();
        let gamma = self.config.gamma;
        let m = self.config.m;
        let mut known: Vec<(u64, usize, f64, Vec<(u64, f64)>)> = Vec::new();
        for (&s, row) in &self.rows {
            for a in 0..self.n_actions {
                if row.n[a] >= m {
                    let (r, t) = self.empirical_model(s, a);
                    known.push((s, a, r, t));
                }
            }
        }
        let mut fresh = vec![0.0; known.len()];
        for _ in 0..sweeps {
            for (slot, (_, _, r, t)) in fresh.iter_mut().zip(&known) {
                *slot = r + gamma * t.iter().map(|&(s2, p)| p * self.value(s2)).sum::<f64>();
            }
            for (&v, (s, a, _, _)) in fresh.iter().zip(&known) {
                self.rows.get_mut(s).unwrap().q[*a] = v;
            }
        }
        sweeps
    }

    /// Largest `|Q̂ − T Q̂|` over known pairs under the empirical model.
    pub fn bellman_residual(&self) -> f64 {
        let gamma = self.config.gamma;
        let mut worst: f64 = 0.0;
        for (&s, row) in &self.rows {
            for a in 0..self.n_actions {
                if row.n[a] >= self.config.m {
                    let (r, t) = self.empirical_model(s, a);
                    let backup = r + gamma * t.iter().map(|&(s2, p)| p * self.value(s2)).sum::<f64>();
                    worst = worst.max((backup - row.q[a]).abs());
                }
            }
        }
        worst
    }

    /// States with a row, sorted.
    pub fn states(&self) -> Vec<u64> {
        let mut s: Vec<u64> = self.rows.keys().copied().collect();
        s.sort_unstable();
        s
    }

    /// Writes a resumable CSV dump.
    ///
    /// The first line is `# rfos-rmax v1 m=.. gamma=.. epsilon=.. n_actions=..
    /// optimistic=..`, followed by a CSV table with header
    /// `kind,state,action,next_state,count,r_sum,q`. `pair` rows carry the
    /// visit count, reward sum and `Q̂` of a pair; `edge` rows carry one
    /// transition count.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(std::fs::File::create(path)?);
        writeln!(
            out,
            "# rfos-rmax v1 m={} gamma={} epsilon={} n_actions={} optimistic={}",
            self.config.m, self.config.gamma, self.config.epsilon, self.n_actions, self.config.optimistic_init
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["kind", "state", "action", "next_state", "count", "r_sum", "q"])?;
        for s in self.states() {
            let row = &self.rows[&s];
            for a in 0..self.n_actions {
                w.write_record(&[
                    "pair".to_string(),
                    s.to_string(),
                    a.to_string(),
                    String::new(),
                    row.n[a].to_string(),
                    row.r_sum[a].to_string(),
                    row.q[a].to_string(),
                ])?;
                for (s2, c) in &row.next[a] {
                    w.write_record(&[
                        "edge".to_string(),
                        s.to_string(),
                        a.to_string(),
                        s2.to_string(),
                        c.to_string(),
                        String::new(),
                        String::new(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = BufReader::new(std::fs::File::open(path)?);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        let fields: HashMap<&str, &str> = header
            .trim()
            .strip_prefix("# rfos-rmax v1 ")
            .ok_or_else(|| Error::Checkpoint("missing header line".into()))?
            .split_whitespace()
            .filter_map(|kv| kv.split_once('='))
            .collect();
        let get = |k: &str| {
            fields
                .get(k)
                .copied()
                .ok_or_else(|| Error::Checkpoint(format!("header lacks `{k}`")))
        };
        let bad = |what: &str| Error::Checkpoint(format!("cannot parse {what}"));
        let config = RmaxConfig {
            m: get("m")?.parse().map_err(|_| bad("m"))?,
            gamma: get("gamma")?.parse().map_err(|_| bad("gamma"))?,
            epsilon: get("epsilon")?.parse().map_err(|_| bad("epsilon"))?,
            optimistic_init: get("optimistic")?.parse().map_err(|_| bad("optimistic"))?,
        };
        let n_actions: usize = get("n_actions")?.parse().map_err(|_| bad("n_actions"))?;
        let mut model = RmaxModel::new(config, n_actions)?;
        let q0 = model.q0();
        let mut csv = csv::Reader::from_reader(reader);
        for rec in csv.records() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).ok_or_else(|| bad("row"));
            let s: u64 = field(1)?.parse().map_err(|_| bad("state"))?;
            let a: usize = field(2)?.parse().map_err(|_| bad("action"))?;
            check_index("action", a, n_actions)?;
            let row = model.rows.entry(s).or_insert_with(|| Row::new(n_actions, q0));
            match field(0)? {
                "pair" => {
                    row.n[a] = field(4)?.parse().map_err(|_| bad("count"))?;
                    row.r_sum[a] = field(5)?.parse().map_err(|_| bad("r_sum"))?;
                    row.q[a] = field(6)?.parse().map_err(|_| bad("q"))?;
                }
                "edge" => {
                    let s2: u64 = field(3)?.parse().map_err(|_| bad("next_state"))?;
                    let c: u32 = field(4)?.parse().map_err(|_| bad("count"))?;
                    row.next[a].insert(s2, c);
                }
                other => return Err(Error::Checkpoint(format!("unknown row kind `{other}`"))),
            }
        }
        for row in model.rows.values() {
            for a in 0..n_actions {
                if row.next[a].values().sum::<u32>() != row.n[a] {
                    return Err(Error::Checkpoint("edge counts do not sum to pair count".into()));
                }
            }
        }
        model.known = model.known_pairs_where(|_| true);
        Ok(model)
    }
}

/// Per-step trace of [`run_steps`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepLog {
    pub state: u64,
    pub action: usize,
    pub feedback: Feedback,
    pub vi_triggered: bool,
}

/// Runs the R-FOS inner loop for `steps` steps from `state`, calling `log`
/// after every step. Returns the final state.
pub fn run_steps<E: Environment + ?Sized>(
    env: &mut E,
    model: &mut RmaxModel,
    mut state: u64,
    steps: usize,
    rule: &ActionRule,
    rng: &mut dyn RngCore,
    mut log: impl FnMut(&RmaxModel, &StepLog),
) -> Result<u64> {
    for _ in 0..steps {
        let action = model.choose_action(state, rule, rng);
        let feedback = env.step(action, rng)?;
        let vi_triggered = model.record(state, action, feedback.reward, feedback.next_state)?;
        log(
            model,
            &StepLog {
                state,
                action,
                feedback,
                vi_triggered,
            },
        );
        state = feedback.next_state;
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeded_rng;
    use proptest::prelude::*;
    use rand::Rng;

    fn model(m: u32, n_actions: usize) -> RmaxModel {
        RmaxModel::new(
            RmaxConfig {
                m,
                ..RmaxConfig::default()
            },
            n_actions,
        )
        .unwrap()
    }

    #[test]
    fn sweep_count_formula() {
        let cfg = RmaxConfig::default();
        // ln(50) / 0.2 = 19.56...
        assert_eq!(cfg.sweeps(), 20);
    }

    #[test]
    fn fresh_model_prefers_first_action() {
        let m = model(3, 4);
        assert_eq!(m.choose_action(17, &ActionRule::Greedy, &mut seeded_rng(0)), 0);
        assert_eq!(m.q(17, 3), RmaxConfig::default().v_max());
    }

    #[test]
    fn argmax_action() {
        let mut m = model(1, 2);
        m.rows.insert(0, Row::new(2, 0.0));
        m.rows.get_mut(&0).unwrap().q = vec![2.0, 3.0];
        assert_eq!(m.choose_action(0, &ActionRule::Greedy, &mut seeded_rng(0)), 1);
    }

    #[test]
    fn hot_boltzmann_is_uniform() {
        let mut m = model(1, 2);
        m.rows.insert(0, Row::new(2, 0.0));
        m.rows.get_mut(&0).unwrap().q = vec![2.0, 3.0];
        let rule = ActionRule::Boltzmann { temperature: 1e6 };
        let mut rng = seeded_rng(3);
        let ones = (0..10_000).filter(|_| m.choose_action(0, &rule, &mut rng) == 1).count();
        assert!((ones as f64 / 10_000.0 - 0.5).abs() <= 0.02);
    }

    #[test]
    fn vi_fires_at_m() {
        let mut m = model(3, 2);
        assert!(!m.record(0, 1, 0.5, 0).unwrap());
        assert!(!m.record(0, 1, 0.5, 0).unwrap());
        assert!(m.record(0, 1, 0.5, 0).unwrap());
        assert_eq!(m.vi_log().len(), 1);
        // frozen once known
        assert!(!m.record(0, 1, 0.0, 7).unwrap());
        assert_eq!(m.count(0, 1), 3);
        assert_eq!(m.transition_count(0, 1, 7), 0);
        assert_eq!(m.empirical_model(0, 1).0, 0.5);
    }

    #[test]
    fn unknown_pairs_are_optimistic_self_loops() {
        let mut m = model(10, 2);
        m.record(4, 0, 0.2, 5).unwrap();
        assert_eq!(m.empirical_model(4, 0), (1.0, vec![(4, 1.0)]));
        assert_eq!(m.empirical_model(9, 1), (1.0, vec![(9, 1.0)]));
    }

    #[test]
    fn empirical_transition_ratios() {
        let mut m = model(10, 1);
        for i in 0..10 {
            m.record(0, 0, 0.0, if i < 3 { 1 } else { 2 }).unwrap();
        }
        let (_, t) = m.empirical_model(0, 0);
        assert_eq!(t, vec![(1, 0.3), (2, 0.7)]);
    }

    #[test]
    fn self_loop_converges_to_geometric_sum() {
        let mut m = model(1, 1);
        m.record(0, 0, 0.5, 0).unwrap();
        let target = 0.5 / (1.0 - 0.8);
        let sweeps = m.config().sweeps() as i32;
        // started at V_max = 5, contracts by γ per sweep
        let bound = 0.8f64.powi(sweeps) * (5.0 - target);
        assert!((m.q(0, 0) - target).abs() <= bound + 1e-12);
    }

    #[test]
    fn all_unknown_stays_at_v_max() {
        let mut m = model(5, 2);
        m.record(0, 0, 0.1, 1).unwrap();
        m.value_iteration();
        let v_max = RmaxConfig::default().v_max();
        assert_eq!(m.q(0, 0), v_max);
        assert_eq!(m.q(1, 1), v_max);
    }

    #[test]
    fn literal_zero_init() {
        let cfg = RmaxConfig {
            optimistic_init: false,
            ..RmaxConfig::default()
        };
        let m = RmaxModel::new(cfg, 2).unwrap();
        assert_eq!(m.q(0, 0), 0.0);
    }

    #[test]
    fn config_validation() {
        let bad = |cfg: RmaxConfig| RmaxModel::new(cfg, 2).is_err();
        assert!(bad(RmaxConfig {
            m: 0,
            ..RmaxConfig::default()
        }));
        assert!(bad(RmaxConfig {
            gamma: 1.0,
            ..RmaxConfig::default()
        }));
        assert!(bad(RmaxConfig {
            epsilon: 5.0,
            ..RmaxConfig::default()
        }));
        assert!(model(1, 2).record(0, 0, 1.5, 0).is_err());
        assert!(model(1, 2).record(0, 2, 0.5, 0).is_err());
    }

    #[test]
    fn checkpoint_roundtrip() {
        let mut m = model(3, 2);
        let mut rng = seeded_rng(8);
        for _ in 0..200 {
            let s = rng.gen_range(0..6);
            m.record(s, rng.gen_range(0..2), rng.gen(), rng.gen_range(0..6))
                .unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.csv");
        m.save_csv(&path).unwrap();
        let back = RmaxModel::load_csv(&path).unwrap();
        assert_eq!(back.rows, m.rows);
        assert_eq!(back.known_pairs(), m.known_pairs());
    }

    fn random_model(seed: u64, steps: usize) -> (RmaxModel, Vec<(u64, usize)>) {
        let mut m = model(4, 3);
        let mut rng = seeded_rng(seed);
        let mut known_trace = Vec::new();
        for _ in 0..steps {
            let s = rng.gen_range(0..8);
            let a = rng.gen_range(0..3);
            m.record(s, a, rng.gen(), rng.gen_range(0..8)).unwrap();
            known_trace.push((m.known_pairs() as u64, 0));
        }
        (m, known_trace)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn counts_are_consistent(seed in any::<u64>(), steps in 0usize..400) {
            let (m, trace) = random_model(seed, steps);
            for s in m.states() {
                for a in 0..3 {
                    let total: u32 = m.rows[&s].next[a].values().sum();
                    prop_assert_eq!(total, m.count(s, a));
                    prop_assert!(m.count(s, a) <= 4);
                    let (_, t) = m.empirical_model(s, a);
                    let mass: f64 = t.iter().map(|x| x.1).sum();
                    prop_assert!((mass - 1.0).abs() < 1e-12);
                    prop_assert!((0.0..=5.0 + 1e-12).contains(&m.q(s, a)));
                }
            }
            // the known set never shrinks
            prop_assert!(trace.windows(2).all(|w| w[0].0 <= w[1].0));
        }

        #[test]
        fn residual_within_contraction_bound(seed in any::<u64>(), steps in 50usize..400) {
            let (mut m, _) = random_model(seed, steps);
            let sweeps = m.value_iteration();
            let bound = m.config().gamma.powi(sweeps as i32) * m.config().v_max();
            prop_assert!(m.bellman_residual() <= bound + 1e-12);
        }
    }
}
