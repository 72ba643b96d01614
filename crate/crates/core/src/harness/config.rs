use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bounds::{self, BoundInputs};
use crate::error::{invalid, Error, Result};
use crate::games::MatrixGame;
use crate::learners::ActionRule;
use crate::metagame::{Case, MetaConfig, MetaGame, OpponentConfig, WindowContent};
use crate::rmax::RmaxConfig;

use super::convergence::ConvergenceOptions;

/// Environment variable that overrides `output_dir`.
pub const OUT_ENV: &str = "RFOS_OUT";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Greedy,
    Boltzmann,
}

fn rule(kind: RuleKind, temperature: f64) -> ActionRule {
    match kind {
        RuleKind::Greedy => ActionRule::Greedy,
        RuleKind::Boltzmann => ActionRule::Boltzmann { temperature },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSection {
    pub preset: String,
    pub h_inner: usize,
}

impl Default for GameSection {
    fn default() -> Self {
        GameSection {
            preset: "matching_pennies".into(),
            h_inner: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetaSection {
    pub case: Case,
    pub h: usize,
    #[serde(rename = "K")]
    pub k_inner: usize,
    pub lambda: f64,
    pub window: WindowContent,
    /// Meta-steps per episode.
    pub h_meta: usize,
    pub reset_opponents: bool,
    /// Inner action rule for the shaper's table in Case I and II.
    pub shaper_rule: RuleKind,
    pub shaper_temperature: f64,
}

impl Default for MetaSection {
    fn default() -> Self {
        let d = MetaConfig::default();
        MetaSection {
            case: d.case,
            h: d.h,
            k_inner: d.k_inner,
            lambda: d.lambda,
            window: d.window,
            h_meta: 100,
            reset_opponents: d.reset_opponents,
            shaper_rule: RuleKind::Greedy,
            shaper_temperature: 1.0,
        }
    }
}

/// How the knownness threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MRule {
    /// Use `m` as given.
    Fixed,
    /// `m = ceil(m_scale · (|S||A|)^(nh))`, growing with the window like the
    /// theoretical threshold.
    Scaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RmaxSection {
    pub m: u32,
    pub m_rule: MRule,
    pub m_scale: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub optimistic_init: bool,
    pub rule: RuleKind,
    pub temperature: f64,
}

impl Default for RmaxSection {
    fn default() -> Self {
        let d = RmaxConfig::default();
        RmaxSection {
            m: d.m,
            m_rule: MRule::Fixed,
            m_scale: 1.0,
            gamma: d.gamma,
            epsilon: d.epsilon,
            delta: 0.1,
            optimistic_init: d.optimistic_init,
            rule: RuleKind::Boltzmann,
            temperature: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpponentSection {
    pub lr: f64,
    pub init: f64,
    pub rule: RuleKind,
    pub temperature: f64,
}

impl Default for OpponentSection {
    fn default() -> Self {
        let d = OpponentConfig::default();
        OpponentSection {
            lr: d.lr,
            init: d.init,
            rule: RuleKind::Greedy,
            temperature: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    /// Meta-steps per run; `None` means `steps_factor · m · |Ŝ|`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_steps: Option<u64>,
    pub steps_factor: f64,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            total_steps: None,
            steps_factor: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub h_values: Vec<usize>,
    /// Adds an `h = 4` cell. Slow.
    pub include_h4: bool,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            h_values: vec![2, 3],
            include_h4: false,
            threads: 0,
        }
    }
}

impl SweepSection {
    pub fn windows(&self) -> Vec<usize> {
        let mut hs = self.h_values.clone();
        if self.include_h4 && !hs.contains(&4) {
            hs.push(4);
        }
        hs.sort_unstable();
        hs.dedup();
        hs
    }
}

/// Everything a run or sweep needs. Every key has a default, so an empty
/// file is a valid config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub game: GameSection,
    pub meta: MetaSection,
    pub rmax: RmaxSection,
    pub opponent: OpponentSection,
    pub run: RunSection,
    pub sweep: SweepSection,
    pub convergence: ConvergenceOptions,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output_dir: None,
            seeds: vec![0, 1, 2, 3, 4],
            game: GameSection::default(),
            meta: MetaSection::default(),
            rmax: RmaxSection::default(),
            opponent: OpponentSection::default(),
            run: RunSection::default(),
            sweep: SweepSection::default(),
            convergence: ConvergenceOptions::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.meta.h_meta == 0 {
            return Err(invalid("h_meta", "must be positive"));
        }
        if !(self.run.steps_factor > 0.0) {
            return Err(invalid("steps_factor", "must be positive"));
        }
        if !(self.rmax.m_scale > 0.0) {
            return Err(invalid("m_scale", "must be positive"));
        }
        if !(self.rmax.delta > 0.0 && self.rmax.delta < 1.0) {
            return Err(invalid("delta", "must lie in (0, 1)"));
        }
        self.convergence.validate()?;
        self.rmax_config(self.meta.h)?.validate()?;
        self.shaper_rule().validate()?;
        self.opponent_config().rule.validate()?;
        Ok(())
    }

    /// `output_dir`, unless `RFOS_OUT` is set.
    pub fn resolved_output_dir(&self) -> Option<PathBuf> {
        match std::env::var_os(OUT_ENV) {
            Some(dir) if !dir.is_empty() => Some(PathBuf::from(dir)),
            _ => self.output_dir.clone(),
        }
    }

    pub fn game(&self) -> Result<MatrixGame> {
        MatrixGame::preset(&self.game.preset)?.with_horizon(self.game.h_inner)
    }

    pub fn meta_config(&self, h: usize) -> MetaConfig {
        MetaConfig {
            case: self.meta.case,
            h,
            k_inner: self.meta.k_inner,
            lambda: self.meta.lambda,
            window: self.meta.window,
            shaper_rule: rule(self.meta.shaper_rule, self.meta.shaper_temperature),
            reset_opponents: self.meta.reset_opponents,
        }
    }

    pub fn opponent_config(&self) -> OpponentConfig {
        OpponentConfig {
            lr: self.opponent.lr,
            init: self.opponent.init,
            rule: rule(self.opponent.rule, self.opponent.temperature),
        }
    }

    /// Rule R-FOS uses on its own `Q̂`.
    pub fn shaper_rule(&self) -> ActionRule {
        rule(self.rmax.rule, self.rmax.temperature)
    }

    pub fn meta_game(&self, h: usize) -> Result<MetaGame> {
        MetaGame::new(self.game()?, self.meta_config(h), &self.opponent_config())
    }

    /// Knownness threshold for window length `h`.
    pub fn m_for(&self, h: usize) -> Result<u32> {
        match self.rmax.m_rule {
            MRule::Fixed => Ok(self.rmax.m),
            MRule::Scaled => {
                let game = self.game()?;
                let sa = (game.n_states() * game.n_actions(0)) as f64;
                let n = game.n_players() as f64;
                let m = (self.rmax.m_scale * sa.powf(n * h as f64)).ceil();
                if m > u32::MAX as f64 {
                    return Err(Error::Overflow(format!("m for h = {h}")));
                }
                Ok((m as u32).max(1))
            }
        }
    }

    pub fn rmax_config(&self, h: usize) -> Result<RmaxConfig> {
        Ok(RmaxConfig {
            m: self.m_for(h)?,
            gamma: self.rmax.gamma,
            epsilon: self.rmax.epsilon,
            optimistic_init: self.rmax.optimistic_init,
        })
    }

    /// Meta-steps in one run at window length `h`.
    pub fn total_steps(&self, h: usize) -> Result<u64> {
        if let Some(t) = self.run.total_steps {
            return Ok(t);
        }
        let states = self.meta_game(h)?.n_states() as f64;
        let m = self.m_for(h)? as f64;
        Ok((self.run.steps_factor * m * states).ceil() as u64)
    }

    /// Inputs for the theoretical numbers matching this config.
    pub fn bound_inputs(&self, h: usize) -> Result<BoundInputs> {
        let game = self.game()?;
        let inputs = BoundInputs {
            epsilon: self.rmax.epsilon,
            delta: self.rmax.delta,
            gamma: self.rmax.gamma,
            lambda: self.meta.lambda,
            n_players: game.n_players() as u32,
            card_s: game.n_states() as u64,
            card_a: game.n_actions(0) as u64,
            h: h as u32,
            ..BoundInputs::default()
        };
        inputs.validate()?;
        Ok(inputs)
    }

    /// Predicted sample complexity ratio between consecutive windows.
    pub fn predicted_ratio(&self, h: usize) -> Result<f64> {
        let a = bounds::sample_complexity_case2(&self.bound_inputs(h)?)?;
        let b = bounds::sample_complexity_case2(&self.bound_inputs(h + 1)?)?;
        Ok(16f64.powf(bounds::log16(&b) - bounds::log16(&a)))
    }
}
