use std::collections::HashSet;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::rmax::{Environment, RmaxModel};
use crate::seeded_rng;

use super::config::RunConfig;
use super::convergence::detect_convergence;

/// One CSV row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub episode: u64,
    pub step: u64,
    pub reward_raw: f64,
    pub reward_norm: f64,
    /// m-known pairs over all pairs of the steady windows visited so far.
    pub known_frac: f64,
    /// 1 when this step's update triggered value iteration.
    pub vi: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub seed: u64,
    pub h: usize,
    pub m: u32,
    pub n_states: u64,
    pub steady_states: u64,
    pub total_steps: u64,
    pub episodes: u64,
    pub convergence_step: u64,
    pub convergence_episode: u64,
    pub converged: bool,
    /// Mean normalised reward over the last 10% of steps.
    pub final_mean_reward: f64,
    pub final_known_frac: f64,
    pub vi_count: u64,
}

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub rows: Vec<StepRow>,
    pub summary: RunSummary,
    pub model: RmaxModel,
}

impl RunRecord {
    pub fn rewards(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.reward_norm).collect()
    }
}

pub fn csv_name(h: usize, seed: u64) -> String {
    format!("run_h{h}_seed{seed}.csv")
}

/// Mean of the last tenth of `xs`.
pub fn final_mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let n = (xs.len() / 10).max(1);
    xs[xs.len() - n..].iter().sum::<f64>() / n as f64
}

/// Summary derived from the rows alone, so stored CSVs can be re-summarised.
pub fn summarise_rows(config: &RunConfig, h: usize, seed: u64, rows: &[StepRow]) -> Result<RunSummary> {
    let game = config.meta_game(h)?;
    let rewards: Vec<f64> = rows.iter().map(|r| r.reward_norm).collect();
    let conv = detect_convergence(&rewards, &config.convergence) as u64;
    let h_meta = config.meta.h_meta as u64;
    Ok(RunSummary {
        seed,
        h,
        m: config.m_for(h)?,
        n_states: game.n_states(),
        steady_states: game.steady_state_count(),
        total_steps: rows.len() as u64,
        episodes: rows.last().map_or(0, |r| r.episode + 1),
        convergence_step: conv,
        convergence_episode: conv / h_meta,
        converged: conv < rows.len() as u64,
        final_mean_reward: final_mean(&rewards),
        final_known_frac: rows.last().map_or(0.0, |r| r.known_frac),
        vi_count: rows.iter().map(|r| r.vi as u64).sum(),
    })
}

/// Runs R-FOS with the config's window length, writing the CSV under the
/// resolved output directory when there is one.
pub fn run(config: &RunConfig, seed: u64) -> Result<RunRecord> {
    let csv = config
        .resolved_output_dir()
        .map(|d| d.join(csv_name(config.meta.h, seed)));
    run_cell(config, config.meta.h, seed, csv.as_deref())
}

/// One run at window length `h`. The CSV, if requested, is opened before any
/// work so a bad path fails fast, and rows are streamed as they happen.
pub fn run_cell(config: &RunConfig, h: usize, seed: u64, csv: Option<&Path>) -> Result<RunRecord> {
    config.validate()?;
    let mut writer = match csv {
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            Some(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
        }
        None => None,
    };

    let mut env = config.meta_game(h)?;
    let mut model = RmaxModel::new(config.rmax_config(h)?, Environment::n_actions(&env))?;
    let rule = config.shaper_rule();
    let total = config.total_steps(h)?;
    let h_meta = config.meta.h_meta as u64;
    let n_actions = model.n_actions() as f64;
    let mut rng = seeded_rng(seed);
    let mut rows = Vec::with_capacity(total as usize);

    let mut state = 0;
    let mut known = 0u64;
    let mut visited = HashSet::new();
    for step in 0..total {
        let episode = step / h_meta;
        if step % h_meta == 0 {
            state = Environment::reset(&mut env)?;
        }
        let action = model.choose_action(state, &rule, &mut rng);
        let fb = env.step(action, &mut rng)?;
        let vi = model.record(state, action, fb.reward, fb.next_state)?;
        if env.is_steady_code(state) {
            visited.insert(state);
            if vi {
                known += 1;
            }
        }
        let row = StepRow {
            episode,
            step,
            reward_raw: fb.reward_raw,
            reward_norm: fb.reward,
            known_frac: if visited.is_empty() {
                0.0
            } else {
                known as f64 / (visited.len() as f64 * n_actions)
            },
            vi: vi as u8,
        };
        if let Some(w) = writer.as_mut() {
            w.serialize(row)?;
        }
        rows.push(row);
        state = fb.next_state;
    }
    if let Some(mut w) = writer {
        w.flush()?;
    }
    let summary = summarise_rows(config, h, seed, &rows)?;
    Ok(RunRecord { rows, summary, model })
}

pub fn read_rows(path: &Path) -> Result<Vec<StepRow>> {
    let mut reader = csv::Reader::from_path(path)?;
    reader.deserialize().map(|r| r.map_err(Into::into)).collect()
}

/// Directory for a sweep or run: the resolved output directory or `fallback`.
pub fn output_dir_or(config: &RunConfig, fallback: &str) -> PathBuf {
    config.resolved_output_dir().unwrap_or_else(|| PathBuf::from(fallback))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short(steps: u64) -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.run.total_steps = Some(steps);
        cfg
    }

    #[test]
    fn rows_have_expected_shape() {
        let rec = run_cell(&short(250), 2, 0, None).unwrap();
        assert_eq!(rec.rows.len(), 250);
        assert_eq!(rec.rows[0].episode, 0);
        assert_eq!(rec.rows[249].episode, 2);
        assert!(rec.rows.iter().all(|r| (0.0..=1.0).contains(&r.reward_norm)));
        assert!(rec.rows.iter().all(|r| (0.0..=1.0).contains(&r.known_frac)));
        assert_eq!(rec.summary.vi_count, rec.model.vi_log().len() as u64);
    }

    #[test]
    fn same_seed_same_rows() {
        let a = run_cell(&short(300), 2, 5, None).unwrap();
        let b = run_cell(&short(300), 2, 5, None).unwrap();
        assert_eq!(a.rows, b.rows);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x").join(csv_name(2, 1));
        let rec = run_cell(&short(120), 2, 1, Some(&path)).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("episode,step,reward_raw,reward_norm,known_frac,vi\n"));
        assert_eq!(read_rows(&path).unwrap(), rec.rows);
    }

    #[test]
    fn bad_output_path_fails_before_running() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "").unwrap();
        let err = run_cell(&short(1_000_000_000), 2, 0, Some(&blocker.join("a.csv")));
        assert!(err.is_err());
    }

    #[test]
    fn final_mean_uses_last_tenth() {
        let xs: Vec<f64> = (0..20).map(|i| if i >= 18 { 1.0 } else { 0.0 }).collect();
        assert_eq!(final_mean(&xs), 1.0);
        assert_eq!(final_mean(&[]), 0.0);
    }
}
