use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds;
use crate::error::{Error, Result};

use super::config::RunConfig;
use super::convergence::trailing_mean;
use super::run::{csv_name, read_rows, run_cell, summarise_rows, RunSummary, StepRow};

pub const SUMMARY_FILE: &str = "summary.json";
pub const GNUPLOT_FILE: &str = "curves.dat";

/// Points kept per stored curve.
const CURVE_POINTS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub h: usize,
    pub seed: u64,
    pub error: String,
}

/// Mean and standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
}

impl Stat {
    pub fn of(xs: &[f64]) -> Stat {
        let n = xs.len() as f64;
        if xs.is_empty() {
            return Stat {
                mean: f64::NAN,
                se: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n;
        let se = if xs.len() > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (var / n).sqrt()
        } else {
            0.0
        };
        Stat { mean, se }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub h: usize,
    pub seeds: usize,
    pub m: u32,
    pub n_states: u64,
    pub total_steps: u64,
    pub convergence_steps: Stat,
    pub convergence_episodes: Stat,
    /// log16 of each seed's convergence step, averaged.
    pub log16_convergence_steps: Stat,
    pub final_mean_reward: Stat,
    pub final_known_frac: Stat,
    /// How many seeds converged before the run ended.
    pub converged: usize,
    /// log16 of the theoretical sample complexity.
    pub log16_predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub h_from: usize,
    pub h_to: usize,
    /// `None` when the smaller window converged at step 0.
    pub observed: Option<f64>,
    pub predicted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub windows: Vec<WindowStats>,
    pub ratios: Vec<RatioStats>,
    pub cells: Vec<RunSummary>,
    pub failures: Vec<CellFailure>,
}

fn log16(x: f64) -> f64 {
    x.max(1.0).ln() / 16f64.ln()
}

/// Runs every `(h, seed)` cell in parallel, writes per-run CSVs, curve files
/// and `summary.json` into `dir`. A failing cell is recorded, not fatal.
pub fn sweep(config: &RunConfig, dir: &Path) -> Result<SweepSummary> {
    config.validate()?;
    fs::create_dir_all(dir)?;
    let cells: Vec<(usize, u64)> = config
        .sweep
        .windows()
        .into_iter()
        .flat_map(|h| config.seeds.iter().map(move |&s| (h, s)))
        .collect();
    let work = || {
        cells
            .par_iter()
            .map(|&(h, seed)| {
                let path = dir.join(csv_name(h, seed));
                (
                    h,
                    seed,
                    run_cell(config, h, seed, Some(&path)).map(|r| (r.summary, r.rows)),
                )
            })
            .collect::<Vec<_>>()
    };
    let results = if config.sweep.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.sweep.threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(work)
    } else {
        work()
    };
    let mut done = Vec::new();
    let mut failures = Vec::new();
    for (h, seed, res) in results {
        match res {
            Ok(ok) => done.push(ok),
            Err(e) => failures.push(CellFailure {
                h,
                seed,
                error: e.to_string(),
            }),
        }
    }
    finish(config, dir, done, failures)
}

/// Rebuilds the summary and curve files from the CSVs a sweep left in `dir`.
pub fn summarize_dir(config: &RunConfig, dir: &Path) -> Result<SweepSummary> {
    let mut done = Vec::new();
    let mut failures = Vec::new();
    for h in config.sweep.windows() {
        for &seed in &config.seeds {
            let res = read_rows(&dir.join(csv_name(h, seed)))
                .and_then(|rows| Ok((summarise_rows(config, h, seed, &rows)?, rows)));
            match res {
                Ok(ok) => done.push(ok),
                Err(e) => failures.push(CellFailure {
                    h,
                    seed,
                    error: e.to_string(),
                }),
            }
        }
    }
    finish(config, dir, done, failures)
}

fn finish(
    config: &RunConfig,
    dir: &Path,
    mut done: Vec<(RunSummary, Vec<StepRow>)>,
    failures: Vec<CellFailure>,
) -> Result<SweepSummary> {
    done.sort_by_key(|(s, _)| (s.h, s.seed));
    let mut windows = Vec::new();
    let mut gnuplot = String::from("# step log16_step mean_reward se_reward\n");
    for h in config.sweep.windows() {
        let runs: Vec<&(RunSummary, Vec<StepRow>)> = done.iter().filter(|(s, _)| s.h == h).collect();
        if runs.is_empty() {
            continue;
        }
        let col = |f: &dyn Fn(&RunSummary) -> f64| -> Vec<f64> { runs.iter().map(|(s, _)| f(s)).collect() };
        let predicted = bounds::sample_complexity_case2(&config.bound_inputs(h)?)?;
        windows.push(WindowStats {
            h,
            seeds: runs.len(),
            m: runs[0].0.m,
            n_states: runs[0].0.n_states,
            total_steps: runs[0].0.total_steps,
            convergence_steps: Stat::of(&col(&|s| s.convergence_step as f64)),
            convergence_episodes: Stat::of(&col(&|s| s.convergence_episode as f64)),
            log16_convergence_steps: Stat::of(&col(&|s| log16(s.convergence_step as f64))),
            final_mean_reward: Stat::of(&col(&|s| s.final_mean_reward)),
            final_known_frac: Stat::of(&col(&|s| s.final_known_frac)),
            converged: runs.iter().filter(|(s, _)| s.converged).count(),
            log16_predicted: bounds::log16(&predicted),
        });
        let curve = mean_curve(config, &runs.iter().map(|(_, r)| r.as_slice()).collect::<Vec<_>>());
        write_curve_csv(&dir.join(format!("curve_h{h}.csv")), &curve)?;
        gnuplot.push_str(&format!("# h = {h}\n"));
        for (step, mean, se) in &curve {
            gnuplot.push_str(&format!("{step} {:.6} {mean:.6} {se:.6}\n", log16(*step as f64)));
        }
        gnuplot.push_str("\n\n");
    }
    fs::write(dir.join(GNUPLOT_FILE), gnuplot)?;

    let mut ratios = Vec::new();
    for pair in windows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let mut predicted = 1.0;
        for h in a.h..b.h {
            predicted *= config.predicted_ratio(h)?;
        }
        ratios.push(RatioStats {
            h_from: a.h,
            h_to: b.h,
            observed: (a.convergence_steps.mean > 0.0).then(|| b.convergence_steps.mean / a.convergence_steps.mean),
            predicted,
        });
    }
    let summary = SweepSummary {
        windows,
        ratios,
        cells: done.into_iter().map(|(s, _)| s).collect(),
        failures,
    };
    fs::write(dir.join(SUMMARY_FILE), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// Seed-averaged smoothed reward, thinned to at most `CURVE_POINTS` points.
fn mean_curve(config: &RunConfig, runs: &[&[StepRow]]) -> Vec<(u64, f64, f64)> {
    let len = runs.iter().map(|r| r.len()).min().unwrap_or(0);
    if len == 0 {
        return vec![];
    }
    let smoothed: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| {
            let xs: Vec<f64> = r[..len].iter().map(|x| x.reward_norm).collect();
            trailing_mean(&xs, config.convergence.window(len))
        })
        .collect();
    let stride = len.div_ceil(CURVE_POINTS).max(1);
    (0..len)
        .step_by(stride)
        .chain(std::iter::once(len - 1))
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .map(|i| {
            let stat = Stat::of(&smoothed.iter().map(|s| s[i]).collect::<Vec<_>>());
            (i as u64, stat.mean, stat.se)
        })
        .collect()
}

fn write_curve_csv(path: &Path, curve: &[(u64, f64, f64)]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(f, "step,log16_step,mean_reward,se_reward")?;
    for (step, mean, se) in curve {
        writeln!(f, "{step},{},{mean},{se}", log16(*step as f64))?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> RunConfig {
        let mut cfg = RunConfig::default();
        cfg.seeds = vec![0, 1];
        cfg.sweep.h_values = vec![1, 2];
        cfg.run.total_steps = Some(400);
        cfg
    }

    #[test]
    fn stat_of_known_values() {
        let s = Stat::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, 2.0);
        assert!((s.se - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sweep_writes_files_and_resummarises() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny();
        let first = sweep(&cfg, dir.path()).unwrap();
        assert!(first.failures.is_empty());
        assert_eq!(first.cells.len(), 4);
        assert_eq!(first.windows.len(), 2);
        assert_eq!(first.ratios.len(), 1);
        for name in [SUMMARY_FILE, GNUPLOT_FILE, "curve_h1.csv", "curve_h2.csv"] {
            assert!(dir.path().join(name).exists(), "{name}");
        }
        let again = summarize_dir(&cfg, dir.path()).unwrap();
        assert_eq!(first, again);
        let parsed: SweepSummary =
            serde_json::from_str(&fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap()).unwrap();
        assert_eq!(parsed.cells, first.cells);
    }

    #[test]
    fn missing_cells_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let out = summarize_dir(&tiny(), dir.path()).unwrap();
        assert_eq!(out.failures.len(), 4);
        assert!(out.windows.is_empty());
    }
}
