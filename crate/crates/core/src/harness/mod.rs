//! Config loading, single runs, convergence detection and sweeps.

pub mod config;
pub mod convergence;
pub mod run;
pub mod sweep;

pub use config::{MRule, RunConfig, OUT_ENV};
pub use convergence::{detect_convergence, ConvergenceOptions};
pub use run::{run, run_cell, RunRecord, RunSummary, StepRow};
pub use sweep::{summarize_dir, sweep, SweepSummary};
