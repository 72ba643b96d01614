//! Convergence time against window length, using `configs/scaling.toml`.
//! Output goes to `$RFOS_OUT` or a temporary directory.
//!
//!     cargo run --release --example scaling_sweep [--h4]

use std::path::PathBuf;

use rfos::harness::{sweep, RunConfig};

fn main() -> rfos::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/scaling.toml");
    let mut cfg = RunConfig::load(&path)?;
    cfg.output_dir = None;
    cfg.sweep.include_h4 = std::env::args().any(|a| a == "--h4");
    let tmp;
    let dir = match cfg.resolved_output_dir() {
        Some(d) => d,
        None => {
            tmp = tempfile::tempdir()?;
            tmp.path().to_path_buf()
        }
    };
    let summary = sweep(&cfg, &dir)?;
    println!(
        "{:>3} {:>6} {:>8} {:>12} {:>8} {:>10}",
        "h", "m", "steps", "convergence", "log16", "predicted"
    );
    for w in &summary.windows {
        println!(
            "{:>3} {:>6} {:>8} {:>12.0} {:>8.2} {:>10.2}",
            w.h, w.m, w.total_steps, w.convergence_steps.mean, w.log16_convergence_steps.mean, w.log16_predicted
        );
    }
    for r in &summary.ratios {
        if let Some(obs) = r.observed {
            println!(
                "h {} -> {}: ratio {obs:.2} (bound ratio {:.0})",
                r.h_from, r.h_to, r.predicted
            );
        }
    }
    Ok(())
}
