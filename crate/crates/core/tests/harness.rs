use rfos::harness::{run_cell, sweep, RunConfig};
use rfos::learners::ActionRule;
use rfos::oracle::{ExplicitMdp, MdpEnv};
use rfos::rmax::{run_steps, Environment, RmaxConfig, RmaxModel};
use rfos::seeded_rng;

#[test]
fn known_fraction_reaches_one_at_defaults() {
    let cfg = RunConfig::default();
    assert_eq!(cfg.total_steps(2).unwrap(), 2100);
    for seed in 0..3 {
        let rec = run_cell(&cfg, 2, seed, None).unwrap();
        let first = rec.rows.iter().position(|r| r.known_frac == 1.0);
        assert!(first.is_some_and(|i| i < 2100), "seed {seed}");
    }
}

#[test]
fn unit_threshold_fires_once_per_pair() {
    // one state, three actions: every pair becomes known on its first try
    let mdp = ExplicitMdp::new(1, 3, vec![1.0; 3], vec![0.1, 0.5, 0.9], 0.8).unwrap();
    let mut env = MdpEnv::new(&mdp, 0).unwrap();
    let mut model = RmaxModel::new(
        RmaxConfig {
            m: 1,
            ..RmaxConfig::default()
        },
        3,
    )
    .unwrap();
    let mut rng = seeded_rng(0);
    let start = env.reset().unwrap();
    let mut fired = 0;
    run_steps(
        &mut env,
        &mut model,
        start,
        500,
        &ActionRule::Boltzmann { temperature: 1.0 },
        &mut rng,
        |_, log| {
            fired += usize::from(log.vi_triggered);
        },
    )
    .unwrap();
    assert_eq!(fired, 3);
    assert_eq!(model.vi_log().len(), 3);
}

#[test]
fn unit_threshold_on_meta_game() {
    let mut cfg = RunConfig::default();
    cfg.rmax.m = 1;
    cfg.meta.h = 1;
    cfg.run.total_steps = Some(3000);
    let rec = run_cell(&cfg, 1, 0, None).unwrap();
    // every visited (window, action) pair is known after one visit
    let visited: std::collections::HashSet<_> = rec.model.states().into_iter().collect();
    assert_eq!(rec.summary.vi_count as usize, rec.model.known_pairs());
    assert!(rec.model.known_pairs() <= visited.len() * 2);
    assert_eq!(rec.summary.n_states, 5);
}

#[test]
fn sweep_covers_every_cell() {
    let mut cfg = RunConfig::default();
    cfg.seeds = vec![0, 1, 2];
    cfg.sweep.h_values = vec![2, 3];
    cfg.sweep.include_h4 = true;
    cfg.run.total_steps = Some(500);
    let dir = tempfile::tempdir().unwrap();
    let s = sweep(&cfg, dir.path()).unwrap();
    assert_eq!(s.cells.len(), 9);
    assert!(s.failures.is_empty());
    assert_eq!(s.windows.iter().map(|w| w.h).collect::<Vec<_>>(), vec![2, 3, 4]);
    assert_eq!(s.ratios.len(), 2);
    for r in &s.ratios {
        assert!((r.predicted - 16.0).abs() < 1e-9);
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = RunConfig::load(&path).unwrap();
        cfg.validate().unwrap();
    }
}
