use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rfos::bounds::{total_bound, BoundCase, BoundInputs};
use rfos::games::MatrixGame;
use rfos::harness::{self, run::output_dir_or, RunConfig};
use rfos::oracle::{self, BestResponseProblem};
use rfos::seeded_rng;

#[derive(Parser)]
#[command(name = "rfos", version, about = "R-MAX opponent shaping on discretised meta-games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One run; writes the step CSV when an output directory is set.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed list.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// All (window, seed) cells in parallel, plus summary.json and curves.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Only recompute the summary from CSVs already on disk.
        #[arg(long)]
        summarize_only: bool,
    },
    /// Theoretical numbers for one parameter set.
    Bounds(BoundsArgs),
    /// Brute-force reference computations.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    I,
    Ii,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Text,
    Json,
    Both,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, value_enum, default_value = "ii")]
    case: CaseArg,
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 0.8)]
    gamma: f64,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long, default_value_t = 2)]
    n_players: u32,
    #[arg(long, default_value_t = 1)]
    card_s: u64,
    #[arg(long, default_value_t = 2)]
    card_a: u64,
    #[arg(long, default_value_t = 2)]
    h: u32,
    #[arg(long, default_value_t = 1.0)]
    l_r: f64,
    #[arg(long, default_value_t = 1.0)]
    l_t: f64,
    /// Lipschitz constant bounding the usable grid spacing (λ ≤ L/2).
    #[arg(long, default_value_t = 1.0)]
    l: f64,
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 1.0)]
    k_p: f64,
    #[arg(long, value_enum, default_value = "both")]
    format: Format,
}

#[derive(Subcommand)]
enum OracleCommand {
    /// Exhaustive best response against greedy naive opponents.
    BestResponse {
        #[arg(long, default_value = "matching_pennies")]
        game: String,
        #[arg(long, default_value_t = 2)]
        h: usize,
        #[arg(long, default_value_t = 200)]
        horizon: usize,
        /// Steps between resets; defaults to the horizon.
        #[arg(long)]
        episode_len: Option<usize>,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 0.5)]
        init: f64,
    },
    /// Both sides of the simulation lemma on random MDP pairs.
    SimulationLemma {
        #[arg(long, default_value_t = 1000)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Value error of λ-discretisations of a smooth continuous MDP.
    Discretisation {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Average over this many family members starting at `seed`.
        #[arg(long, default_value_t = 1)]
        family: u64,
    },
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> rfos::Result<()> {
    match cli.command {
        Command::Run { config, seed } => {
            let cfg = RunConfig::load(&config)?;
            let seeds = seed.map_or(cfg.seeds.clone(), |s| vec![s]);
            for s in seeds {
                let rec = harness::run(&cfg, s)?;
                println!("{}", serde_json::to_string(&rec.summary)?);
            }
        }
        Command::Sweep { config, summarize_only } => {
            let cfg = RunConfig::load(&config)?;
            let dir = output_dir_or(&cfg, "rfos_out");
            let summary = if summarize_only {
                harness::summarize_dir(&cfg, &dir)?
            } else {
                harness::sweep(&cfg, &dir)?
            };
            for w in &summary.windows {
                println!(
                    "h={} seeds={} convergence_steps={:.1}±{:.1} log16={:.3} predicted_log16={:.3} final_reward={:.3}",
                    w.h,
                    w.seeds,
                    w.convergence_steps.mean,
                    w.convergence_steps.se,
                    w.log16_convergence_steps.mean,
                    w.log16_predicted,
                    w.final_mean_reward.mean
                );
            }
            for r in &summary.ratios {
                let observed = r.observed.map_or("n/a".into(), |x| format!("{x:.2}"));
                println!(
                    "ratio h={}→{}: observed {observed}, predicted {:.2}",
                    r.h_from, r.h_to, r.predicted
                );
            }
            for f in &summary.failures {
                eprintln!("cell h={} seed={} failed: {}", f.h, f.seed, f.error);
            }
            println!("wrote {}", dir.display());
        }
        Command::Bounds(a) => {
            let inputs = BoundInputs {
                epsilon: a.epsilon,
                delta: a.delta,
                gamma: a.gamma,
                lambda: a.lambda,
                n_players: a.n_players,
                card_s: a.card_s,
                card_a: a.card_a,
                h: a.h,
                l_r: a.l_r,
                l_t: a.l_t,
                l: a.l,
                k: a.k,
                k_p: a.k_p,
            };
            let case = match a.case {
                CaseArg::I => BoundCase::I,
                CaseArg::Ii => BoundCase::II,
            };
            let report = total_bound(&inputs, case)?;
            if a.format != Format::Json {
                println!("{report}");
            }
            if a.format != Format::Text {
                println!("{}", serde_json::to_string_pretty(&report)?);
            }
        }
        Command::Oracle(cmd) => oracle_cmd(cmd)?,
    }
    Ok(())
}

fn oracle_cmd(cmd: OracleCommand) -> rfos::Result<()> {
    match cmd {
        OracleCommand::BestResponse {
            game,
            h,
            horizon,
            episode_len,
            lr,
            init,
        } => {
            let opponent = rfos::metagame::OpponentConfig {
                lr,
                init,
                ..Default::default()
            };
            let mut p = BestResponseProblem::new(MatrixGame::preset(&game)?, opponent, h, horizon);
            p.episode_len = episode_len.unwrap_or(horizon);
            let br = oracle::best_response_return(&p)?;
            println!("best response value {:.6} ({} search nodes)", br.value, br.nodes);
            for (code, action) in &br.policy {
                println!("  window {code:>4} -> action {action}");
            }
        }
        OracleCommand::SimulationLemma { pairs, seed } => {
            let mut rng = seeded_rng(seed);
            let mut worst: f64 = 0.0;
            let mut violations = 0;
            for i in 0..pairs {
                let m = oracle::random_mdp(&mut rng, 2 + i % 5, 2, 0.8)?;
                let m_hat = oracle::perturb(&m, &mut rng, 0.05, 0.2)?;
                let policy: Vec<usize> = (0..m.n_states).map(|s| (s + i) % 2).collect();
                let c = oracle::check_simulation_lemma(&m, &m_hat, &policy)?;
                worst = worst.max(c.lhs / c.rhs);
                violations += usize::from(!c.holds);
            }
            println!("{pairs} pairs, {violations} violations, worst lhs/rhs {worst:.4}");
        }
        OracleCommand::Discretisation { seed, family } => {
            let seeds: Vec<u64> = (seed..seed + family.max(1)).collect();
            let lambdas = [0.25, 0.125, 0.0625, 0.03125];
            let errs = oracle::family_discretisation_errors(&seeds, 3, 0.8, &lambdas, 1.0 / 256.0)?;
            for (l, e) in &errs {
                println!("lambda {l:<9} value error {e:.6}");
            }
            println!("log-log slope {:.3}", oracle::loglog_slope(&errs)?);
        }
    }
    Ok(())
}
