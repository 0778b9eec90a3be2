//! Command-line experiment runner.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use refprior::config::{load_config, ExperimentKind, ParsedConfig};
use refprior::error::{Error, Result};
use refprior::experiments::{
    run_baseline_berger, run_baseline_mcmc, run_eval_ks, run_recover_jeffreys, run_stability,
    run_train_info, run_train_svgd,
};

#[derive(Parser)]
#[command(
    name = "refprior",
    version,
    about = "Learn reference-prior approximations and evaluate them against known targets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file; its "experiment" field must match the command.
    #[arg(long)]
    config: PathBuf,
    /// Override the config's seed (or seed list, for experiment commands).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; created if missing.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Train a sampler by stochastic ascent of the information lower bound.
    TrainInfo(RunArgs),
    /// Train a sampler by amortized Stein variational gradient descent.
    TrainSvgd(RunArgs),
    /// Estimate the objective prior on a grid by dataset simulation.
    BaselineBerger(RunArgs),
    /// Draw prior samples with the iterative MCMC scheme.
    BaselineMcmc(RunArgs),
    /// Compare stored sample files against the true prior with KS tests.
    EvalKs(RunArgs),
    /// Full recovery experiment: train every method, run every baseline,
    /// and trace KS distance against sample size.
    ExpJeffreys(RunArgs),
    /// Objective-variance study over sample count and dimensionality.
    ExpStability(RunArgs),
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {}", e);
        std::process::exit(e.exit_code());
    }
    match run(cli) {
        Ok(()) => {}
        Err(e) => {
            eprintln!("error: {}", e);
            std::process::exit(e.exit_code());
        }
    }
}

/// REFPRIOR_THREADS caps the worker pool; unset means one worker per core.
fn init_threads() -> Result<()> {
    let Ok(raw) = std::env::var("REFPRIOR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| {
            Error::Config(format!("REFPRIOR_THREADS must be a positive integer, got {:?}", raw))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {}", e)))
}

fn mismatch(found: ExperimentKind, expected: ExperimentKind) -> Error {
    Error::Config(format!(
        "config is for experiment \"{}\", this command runs \"{}\"",
        found, expected
    ))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::TrainInfo(args) => match load_config(&args.config)? {
            ParsedConfig::TrainInfo(mut cfg) => {
                if let Some(s) = args.seed {
                    cfg.seed = s;
                }
                run_train_info(&cfg, &args.out)
            }
            other => Err(mismatch(other.kind(), ExperimentKind::TrainInfo)),
        },
        Command::TrainSvgd(args) => match load_config(&args.config)? {
            ParsedConfig::TrainSvgd(mut cfg) => {
                if let Some(s) = args.seed {
                    cfg.seed = s;
                }
                run_train_svgd(&cfg, &args.out)
            }
            other => Err(mismatch(other.kind(), ExperimentKind::TrainSvgd)),
        },
        Command::BaselineBerger(args) => match load_config(&args.config)? {
            ParsedConfig::BaselineBerger(mut cfg) => {
                if let Some(s) = args.seed {
                    cfg.seed = s;
                }
                run_baseline_berger(&mut cfg, &args.out)
            }
            other => Err(mismatch(other.kind(), ExperimentKind::BaselineBerger)),
        },
        Command::BaselineMcmc(args) => match load_config(&args.config)? {
            ParsedConfig::BaselineMcmc(mut cfg) => {
                if let Some(s) = args.seed {
                    cfg.seed = s;
                }
                run_baseline_mcmc(&mut cfg, &args.out)
            }
            other => Err(mismatch(other.kind(), ExperimentKind::BaselineMcmc)),
        },
        Command::EvalKs(args) => match load_config(&args.config)? {
            ParsedConfig::EvalKs(mut cfg) => {
                if let Some(s) = args.seed {
                    cfg.seed = s;
                }
                run_eval_ks(&mut cfg, &args.out)
            }
            other => Err(mismatch(other.kind(), ExperimentKind::EvalKs)),
        },
        Command::ExpJeffreys(args) => match load_config(&args.config)? {
            ParsedConfig::RecoverJeffreys(mut cfg) => {
                if let Some(s) = args.seed {
                    cfg.seeds = vec![s];
                }
                run_recover_jeffreys(&mut cfg, &args.out)
            }
            other => Err(mismatch(other.kind(), ExperimentKind::RecoverJeffreys)),
        },
        Command::ExpStability(args) => match load_config(&args.config)? {
            ParsedConfig::Stability(mut cfg) => {
                if let Some(s) = args.seed {
                    cfg.seeds = vec![s];
                }
                run_stability(&cfg, &args.out)
            }
            other => Err(mismatch(other.kind(), ExperimentKind::Stability)),
        },
    }
}
