use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand as ClapSubcommand};
use hailsim_cli::run::SEED_ENV;
use hailsim_cli::{run, RunOptions, Subcommand};

#[derive(Parser)]
#[command(name = "hailsim", version, about = "Monte Carlo experiments for the Poisson hail growth model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(ClapSubcommand)]
enum Command {
    /// Workload snapshots of one sampled realization.
    Evolve(Common),
    /// Fast programs against exhaustive path search on random small instances.
    Oracle {
        #[command(flatten)]
        common: Common,
        /// Maximum jobs per instance.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Quantiles of the origin-started path maximum over a time grid.
    Tightness(Common),
    /// Frequency of n-connectivity to the origin at target sites.
    PnDecay(Common),
    /// Width of the origin's domain of influence in one dimension.
    Range(Common),
    /// Growth demos for the unstable regions.
    UnstableDemo(Common),
    /// Scale-sequence conditions, printed as a table.
    CheckScales(Common),
    /// Instability score over a grid of Pareto exponents.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// Configuration file (TOML, or JSON starting with '{').
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; falls back to the config, then HAILSIM_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Override a config key, e.g. --set model.lambda=0.1
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (sub, common, jobs) = match cli.command {
        Command::Evolve(c) => (Subcommand::Evolve, c, None),
        Command::Oracle { common, jobs } => (Subcommand::Oracle, common, jobs),
        Command::Tightness(c) => (Subcommand::Tightness, c, None),
        Command::PnDecay(c) => (Subcommand::PnDecay, c, None),
        Command::Range(c) => (Subcommand::Range, c, None),
        Command::UnstableDemo(c) => (Subcommand::UnstableDemo, c, None),
        Command::CheckScales(c) => (Subcommand::CheckScales, c, None),
        Command::Sweep(c) => (Subcommand::Sweep, c, None),
    };
    let config_text = match &common.config {
        Some(p) => match std::fs::read_to_string(p) {
            Ok(t) => Some(t),
            Err(e) => {
                eprintln!("error: cannot read {}: {e}", p.display());
                return ExitCode::from(2);
            }
        },
        None => None,
    };
    let opts = RunOptions {
        config_text,
        seed: common.seed,
        trials: common.trials,
        out: common.out,
        threads: common.threads,
        overrides: common.overrides,
        jobs,
        env_seed: std::env::var(SEED_ENV).ok(),
    };
    match run(sub, &opts) {
        Ok(outcome) => {
            print!("{}", outcome.summary);
            println!("wrote {}", outcome.csv_path.display());
            ExitCode::SUCCESS
        }
        Err((err, outcome)) => {
            if let Some(o) = outcome {
                print!("{}", o.summary);
                println!("wrote {}", o.csv_path.display());
            }
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
