use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tracksim_cli::config::{ExperimentConfig, Scenario};
use tracksim_cli::plot::emit_plots;
use tracksim_cli::scenario::{run_scenario, RunError};

/// Simulator and estimation toolkit for repeated approximate position
/// measurements of quadratic Hamiltonian dynamics.
#[derive(Parser)]
#[command(name = "tracksim", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario configuration file (flat `key = value` format).
    #[arg(long)]
    config: PathBuf,
    /// Override the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: current directory).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the config's trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker thread count (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate classical or quantum measurement records.
    Track(RunArgs),
    /// Monte Carlo estimator MSE curves, or single-record reconstruction
    /// when the config has a `record` key.
    Estimate(RunArgs),
    /// Semiclassical ε-sweep: energy distance to the classical record law.
    Converge(RunArgs),
    /// Weyl-calculus residual sweeps.
    #[command(alias = "weyl-check")]
    Weyl(RunArgs),
    /// Isotropic-shell direction statistics.
    Symmetry(RunArgs),
    /// Re-render plots from existing scenario CSV files.
    Plot {
        /// CSV files to plot.
        csv: Vec<PathBuf>,
    },
}

fn execute(scenario: Scenario, args: RunArgs) -> Result<(), RunError> {
    if let Some(threads) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| RunError::Config(format!("thread pool: {e}")))?;
    }
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        RunError::Config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let mut config = ExperimentConfig::from_text(scenario, &text)?;
    if let Some(seed) = args.seed {
        config.master_seed = seed;
    }
    if let Some(trials) = args.trials {
        config.n_trials = trials;
    }
    let out_dir = args.out.unwrap_or_else(|| PathBuf::from("."));
    run_scenario(config, &out_dir)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Track(args) => execute(Scenario::Track, args),
        Command::Estimate(args) => execute(Scenario::Estimate, args),
        Command::Converge(args) => execute(Scenario::Converge, args),
        Command::Weyl(args) => execute(Scenario::Weyl, args),
        Command::Symmetry(args) => execute(Scenario::Symmetry, args),
        Command::Plot { csv } => {
            let mut failed = false;
            for path in &csv {
                match emit_plots(path) {
                    Ok(written) => {
                        for w in written {
                            println!("wrote {}", w.display());
                        }
                    }
                    Err(e) => {
                        eprintln!("error: {e}");
                        failed = true;
                    }
                }
            }
            if failed {
                return ExitCode::from(2);
            }
            return ExitCode::SUCCESS;
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(RunError::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(RunError::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
