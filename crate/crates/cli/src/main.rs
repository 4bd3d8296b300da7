use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;

use commands::CliError;

/// Adaptive-grouping multi-target entrapment swarm simulator.
#[derive(Debug, Parser)]
#[command(name = "swarm-entrap", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate a scenario for one or more seeds.
    Run {
        /// Scenario JSON file.
        scenario: PathBuf,
        /// Number of replicates; replicate i uses seed base + i.
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        seeds: u64,
        /// Base seed, overriding the scenario's.
        #[arg(long)]
        seed: Option<u64>,
        /// Step count, overriding the scenario's.
        #[arg(long)]
        steps: Option<usize>,
        /// Output directory (default: runs/<scenario name>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Use the naive nearest-target decision rule.
        #[arg(long)]
        baseline: bool,
    },
    /// Recompute metrics from a stored trajectory.
    Metrics {
        trajectory: PathBuf,
        scenario: PathBuf,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render SVG charts for a stored run.
    Plot {
        trajectory: PathBuf,
        metrics: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Scenario for the arena and obstacles (default: scenario.json next to the trajectory).
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run {
            scenario,
            seeds,
            seed,
            steps,
            out,
            baseline,
        } => commands::run(&commands::RunArgs {
            scenario,
            seeds,
            seed,
            steps,
            out,
            baseline,
        }),
        Command::Metrics { trajectory, scenario, out } => commands::metrics(&trajectory, &scenario, out.as_deref()),
        Command::Plot {
            trajectory,
            metrics,
            out,
            scenario,
        } => commands::plot(&trajectory, &metrics, &out, scenario.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("swarm-entrap: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Scenario(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}
