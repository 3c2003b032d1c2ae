//! `heatstore` command line: calibrate, solve, simulate, validate.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::output::Failure;

#[derive(Debug, Parser)]
#[command(name = "heatstore", version, about = "Optimal thermal-storage control by backward dynamic programming")]
struct Cli {
    /// Worker threads; 0 uses all cores.
    #[arg(long, global = true, env = "HEATSTORE_THREADS", default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit gamma, L0 and L to the calibration targets and print the patched config.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the backward recursion and write the snapshot, slice CSVs and a summary.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Time slices to export as CSV.
        #[arg(long, value_delimiter = ',', default_value = "0")]
        slices: Vec<usize>,
    },
    /// Simulate the optimal policy from a snapshot.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        n_paths: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of leading paths written as trajectory CSVs.
        #[arg(long, default_value_t = 10)]
        trajectories: usize,
        /// Initial storage temperature; defaults to q_max.
        #[arg(long)]
        q0: Option<f64>,
        /// Initial deseasonalized demand; defaults to the config's z0.
        #[arg(long, allow_negative_numbers = true)]
        z0: Option<f64>,
    },
    /// Run the property battery on a snapshot.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        snapshot: PathBuf,
        /// Directory for the JSON report and manifest.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build_global()
        .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    let threads = rayon::current_num_threads();
    match cli.command {
        Command::Calibrate { config } => commands::calibrate(&config),
        Command::Solve { config, out, slices } => commands::solve(&config, &out, &slices, threads),
        Command::Simulate {
            config,
            snapshot,
            out,
            n_paths,
            seed,
            trajectories,
            q0,
            z0,
        } => commands::simulate(
            &commands::SimulateArgs {
                config,
                snapshot,
                out,
                n_paths,
                seed,
                trajectories,
                q0,
                z0,
            },
            threads,
        ),
        Command::Validate { config, snapshot, out } => {
            commands::validate(&config, &snapshot, out.as_deref(), threads)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.to_json());
            ExitCode::from(f.code)
        }
    }
}
