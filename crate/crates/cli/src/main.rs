//! Batch front end: calibrate bounding sequences, estimate signal
//! proportions, screen p-value lists, run simulation grids, reproduce the
//! published benchmark tables, and build permutation nulls from tabular data.

use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod calibrate;
mod estimate;
mod manifest;
mod permnull;
mod reproduce;
mod screen;
mod simulate;
mod util;

use util::CliError;

#[derive(Parser)]
#[command(name = "smr", version, about = "Signal-inclusion screening toolkit")]
struct Cli {
    /// Worker threads (default: all cores; also honors SMR_THREADS).
    /// Never changes numeric results, only wall-clock time.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the bounding sequence c_m and write it as JSON
    Calibrate(calibrate::CalibrateArgs),
    /// Estimate the signal proportion of a p-value list
    Estimate(estimate::EstimateArgs),
    /// Apply a screening procedure to a p-value list
    Screen(screen::ScreenArgs),
    /// Run a simulation grid from a JSON config
    Simulate(simulate::SimulateArgs),
    /// Re-run a published benchmark table and report PASS/FAIL
    Reproduce(reproduce::ReproduceArgs),
    /// Build a phenotype-permutation null matrix from tabular data
    Permnull(permnull::PermnullArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SidedArg {
    One,
    Two,
}

impl From<SidedArg> for smr_core::Sided {
    fn from(v: SidedArg) -> Self {
        match v {
            SidedArg::One => smr_core::Sided::One,
            SidedArg::Two => smr_core::Sided::Two,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let threads = cli.threads.or_else(|| {
        std::env::var("SMR_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        // ignore failure: the pool may already be initialized
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }

    let result = match cli.command {
        Command::Calibrate(args) => calibrate::run(args),
        Command::Estimate(args) => estimate::run(args),
        Command::Screen(args) => screen::run(args),
        Command::Simulate(args) => simulate::run(args),
        Command::Reproduce(args) => reproduce::run(args),
        Command::Permnull(args) => permnull::run(args),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::ChecksFailed) => ExitCode::from(1),
    }
}
