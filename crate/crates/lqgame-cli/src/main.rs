//! Command-line front end for the solver crate.
//!
//! Three subcommands:
//!
//! * `solve`   — read an instance file, run one of the four solver
//!   pipelines, write value/gain/offset tables as CSV plus a JSON report.
//! * `verify`  — run Monte-Carlo and probe checks against a previously
//!   written solution directory.
//! * `example` — generate a built-in instance, solve it, and check it
//!   against independently known answers.
//!
//! Exit code 0 when every reported check passes, 1 when the run completed
//! but a check failed, 2 on any operational error (unreadable files,
//! malformed instances, mismatched grids, …).
#![allow(non_snake_case)]

mod commands;
mod instance;
mod output;

use clap::{Parser, Subcommand};
use commands::{CheckKind, SolveKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lqgame",
    about = "Solvers and Monte-Carlo checks for linear-quadratic stochastic two-player differential games",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance and write solution tables plus a report.
    Solve {
        /// Which solution concept to compute.
        #[arg(long, value_enum)]
        kind: SolveKind,
        /// Path to the instance JSON file.
        #[arg(long)]
        instance: PathBuf,
        /// Directory to write the solution into (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Override the instance's number of time steps.
        #[arg(long)]
        dt_steps: Option<usize>,
    },
    /// Check a solution directory against its instance by simulation.
    Verify {
        /// Path to the instance JSON file the solution was computed from.
        #[arg(long)]
        instance: PathBuf,
        /// Solution directory written by `solve` (or `example`).
        #[arg(long)]
        solution: PathBuf,
        /// Comma-separated checks: all, stationarity, convexity, deviation, value.
        #[arg(long, value_enum, value_delimiter = ',', default_value = "all")]
        checks: Vec<CheckKind>,
        /// Seed for the simulation noise.
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Number of Monte-Carlo paths.
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
    },
    /// Generate, solve, and check a built-in example.
    Example {
        /// One of: 6.1, 6.2, 6.3, zero-sum-coincidence, slq-corollary.
        id: String,
        /// Directory to write the instance and solution into.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.command {
        Command::Solve {
            kind,
            instance,
            out,
            dt_steps,
        } => commands::cmd_solve(kind, &instance, &out, dt_steps),
        Command::Verify {
            instance,
            solution,
            checks,
            seed,
            paths,
        } => commands::cmd_verify(&instance, &solution, &checks, seed, paths),
        Command::Example { id, out } => commands::cmd_example(&id, &out),
    };
    match run {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
