//! `eprad` — radial repulsive-flow runs, parameter sweeps, boundary-ODE
//! integration, and analytic-bound reports, from TOML scenario configs.
//!
//! Exit codes: 0 when every enabled audit is PASS or INCONCLUSIVE,
//! 1 when any audit FAILs, 2 when a run or its configuration fails.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "eprad",
    about = "Radially symmetric repulsive-flow simulator with built-in stability audits"
)]
struct Cli {
    /// Directory for CSV and report artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Reserved for future stochastic features; the current pipeline is
    /// deterministic and ignores it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one scenario config: CSV diagnostics + audit report.
    Run { config: PathBuf },
    /// Execute every .toml config in a directory and merge the reports.
    Sweep { config_dir: PathBuf },
    /// Integrate the boundary ODE d2R/dt2 = M / R^(N-1) from rest.
    Emden { r0: f64, m: f64, n: u32, t_end: f64 },
    /// Print the analytic expansion bounds for the initial state of a
    /// config, without evolving it.
    Bounds { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let result = match &cli.command {
        Command::Run { config } => commands::cmd_run(config, &cli.out),
        Command::Sweep { config_dir } => commands::cmd_sweep(config_dir, &cli.out, workers),
        Command::Emden { r0, m, n, t_end } => {
            commands::cmd_emden(*r0, *m, *n, *t_end, &cli.out)
        }
        Command::Bounds { config } => commands::cmd_bounds(config),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
