//! Batch front end for the obstacle-VI solver: hypothesis checks, single
//! penalized solves, three-solution searches, penalty continuation, and
//! plot-data emission.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::{exit_code_for, EXIT_CONFIG};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "descent-vi", version, about = "Penalty / descending-flow solver for obstacle variational inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the growth-hypothesis and spectral-plane checks.
    Check { config: PathBuf },
    /// Flow a single seed to a critical point of the penalized energy.
    SolvePenalty { config: PathBuf },
    /// Search for positive, negative, and sign-changing solutions.
    Triple { config: PathBuf },
    /// Continue a solution branch as the penalty parameter decreases.
    Continue { config: PathBuf },
    /// Emit gnuplot-ready data from a completed run directory.
    PlotData { dir: PathBuf },
}

fn init_threads() {
    if let Ok(v) = std::env::var("DESCENT_VI_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
        } else {
            eprintln!("ignoring non-numeric DESCENT_VI_THREADS = {v}");
        }
    }
}

fn init_logging(verbosity: u8) {
    let level = match verbosity {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

fn main() {
    init_threads();
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::PlotData { dir } => match commands::run_plot_data(dir) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("{e}");
                exit_code_for(&e)
            }
        },
        Command::Check { config }
        | Command::SolvePenalty { config }
        | Command::Triple { config }
        | Command::Continue { config } => {
            let required: &[&str] = match &cli.command {
                Command::SolvePenalty { .. } => &["penalty"],
                Command::Triple { .. } => &["penalty", "search"],
                Command::Continue { .. } => &["schedule", "search"],
                _ => &[],
            };
            match config::load(config, required) {
                Err(e) => {
                    eprintln!("{e}");
                    EXIT_CONFIG
                }
                Ok(mut cfg) => {
                    init_logging(cfg.verbosity);
                    let result = match &cli.command {
                        Command::Check { .. } => commands::run_check(&cfg, config),
                        Command::SolvePenalty { .. } => commands::run_solve_penalty(&cfg, config),
                        Command::Triple { .. } => commands::run_triple(&mut cfg, config),
                        Command::Continue { .. } => commands::run_continue(&mut cfg, config),
                        Command::PlotData { .. } => unreachable!(),
                    };
                    match result {
                        Ok(code) => code,
                        Err(e) => {
                            eprintln!("{e}");
                            exit_code_for(&e)
                        }
                    }
                }
            }
        }
    };
    std::process::exit(code);
}
