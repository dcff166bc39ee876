//! Batch experiment runner for the streaming simulator.
//!
//! `hassim run <config> --out <dir>` executes every configured session and
//! writes per-run logs, reports and CDF series plus a cross-run summary;
//! `hassim plot <run_dir> --out <dir>` renders a run's CSVs as SVG charts.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on invalid config.

mod config;
mod plot;
mod runner;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(name = "hassim", about = "Adaptive-streaming-over-multipath simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the experiment matrix described by a config file.
    Run {
        /// Experiment config (JSON).
        config: PathBuf,
        /// Output directory; one subdirectory is created per run.
        #[arg(long)]
        out: PathBuf,
        /// Number of runs to execute concurrently.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
    },
    /// Render one run's CSV outputs as SVG charts.
    Plot {
        /// A run directory produced by `run` (contains segments.csv).
        run_dir: PathBuf,
        /// Directory for the rendered SVG files.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            parallel,
        } => {
            let experiment = match ExperimentConfig::load(&config) {
                Ok(c) => c,
                Err(err) => {
                    eprintln!("config error: {err:#}");
                    return ExitCode::from(2);
                }
            };
            let config_dir = config.parent().map(PathBuf::from).unwrap_or_default();
            match runner::run_matrix(&experiment, &config_dir, &out, parallel.max(1)) {
                Ok(outcomes) => {
                    let mut failed = false;
                    for o in &outcomes {
                        if o.truncated {
                            eprintln!(
                                "run {:?}: trace horizon exhausted, outputs are partial",
                                o.name
                            );
                            failed = true;
                        } else {
                            println!(
                                "run {}: avg bitrate {:.0} kbps, {} switch-downs, \
                                 {:.1}s stalled",
                                o.name,
                                o.metrics.avg_bitrate_kbps,
                                o.metrics.num_switch_downs,
                                o.metrics.total_stall_s
                            );
                        }
                    }
                    if failed {
                        ExitCode::from(1)
                    } else {
                        ExitCode::SUCCESS
                    }
                }
                Err(err) => {
                    eprintln!("error: {err:#}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Plot { run_dir, out } => match plot::plot_run(&run_dir, &out) {
            Ok(()) => ExitCode::SUCCESS,
            Err(err) => {
                eprintln!("error: {err:#}");
                ExitCode::from(1)
            }
        },
    }
}
