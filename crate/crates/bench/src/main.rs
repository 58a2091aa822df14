use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use ppl_bench::config::load_config;
use ppl_bench::outputs::{read_trace_csv, RateSummary};
use ppl_bench::report::random_iterate_report;
use ppl_bench::runner;

#[derive(Parser)]
#[command(name = "ppl", version, about = "Run and inspect constrained primal-dual solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config and write trace.csv and summary.json.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Seed (overrides seed).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a config under the per-step invariant monitor.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Rate report (T versus 4T) and random-iterate report from a trace.
    Rate {
        #[arg(long)]
        trace: PathBuf,
        /// Checkpoint T; a quarter of the last iteration by default.
        #[arg(long)]
        t: Option<usize>,
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Print the declared and sampled constants of the configured problem.
    Estimate {
        #[arg(long)]
        config: PathBuf,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { config, out, seed } => {
            let mut cfg = load_config(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
            let (outcome, paths) = runner::run_to_dir(&cfg, &dir)?;
            let s = &outcome.summary;
            match s.failure_iteration {
                Some(at) => eprintln!(
                    "solver failed at iteration {at}: {}",
                    s.error.as_deref().unwrap_or("unknown error")
                ),
                None => eprintln!(
                    "{}: {} after {} iterations (converged = {}), wrote {} and {}",
                    s.problem_name,
                    s.stop_reason,
                    s.iterations,
                    s.converged,
                    paths.trace.display(),
                    paths.summary.display()
                ),
            }
            Ok(outcome.succeeded())
        }
        Command::Check { config } => {
            let report = runner::check_invariants(&load_config(&config)?)?;
            print_json(&report)?;
            Ok(report.passed)
        }
        Command::Rate { trace, t, tol, seed } => {
            let records = read_trace_csv(&trace)?;
            anyhow::ensure!(!records.is_empty(), "trace {} has no rows", trace.display());
            let rate = RateSummary::from(&ppl_core::kkt::rate_summary(&records, t));
            let random = random_iterate_report(&records, seed, tol);
            print_json(&serde_json::json!({ "rate_summary": rate, "random_iterate": random }))?;
            Ok(true)
        }
        Command::Estimate { config } => {
            print_json(&runner::estimate(&load_config(&config)?)?)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
