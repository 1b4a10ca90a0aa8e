//! Command-line front end: cohort reconstruction, stratified rates,
//! Kaplan-Meier estimation, Cox modeling with greedy AIC selection, and a
//! seeded synthetic-registry generator.
//!
//! Exit codes: 0 success, 1 validation (bad inputs, paths or flags),
//! 2 computation (numerical failure).

mod commands;
mod config;
mod out;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{build_cohort, cox, km, rates, simulate};
use config::FileConfig;

#[derive(Parser)]
#[command(
    name = "regsurv",
    version,
    about = "Registry cohort reconstruction and survival analytics"
)]
struct Cli {
    /// JSON config file supplying default paths and window years
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reconstruct the analysis cohort from death and discharge registries
    BuildCohort(build_cohort::BuildCohortArgs),
    /// Crude and age-standardized rates plus case fatality, stratified
    Rates(rates::RatesArgs),
    /// Event tables, Kaplan-Meier curves and log-rank comparisons
    Km(km::KmArgs),
    /// Cox proportional-hazards model with optional greedy AIC selection
    Cox(cox::CoxArgs),
    /// Generate a seeded synthetic registry pair with ground truth
    Simulate(simulate::SimulateArgs),
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help and version requests are not errors
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    let file_cfg = match FileConfig::load(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::BuildCohort(args) => build_cohort::run(args, &file_cfg),
        Command::Rates(args) => rates::run(args, &file_cfg),
        Command::Km(args) => km::run(args, &file_cfg),
        Command::Cox(args) => cox::run(args, &file_cfg),
        Command::Simulate(args) => simulate::run(args, &file_cfg),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
