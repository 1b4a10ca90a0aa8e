use std::path::PathBuf;

use clap::Args;
use regsurv_core::cohort::{build_cohort, write_cohort};
use regsurv_core::registry::{parse_death_records, parse_discharge_records};
use regsurv_core::Result;

use crate::config::{out_dir, require_path, FileConfig};
use crate::out::write_atomic;

use super::{load_rules, report_rejections};

#[derive(Debug, Args)]
pub struct BuildCohortArgs {
    /// Death registry file
    #[arg(long)]
    deaths: Option<PathBuf>,
    /// Hospital discharge registry file
    #[arg(long)]
    discharges: Option<PathBuf>,
    /// Diagnosis rule-set file (bundled defaults when omitted)
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Output directory for cohort.csv and accounting.json
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// First enrollment year
    #[arg(long)]
    window_start: Option<i32>,
    /// Last enrollment year (survivors are censored in its December)
    #[arg(long)]
    window_end: Option<i32>,
    /// First washout year
    #[arg(long)]
    washout_start: Option<i32>,
    /// Seed for the diagnosis-date imputation of deaths without discharges
    #[arg(long)]
    seed: Option<u64>,
}

pub fn run(args: BuildCohortArgs, file_cfg: &FileConfig) -> Result<()> {
    let deaths_path = require_path(args.deaths, file_cfg.deaths.as_ref(), "deaths")?;
    let discharges_path =
        require_path(args.discharges, file_cfg.discharges.as_ref(), "discharges")?;
    let out = out_dir(args.out_dir, file_cfg.out_dir.as_ref())?;
    let rules = load_rules(
        args.rules
            .or_else(|| file_cfg.rules.clone())
            .as_deref(),
    )?;
    let cfg = file_cfg.cohort_config(
        args.window_start,
        args.window_end,
        args.washout_start,
        args.seed,
    );
    cfg.validate()?;

    let (deaths, rejected_deaths) =
        parse_death_records(&std::fs::read_to_string(&deaths_path)?)?;
    report_rejections("death registry", &rejected_deaths);
    let (discharges, rejected_discharges) =
        parse_discharge_records(&std::fs::read_to_string(&discharges_path)?)?;
    report_rejections("discharge registry", &rejected_discharges);

    let (cohort, accounting) = build_cohort(&deaths, &discharges, &rules, &cfg)?;
    let cohort_path = write_atomic(&out, "cohort.csv", &write_cohort(&cohort))?;
    let accounting_path = write_atomic(&out, "accounting.json", &accounting.to_json())?;

    println!(
        "cohort: {} patients ({} imputed, {} flagged) -> {}",
        cohort.len(),
        accounting.imputed_included,
        accounting.date_conflict_flagged,
        cohort_path.display()
    );
    println!("accounting -> {}", accounting_path.display());
    Ok(())
}
