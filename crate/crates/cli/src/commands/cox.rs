use std::path::PathBuf;

use clap::Args;
use regsurv_core::cox::{
    encode, fit, predict_survival, write_baseline_hazard, CovariateProfile, CovariateSpec,
    FitOptions, TieMethod,
};
use regsurv_core::selection::{
    greedy_select, write_selection_trace, SelectionMode, SelectionOptions,
};
use regsurv_core::survival::write_survival_curve;
use regsurv_core::{Error, Result};

use crate::config::{out_dir, require_path, FileConfig};
use crate::out::write_atomic;

use super::load_cohort;

/// Default model columns when fitting without selection. The full expansion
/// is intentionally not a default: the public-system indicator equals the
/// sum of the four segment dummies, so the saturated design is singular.
const DEFAULT_COLUMNS: &str = "fonasa,isapre,fonasa_a,diagnosis_year,age,age_squared";

#[derive(Debug, Args)]
pub struct CoxArgs {
    /// Cohort file produced by build-cohort
    #[arg(long)]
    cohort: Option<PathBuf>,
    /// Run greedy forward AIC selection over the candidate columns
    #[arg(long)]
    select: bool,
    /// Accept the first improving candidate per round instead of the best
    #[arg(long)]
    strict_scan: bool,
    /// Tie handling: efron or breslow
    #[arg(long, default_value = "efron")]
    ties: String,
    /// Significance threshold for retained coefficients during selection
    #[arg(long, default_value_t = 0.05)]
    p_threshold: f64,
    /// Newton-Raphson gradient tolerance
    #[arg(long, default_value_t = 1e-8)]
    tolerance: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
    /// Comma-separated design columns (fit) or candidates (selection);
    /// "all" = the full standard expansion
    #[arg(long)]
    columns: Option<String>,
    /// Covariate profile to predict, e.g. "age=60,insurer=ISAPRE"; repeatable
    #[arg(long = "profile")]
    profiles: Vec<String>,
    /// Horizon in months for predicted survival curves
    #[arg(long, default_value_t = 60)]
    horizon: u32,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

pub fn run(args: CoxArgs, file_cfg: &FileConfig) -> Result<()> {
    let cohort_path = require_path(args.cohort, file_cfg.cohort.as_ref(), "cohort")?;
    let out = out_dir(args.out_dir, file_cfg.out_dir.as_ref())?;
    let cohort = load_cohort(&cohort_path)?;
    let ties: TieMethod = args.ties.parse()?;
    let fit_opts = FitOptions {
        ties,
        tolerance: args.tolerance,
        max_iter: args.max_iter,
    };

    let spec = CovariateSpec::standard();
    let design: regsurv_core::DesignMatrix = encode(&cohort, &spec)?;
    let requested: Vec<String> = match args.columns.as_deref() {
        None if args.select => spec.names(),
        None => DEFAULT_COLUMNS.split(',').map(str::to_string).collect(),
        Some("all") => spec.names(),
        Some(list) => list.split(',').map(|s| s.trim().to_string()).collect(),
    };

    // parse requested profiles before any heavy work, so a bad profile
    // fails fast with a validation error
    let profiles: Vec<CovariateProfile> = args
        .profiles
        .iter()
        .map(|s| s.parse())
        .collect::<Result<_>>()?;

    let model = if args.select {
        let opts = SelectionOptions {
            p_threshold: args.p_threshold,
            mode: if args.strict_scan {
                SelectionMode::FirstImprover
            } else {
                SelectionMode::BestImprover
            },
            fit: fit_opts,
        };
        let (model, trace) = greedy_select(&design, &requested, &opts)?;
        let trace_path = write_atomic(&out, "selection_trace.csv", &write_selection_trace(&trace))?;
        println!(
            "selection: {} of {} candidates kept ({:?}) -> {}",
            trace.final_variables.len(),
            requested.len(),
            trace.stop_reason,
            trace_path.display()
        );
        if !trace.fit_failures.is_empty() {
            eprintln!(
                "selection: {} candidate fit(s) failed and were skipped",
                trace.fit_failures.len()
            );
        }
        model
    } else {
        fit(&design.select_columns(&requested)?, &fit_opts)?
    };

    let model_path = write_atomic(&out, "model.json", &model.to_json())?;
    let baseline_path = write_atomic(&out, "baseline_hazard.csv", &write_baseline_hazard(&model))?;
    println!(
        "model: {} coefficients, AIC {:.3}, converged = {} -> {}",
        model.beta.len(),
        model.aic,
        model.converged,
        model_path.display()
    );
    println!("baseline hazard -> {}", baseline_path.display());

    for (i, profile) in profiles.iter().enumerate() {
        let predicted = predict_survival(&model, profile, args.horizon)?;
        if predicted.extended {
            eprintln!(
                "profile {}: horizon {} exceeds observed follow-up; curve extended flat",
                i + 1,
                args.horizon
            );
        }
        let name = format!("predicted_survival_{}.csv", i + 1);
        let path = write_atomic(&out, &name, &write_survival_curve(&predicted.curve))?;
        let five_year = predicted
            .curve
            .survival_at(60.min(args.horizon))
            .ok_or_else(|| Error::Computation("empty predicted curve".into()))?;
        println!(
            "profile {} ({}): S({}) = {:.3} -> {}",
            i + 1,
            args.profiles[i],
            60.min(args.horizon),
            five_year,
            path.display()
        );
    }
    Ok(())
}
