use std::path::PathBuf;

use clap::{Args, ValueEnum};
use regsurv_core::registry::{FonasaSegment, Insurer, RegionCode};
use regsurv_core::survival::{
    build_event_table, kaplan_meier, log_rank_test, write_event_table, write_survival_curve,
    EventTable,
};
use regsurv_core::{PatientTimeline, Result};

use crate::config::{out_dir, require_path, FileConfig};
use crate::out::write_atomic;

use super::load_cohort;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KmStrata {
    /// One curve over the whole cohort
    None,
    /// Public vs private system
    Insurer,
    /// FONASA benefit segments A-D
    Segment,
    /// All sixteen regions
    Region,
    /// Metropolitan region vs everything else
    Metro,
}

#[derive(Debug, Args)]
pub struct KmArgs {
    /// Cohort file produced by build-cohort
    #[arg(long)]
    cohort: Option<PathBuf>,
    /// Follow-up horizon in months; the final row administratively censors
    #[arg(long, default_value_t = 60)]
    horizon: u32,
    #[arg(long, value_enum, default_value = "none")]
    by: KmStrata,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

fn partition(cohort: &[PatientTimeline], by: KmStrata) -> Vec<(String, Vec<PatientTimeline>)> {
    let select = |pred: &dyn Fn(&PatientTimeline) -> bool| -> Vec<PatientTimeline> {
        cohort.iter().filter(|t| pred(t)).cloned().collect()
    };
    match by {
        KmStrata::None => vec![("all".into(), cohort.to_vec())],
        KmStrata::Insurer => vec![
            ("fonasa".into(), select(&|t| matches!(t.insurer, Insurer::Fonasa(_)))),
            ("isapre".into(), select(&|t| t.insurer == Insurer::Isapre)),
        ],
        KmStrata::Segment => FonasaSegment::ALL
            .into_iter()
            .map(|seg| {
                (
                    format!("fonasa_{}", seg.letter().to_ascii_lowercase()),
                    select(&|t| t.insurer == Insurer::Fonasa(seg)),
                )
            })
            .collect(),
        KmStrata::Region => RegionCode::ALL
            .into_iter()
            .map(|r| {
                (
                    format!("region_{}", r.token().to_ascii_lowercase()),
                    select(&|t| t.region == r),
                )
            })
            .collect(),
        KmStrata::Metro => vec![
            ("metropolitan".into(), select(&|t| t.region == RegionCode::Rm)),
            ("other_regions".into(), select(&|t| t.region != RegionCode::Rm)),
        ],
    }
}

pub fn run(args: KmArgs, file_cfg: &FileConfig) -> Result<()> {
    let cohort_path = require_path(args.cohort, file_cfg.cohort.as_ref(), "cohort")?;
    let out = out_dir(args.out_dir, file_cfg.out_dir.as_ref())?;
    let cohort = load_cohort(&cohort_path)?;

    let mut tables: Vec<(String, EventTable)> = Vec::new();
    for (label, stratum) in partition(&cohort, args.by) {
        let eligible = stratum.iter().filter(|t| t.survival_eligible()).count();
        if eligible == 0 {
            eprintln!("stratum {label}: no survival-eligible subjects, skipped");
            continue;
        }
        let table = build_event_table(&stratum, args.horizon)?;
        tables.push((label, table));
    }
    for (label, table) in &tables {
        let events_path = write_atomic(&out, &format!("events_{label}.csv"), &write_event_table(table))?;
        let curve: regsurv_core::SurvivalCurve = kaplan_meier(table)?;
        let curve_path =
            write_atomic(&out, &format!("curve_{label}.csv"), &write_survival_curve(&curve))?;
        println!(
            "{label}: n={} events={} -> {}, {}",
            table.initial_at_risk(),
            table.total_observed(),
            events_path.display(),
            curve_path.display()
        );
    }

    if tables.len() >= 2 {
        let refs: Vec<&EventTable> = tables.iter().map(|(_, t)| t).collect();
        let result: regsurv_core::LogRankResult = log_rank_test(&refs)?;
        let text = serde_json::json!({
            "strata": tables.iter().map(|(l, _)| l.clone()).collect::<Vec<_>>(),
            "chi_square": result.chi_square,
            "dof": result.dof,
            "p_value": result.p_value,
        })
        .to_string();
        let path = write_atomic(&out, "logrank.json", &text)?;
        println!(
            "log-rank: chi2 = {:.3}, dof = {}, p = {:.3e} -> {}",
            result.chi_square,
            result.dof,
            result.p_value,
            path.display()
        );
    }
    Ok(())
}
