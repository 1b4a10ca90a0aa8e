use std::path::PathBuf;

use clap::{Args, ValueEnum};
use regsurv_core::cohort::{
    bc_female_deaths, scenario_adjusted_counts, CohortAccounting, MissingIdScenario, PatientRatio,
};
use regsurv_core::population::{PopulationTable, StandardPopulation};
use regsurv_core::rates::{
    case_fatality_table, stratified_rates, write_cfr_table, write_rate_table, Measure, Stratifier,
};
use regsurv_core::registry::parse_death_records;
use regsurv_core::{diagnoses_by_year, Error, Result};

use crate::config::{out_dir, require_path, FileConfig};
use crate::out::write_atomic;

use super::{load_cohort, load_rules, report_rejections};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum By {
    Year,
    Region,
    Insurer,
    AgeBand,
}

impl From<By> for Stratifier {
    fn from(by: By) -> Stratifier {
        match by {
            By::Year => Stratifier::Year,
            By::Region => Stratifier::Region,
            By::Insurer => Stratifier::Insurer,
            By::AgeBand => Stratifier::AgeBand,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Scenario {
    Drop,
    WorstCase,
    Likely,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    /// Cohort file produced by build-cohort
    #[arg(long)]
    cohort: Option<PathBuf>,
    /// Death registry file (mortality numerators)
    #[arg(long)]
    deaths: Option<PathBuf>,
    /// Diagnosis rule-set file (bundled defaults when omitted)
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Population denominators: year,stratum_kind,stratum,age_band,count
    #[arg(long)]
    population: Option<PathBuf>,
    /// Standard population weights (bundled world standard when omitted)
    #[arg(long)]
    standard_population: Option<PathBuf>,
    /// Row stratifier
    #[arg(long, value_enum, default_value = "year")]
    by: By,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    window_start: Option<i32>,
    #[arg(long)]
    window_end: Option<i32>,
    /// Missing-ID incidence scenario; non-drop scenarios need --accounting
    #[arg(long, value_enum, default_value = "drop")]
    missing_id_scenario: Scenario,
    /// Discharges-per-patient ratio for the likely scenario ("auto" = derive
    /// from the accounting file)
    #[arg(long, default_value = "auto")]
    ratio: String,
    /// accounting.json from build-cohort (missing-ID counts per year)
    #[arg(long)]
    accounting: Option<PathBuf>,
}

pub fn run(args: RatesArgs, file_cfg: &FileConfig) -> Result<()> {
    let cohort_path = require_path(args.cohort, file_cfg.cohort.as_ref(), "cohort")?;
    let deaths_path = require_path(args.deaths, file_cfg.deaths.as_ref(), "deaths")?;
    let population_path =
        require_path(args.population, file_cfg.population.as_ref(), "population")?;
    let out = out_dir(args.out_dir, file_cfg.out_dir.as_ref())?;
    let rules = load_rules(args.rules.or_else(|| file_cfg.rules.clone()).as_deref())?;
    let cfg = file_cfg.cohort_config(args.window_start, args.window_end, None, None);
    cfg.validate()?;

    let cohort = load_cohort(&cohort_path)?;
    let (all_deaths, rejected) = parse_death_records(&std::fs::read_to_string(&deaths_path)?)?;
    report_rejections("death registry", &rejected);
    let deaths: Vec<_> = bc_female_deaths(&all_deaths, &rules, &cfg)
        .into_iter()
        .cloned()
        .collect();
    let population = PopulationTable::parse(&std::fs::read_to_string(&population_path)?)?;
    let std_pop: StandardPopulation<f64> = match args
        .standard_population
        .or_else(|| file_cfg.standard_population.clone())
    {
        Some(p) => StandardPopulation::parse(&std::fs::read_to_string(p)?, population.bands())?,
        None => StandardPopulation::world_standard(),
    };

    let by: Stratifier = args.by.into();
    let years = cfg.window_start_year..=cfg.window_end_year;
    let incidence = stratified_rates(
        &cohort, &deaths, &population, &std_pop, by, Measure::Incidence, years.clone(),
    )?;
    let mortality = stratified_rates(
        &cohort, &deaths, &population, &std_pop, by, Measure::Mortality, years,
    )?;
    let cfr = case_fatality_table(&incidence, &mortality);

    let inc_path = write_atomic(&out, "incidence_rates.csv", &write_rate_table(&incidence))?;
    let mort_path = write_atomic(&out, "mortality_rates.csv", &write_rate_table(&mortality))?;
    let cfr_path = write_atomic(&out, "case_fatality.csv", &write_cfr_table(&cfr))?;

    if !matches!(args.missing_id_scenario, Scenario::Drop) {
        let accounting_path = require_path(args.accounting, None, "accounting")?;
        let accounting: CohortAccounting =
            serde_json::from_str(&std::fs::read_to_string(&accounting_path)?)
                .map_err(|e| Error::Config(format!("bad accounting file: {e}")))?;
        let scenario_cfg = regsurv_core::CohortConfig {
            missing_id_scenario: match args.missing_id_scenario {
                Scenario::Drop => MissingIdScenario::Drop,
                Scenario::WorstCase => MissingIdScenario::WorstCase,
                Scenario::Likely => MissingIdScenario::Likely,
            },
            discharge_per_patient_ratio: if args.ratio.eq_ignore_ascii_case("auto") {
                PatientRatio::Auto
            } else {
                PatientRatio::Fixed(args.ratio.parse().map_err(|_| {
                    Error::Config(format!("bad --ratio `{}`", args.ratio))
                })?)
            },
            ..cfg.clone()
        };
        scenario_cfg.validate()?;
        if let Some(adjusted) = scenario_adjusted_counts(&cohort, &accounting, &scenario_cfg)? {
            let base = diagnoses_by_year(&cohort);
            let mut text = String::from("year,base_cases,adjusted_cases\n");
            for (year, count) in &adjusted {
                text.push_str(&format!(
                    "{year},{},{count}\n",
                    base.get(year).copied().unwrap_or(0)
                ));
            }
            let path = write_atomic(&out, "adjusted_incidence_counts.csv", &text)?;
            println!("adjusted incidence counts -> {}", path.display());
        }
    }

    println!("incidence rates -> {}", inc_path.display());
    println!("mortality rates -> {}", mort_path.display());
    println!("case fatality -> {}", cfr_path.display());
    Ok(())
}
