//! Registry analytics core: reconstructs a cancer cohort from linked death
//! and hospital-discharge registries, then derives incidence, mortality and
//! case-fatality rates, Kaplan-Meier survival curves with Greenwood
//! confidence intervals, log-rank comparisons, and Cox proportional-hazards
//! models with greedy AIC covariate selection.
//!
//! The numeric layer is generic over the floating-point type via [`Scalar`];
//! the aliases at the crate root fix the default double-precision
//! instantiations used by the command-line tool.

pub mod cohort;
pub mod cox;
pub mod date;
pub mod error;
pub mod icd;
pub mod linalg;
pub mod population;
pub mod rates;
pub mod registry;
pub mod scalar;
pub mod selection;
pub mod stats;
pub mod survival;
pub mod synthetic;

pub use cohort::{
    build_cohort, diagnoses_by_year, impute_deaths_without_discharge, missing_id_sensitivity,
    reconcile_gender, scenario_adjusted_counts, CohortAccounting, CohortConfig, EndKind,
    PatientTimeline,
};
pub use cox::{
    encode, fit, hazard_ratio, log_partial_likelihood, predict_survival, CovariateProfile,
    CovariateSpec, FitOptions, ProfileRegion, TieMethod,
};
pub use date::{age_at, months_between, MonthIndex};
pub use error::{Error, Result};
pub use icd::{CodeRuleSet, DiagnosisClass, DiagnosisCode};
pub use population::{default_age_bands, AgeBand, InsurerClass, PopulationTable, Stratum};
pub use rates::{
    age_adjusted_rate, case_fatality_rate, case_fatality_table, crude_rate,
    extrapolate_population, stratified_rates, Measure, Stratifier,
};
pub use registry::{
    DeathRecord, DischargeRecord, FonasaSegment, Insurer, PersonId, RegionCode, Sex,
};
pub use scalar::Scalar;
pub use selection::{greedy_select, SelectionMode, SelectionOptions, StopReason};
pub use survival::{
    build_event_table, event_table_from_durations, kaplan_meier, log_rank_test, EventRow,
    EventTable,
};
pub use synthetic::{generate, SyntheticData, SyntheticSpec};

/// Default scalar type for the numeric pipeline.
pub type Real = f64;

/// Double-precision instantiations of the generic numeric types.
pub type SurvivalCurve = survival::SurvivalCurve<Real>;
pub type LogRankResult = survival::LogRankResult<Real>;
pub type DesignMatrix = cox::DesignMatrix<Real>;
pub type CoxModel = cox::CoxModel<Real>;
pub type RateTable = rates::RateTable<Real>;
pub type StandardPopulation = population::StandardPopulation<Real>;
pub type SelectionTrace = selection::SelectionTrace<Real>;
