//! Cohort reconstruction from the two registries: case selection, related-code
//! expansion for decedents, enrollment window and washout checks, missing-ID
//! handling, gender reconciliation, death linkage, and diagnosis-date
//! imputation for deaths that never had a matching discharge.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::Datelike;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::date::{age_at, MonthIndex};
use crate::error::{Error, Result};
use crate::icd::{CodeRuleSet, DiagnosisClass};
use crate::registry::{DeathRecord, DischargeRecord, Insurer, PersonId, RegionCode, Sex};

/// How a patient's follow-up ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EndKind {
    /// Death with the cohort-defining cause.
    Death,
    /// Administratively censored at study end.
    Censored,
}

impl fmt::Display for EndKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EndKind::Death => "death",
            EndKind::Censored => "censored",
        })
    }
}

impl FromStr for EndKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "death" => Ok(EndKind::Death),
            "censored" => Ok(EndKind::Censored),
            other => Err(Error::Config(format!("unknown end kind `{other}`"))),
        }
    }
}

/// One linked patient. The cohort is female-only by construction, so sex is
/// not carried. `imputed` marks patients reconstructed from a death without
/// any discharge; `date_conflict` marks patients with a discharge dated after
/// their death. Both kinds stay in the cohort for incidence counting but are
/// excluded from survival input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatientTimeline {
    pub id: PersonId,
    pub diagnosis_month: MonthIndex,
    pub end_month: MonthIndex,
    pub end_kind: EndKind,
    pub imputed: bool,
    pub date_conflict: bool,
    pub insurer: Insurer,
    pub region: RegionCode,
    pub age_at_diagnosis: u32,
    pub discharge_count: u32,
}

impl PatientTimeline {
    pub fn validate(&self) -> Result<()> {
        if self.end_month < self.diagnosis_month {
            return Err(Error::DateOrder(format!(
                "timeline {} ends {} before diagnosis {}",
                self.id, self.end_month, self.diagnosis_month
            )));
        }
        if self.imputed {
            let months = self.end_month - self.diagnosis_month;
            if self.end_kind != EndKind::Death || !(1..=12).contains(&months) {
                return Err(Error::Config(format!(
                    "imputed timeline {} must die 1-12 months after diagnosis, got {months}",
                    self.id
                )));
            }
        }
        Ok(())
    }

    /// Follow-up time in whole months.
    pub fn survival_months(&self) -> u32 {
        (self.end_month - self.diagnosis_month) as u32
    }

    /// Whether this timeline may enter survival estimation.
    pub fn survival_eligible(&self) -> bool {
        !self.imputed && !self.date_conflict
    }
}

/// Missing-ID handling scenario for incidence sensitivity analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingIdScenario {
    /// Remove missing-ID discharges (the base analysis).
    Drop,
    /// Count every missing-ID discharge as a new case.
    WorstCase,
    /// Count one new case per `discharge_per_patient_ratio` missing rows.
    Likely,
}

/// Discharges-per-patient ratio used by the `Likely` scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatientRatio {
    /// Derive from the built cohort: kept in-window discharges / patients.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CohortConfig {
    pub window_start_year: i32,
    pub window_end_year: i32,
    pub washout_start_year: i32,
    pub imputation_seed: u64,
    pub missing_id_scenario: MissingIdScenario,
    pub discharge_per_patient_ratio: PatientRatio,
}

impl Default for CohortConfig {
    fn default() -> Self {
        CohortConfig {
            window_start_year: 2007,
            window_end_year: 2018,
            washout_start_year: 2001,
            imputation_seed: 7,
            missing_id_scenario: MissingIdScenario::Drop,
            discharge_per_patient_ratio: PatientRatio::Auto,
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.washout_start_year < self.window_start_year
            && self.window_start_year <= self.window_end_year)
        {
            return Err(Error::Config(format!(
                "years must satisfy washout {} < window start {} <= window end {}",
                self.washout_start_year, self.window_start_year, self.window_end_year
            )));
        }
        if let PatientRatio::Fixed(r) = self.discharge_per_patient_ratio {
            if r <= 0.0 {
                return Err(Error::Config(format!(
                    "discharge-per-patient ratio must be positive, got {r}"
                )));
            }
        }
        Ok(())
    }

    pub fn window_first(&self) -> MonthIndex {
        MonthIndex::new(self.window_start_year, 1)
    }

    pub fn window_last(&self) -> MonthIndex {
        MonthIndex::new(self.window_end_year, 12)
    }

    fn washout_first(&self) -> MonthIndex {
        MonthIndex::new(self.washout_start_year, 1)
    }
}

/// Row and patient counters for every selection step, with enough structure
/// to check that each exclusion balances exactly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CohortAccounting {
    // death registry
    pub total_death_rows: u64,
    pub bc_death_rows: u64,
    pub deaths_missing_id_removed: u64,
    pub duplicate_death_ids_ignored: u64,
    pub bc_deaths: u64,
    // discharge registry, record level
    pub total_discharge_rows: u64,
    pub bc_primary_discharges: u64,
    pub related_discharges_added: u64,
    pub candidate_discharges: u64,
    pub in_window_records: u64,
    pub in_window_kept_records: u64,
    pub missing_id_discharges_removed: u64,
    pub missing_id_by_year: BTreeMap<i32, u64>,
    // patient level
    pub patients_grouped: u64,
    pub washout_patients_excluded: u64,
    pub out_of_window_patients_excluded: u64,
    pub eligible_patients: u64,
    pub gender_corrected: u64,
    pub gender_inconclusive_removed: u64,
    pub male_patients_excluded: u64,
    pub final_patients: u64,
    pub multi_insurer_patients: u64,
    pub date_conflict_flagged: u64,
    // deaths without any matching discharge
    pub deaths_without_discharge: u64,
    pub imputed_included: u64,
    pub imputed_out_of_window: u64,
}

impl CohortAccounting {
    /// Verify flow conservation: every step's input equals its output plus
    /// what it removed.
    pub fn check_balance(&self) -> Result<()> {
        let checks: &[(&str, u64, u64)] = &[
            (
                "death id filter",
                self.bc_death_rows,
                self.bc_deaths + self.deaths_missing_id_removed + self.duplicate_death_ids_ignored,
            ),
            (
                "discharge admission",
                self.candidate_discharges,
                self.bc_primary_discharges + self.related_discharges_added,
            ),
            (
                "missing-id removal",
                self.in_window_records,
                self.in_window_kept_records + self.missing_id_discharges_removed,
            ),
            (
                "missing-id yearly split",
                self.missing_id_discharges_removed,
                self.missing_id_by_year.values().sum(),
            ),
            (
                "window filter",
                self.patients_grouped,
                self.eligible_patients
                    + self.washout_patients_excluded
                    + self.out_of_window_patients_excluded,
            ),
            (
                "gender filter",
                self.eligible_patients,
                self.final_patients
                    + self.gender_inconclusive_removed
                    + self.male_patients_excluded,
            ),
            (
                "imputation window",
                self.deaths_without_discharge,
                self.imputed_included + self.imputed_out_of_window,
            ),
        ];
        for (step, input, output) in checks {
            if input != output {
                return Err(Error::Config(format!(
                    "accounting imbalance at {step}: {input} != {output}"
                )));
            }
        }
        Ok(())
    }

    /// Observed discharges-per-patient ratio of the built cohort.
    pub fn auto_ratio(&self) -> Option<f64> {
        if self.final_patients == 0 {
            None
        } else {
            Some(self.in_window_kept_records as f64 / self.final_patients as f64)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("accounting serializes")
    }
}

/// Gender resolution for one patient's records.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenderResolution {
    Female,
    Male,
    /// Inconclusive: no death record and the discharge mode is tied.
    Drop,
}

/// Resolve a patient's gender: the death record's sex wins when present and
/// known; otherwise the mode of the discharge sexes. A tie with no usable
/// death record is inconclusive.
pub fn reconcile_gender<'a>(
    records_for_id: impl IntoIterator<Item = &'a DischargeRecord>,
    death: Option<&DeathRecord>,
) -> GenderResolution {
    match death.map(|d| d.sex) {
        Some(Sex::Female) => return GenderResolution::Female,
        Some(Sex::Male) => return GenderResolution::Male,
        _ => {}
    }
    let mut female = 0usize;
    let mut male = 0usize;
    for rec in records_for_id {
        match rec.sex {
            Sex::Female => female += 1,
            Sex::Male => male += 1,
            Sex::Unknown => {}
        }
    }
    match female.cmp(&male) {
        std::cmp::Ordering::Greater => GenderResolution::Female,
        std::cmp::Ordering::Less => GenderResolution::Male,
        std::cmp::Ordering::Equal => GenderResolution::Drop,
    }
}

/// Reconstruct diagnosis dates for deaths that have no matching discharge:
/// each gets a survival of 1-12 months drawn uniformly from a deterministic
/// generator seeded by `cfg.imputation_seed`. Timelines whose imputed
/// diagnosis falls before the enrollment window are discarded. Records
/// without an ID are skipped (they cannot name a patient).
pub fn impute_deaths_without_discharge(
    orphan_deaths: &[DeathRecord],
    cfg: &CohortConfig,
) -> Vec<PatientTimeline> {
    let mut sorted: Vec<&DeathRecord> = orphan_deaths.iter().filter(|d| d.id.is_some()).collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut rng = ChaCha12Rng::seed_from_u64(cfg.imputation_seed);
    let window_first = cfg.window_first();
    let window_last = cfg.window_last();
    let mut out = Vec::new();
    for death in sorted {
        let death_month = MonthIndex::from_date(death.death_date);
        let k: i32 = rng.random_range(1..=12);
        let diagnosis_month = death_month - k;
        if diagnosis_month < window_first || diagnosis_month > window_last {
            continue;
        }
        let age = age_at(death.birth_date, diagnosis_month.first_day()).unwrap_or(0);
        out.push(PatientTimeline {
            id: death.id.clone().expect("filtered above"),
            diagnosis_month,
            end_month: death_month,
            end_kind: EndKind::Death,
            imputed: true,
            date_conflict: false,
            insurer: Insurer::Unknown,
            region: death.region,
            age_at_diagnosis: age,
            discharge_count: 0,
        });
    }
    out
}

/// Yearly incidence counts adjusted for missing-ID discharges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SensitivityScenario {
    WorstCase,
    Likely { discharges_per_patient: f64 },
}

pub fn missing_id_sensitivity(
    missing_by_year: &BTreeMap<i32, u64>,
    base_counts: &BTreeMap<i32, u64>,
    scenario: SensitivityScenario,
) -> Result<BTreeMap<i32, u64>> {
    if let SensitivityScenario::Likely {
        discharges_per_patient,
    } = scenario
    {
        if discharges_per_patient <= 0.0 {
            return Err(Error::Config(format!(
                "discharge-per-patient ratio must be positive, got {discharges_per_patient}"
            )));
        }
    }
    let mut adjusted = base_counts.clone();
    for (year, &missing) in missing_by_year {
        let extra = match scenario {
            SensitivityScenario::WorstCase => missing,
            SensitivityScenario::Likely {
                discharges_per_patient,
            } => (missing as f64 / discharges_per_patient).round() as u64,
        };
        *adjusted.entry(*year).or_insert(0) += extra;
    }
    Ok(adjusted)
}

/// Yearly diagnosis counts of a cohort.
pub fn diagnoses_by_year(cohort: &[PatientTimeline]) -> BTreeMap<i32, u64> {
    let mut out = BTreeMap::new();
    for t in cohort {
        *out.entry(t.diagnosis_month.year()).or_insert(0) += 1;
    }
    out
}

/// Apply the configured missing-ID scenario to the cohort's yearly diagnosis
/// counts. `Drop` means no adjustment and yields `None`; the `Likely`
/// scenario resolves its divisor from the config, deriving it from the
/// accounting when set to `Auto`.
pub fn scenario_adjusted_counts(
    cohort: &[PatientTimeline],
    accounting: &CohortAccounting,
    cfg: &CohortConfig,
) -> Result<Option<BTreeMap<i32, u64>>> {
    let scenario = match cfg.missing_id_scenario {
        MissingIdScenario::Drop => return Ok(None),
        MissingIdScenario::WorstCase => SensitivityScenario::WorstCase,
        MissingIdScenario::Likely => {
            let ratio = match cfg.discharge_per_patient_ratio {
                PatientRatio::Fixed(r) => r,
                PatientRatio::Auto => accounting.auto_ratio().ok_or_else(|| {
                    Error::Config(
                        "cohort has no patients; cannot derive a discharge-per-patient ratio"
                            .into(),
                    )
                })?,
            };
            SensitivityScenario::Likely {
                discharges_per_patient: ratio,
            }
        }
    };
    let base = diagnoses_by_year(cohort);
    missing_id_sensitivity(&accounting.missing_id_by_year, &base, scenario).map(Some)
}

/// Run the full reconstruction pipeline over parse-valid registry rows.
/// Returns the cohort (sorted by patient ID, imputed timelines included) and
/// the per-step accounting. Empty inputs yield an empty cohort with zeroed
/// accounting.
pub fn build_cohort(
    deaths: &[DeathRecord],
    discharges: &[DischargeRecord],
    rules: &CodeRuleSet,
    cfg: &CohortConfig,
) -> Result<(Vec<PatientTimeline>, CohortAccounting)> {
    cfg.validate()?;
    let mut acc = CohortAccounting {
        total_death_rows: deaths.len() as u64,
        total_discharge_rows: discharges.len() as u64,
        ..CohortAccounting::default()
    };
    let window_first = cfg.window_first();
    let window_last = cfg.window_last();
    let washout_first = cfg.washout_first();
    let window_years = cfg.window_start_year..=cfg.window_end_year;

    // 1. cohort-cause deaths within the study period; rows without an ID
    //    cannot be linked and are removed here.
    let mut death_by_id: BTreeMap<&PersonId, &DeathRecord> = BTreeMap::new();
    for death in deaths {
        if !rules.is_primary(&death.cause_code)
            || !window_years.contains(&death.death_date.year())
        {
            continue;
        }
        acc.bc_death_rows += 1;
        match &death.id {
            None => acc.deaths_missing_id_removed += 1,
            Some(id) => {
                if death_by_id.insert(id, death).is_some() {
                    acc.duplicate_death_ids_ignored += 1;
                } else {
                    acc.bc_deaths += 1;
                }
            }
        }
    }

    // 2. discharges whose primary diagnosis is a cohort code.
    let mut admitted: Vec<&DischargeRecord> = Vec::new();
    let mut ids_with_primary: BTreeSet<&PersonId> = BTreeSet::new();
    for disch in discharges {
        if rules.is_primary(&disch.primary_dx) {
            admitted.push(disch);
            if let Some(id) = &disch.id {
                ids_with_primary.insert(id);
            }
        }
    }
    acc.bc_primary_discharges = admitted.len() as u64;

    // 3. related-code expansion, only for decedents with no primary-code
    //    discharge: groups 1-2 unconditionally, group 3 when the discharge is
    //    within its relation period before death.
    for disch in discharges {
        let Some(id) = &disch.id else { continue };
        if ids_with_primary.contains(id) {
            continue;
        }
        let Some(death) = death_by_id.get(id) else {
            continue;
        };
        let class = rules.classify(&disch.primary_dx);
        let admit = match class {
            DiagnosisClass::RelatedGroup1 | DiagnosisClass::RelatedGroup2 => true,
            DiagnosisClass::RelatedGroup3 { period_years } => {
                let disch_month = MonthIndex::from_date(disch.discharge_date);
                let death_month = MonthIndex::from_date(death.death_date);
                disch_month <= death_month
                    && period_years
                        .map(|p| death_month - disch_month <= i32::from(p) * 12)
                        .unwrap_or(true)
            }
            DiagnosisClass::Primary | DiagnosisClass::Unrelated => false,
        };
        if admit {
            admitted.push(disch);
            acc.related_discharges_added += 1;
        }
    }
    acc.candidate_discharges = admitted.len() as u64;

    // record-level window tally and missing-ID removal.
    let mut kept: Vec<&DischargeRecord> = Vec::with_capacity(admitted.len());
    for disch in admitted {
        let month = MonthIndex::from_date(disch.discharge_date);
        let in_window = month >= window_first && month <= window_last;
        if in_window {
            acc.in_window_records += 1;
        }
        match &disch.id {
            None => {
                if in_window {
                    acc.missing_id_discharges_removed += 1;
                    *acc.missing_id_by_year.entry(month.year()).or_insert(0) += 1;
                }
            }
            Some(_) => {
                if in_window {
                    acc.in_window_kept_records += 1;
                }
                kept.push(disch);
            }
        }
    }

    // 4. group by patient and enforce first-discharge window plus washout.
    let mut by_patient: BTreeMap<&PersonId, Vec<&DischargeRecord>> = BTreeMap::new();
    for disch in &kept {
        by_patient
            .entry(disch.id.as_ref().expect("missing ids dropped"))
            .or_default()
            .push(disch);
    }
    acc.patients_grouped = by_patient.len() as u64;

    let mut cohort: Vec<PatientTimeline> = Vec::new();
    for (id, mut rows) in by_patient.iter().map(|(id, rows)| (*id, rows.clone())) {
        rows.sort_by_key(|r| (r.discharge_date, r.admission_date));
        let first = rows[0];
        let first_month = MonthIndex::from_date(first.discharge_date);
        let in_washout = rows.iter().any(|r| {
            let m = MonthIndex::from_date(r.discharge_date);
            m >= washout_first && m < window_first
        });
        if in_washout {
            acc.washout_patients_excluded += 1;
            continue;
        }
        if first_month < window_first || first_month > window_last {
            acc.out_of_window_patients_excluded += 1;
            continue;
        }
        acc.eligible_patients += 1;

        // 6. gender reconciliation; only females stay.
        let death = death_by_id.get(id).copied();
        let resolution = reconcile_gender(rows.iter().copied(), death);
        let disagreed = {
            let mut seen: BTreeSet<&str> = rows
                .iter()
                .filter(|r| r.sex != Sex::Unknown)
                .map(|r| r.sex.token())
                .collect();
            if let Some(d) = death {
                if d.sex != Sex::Unknown {
                    seen.insert(d.sex.token());
                }
            }
            seen.len() > 1
        };
        match resolution {
            GenderResolution::Drop => {
                acc.gender_inconclusive_removed += 1;
                continue;
            }
            GenderResolution::Male => {
                if disagreed {
                    acc.gender_corrected += 1;
                }
                acc.male_patients_excluded += 1;
                continue;
            }
            GenderResolution::Female => {
                if disagreed {
                    acc.gender_corrected += 1;
                }
            }
        }

        // 7. death linkage and timeline assembly. Insurer and region come
        //    from the first in-window discharge (= the first discharge).
        let in_window_rows: Vec<&&DischargeRecord> = rows
            .iter()
            .filter(|r| {
                let m = MonthIndex::from_date(r.discharge_date);
                m >= window_first && m <= window_last
            })
            .collect();
        let distinct_insurers: BTreeSet<String> =
            in_window_rows.iter().map(|r| r.insurer.token()).collect();
        if distinct_insurers.len() > 1 {
            acc.multi_insurer_patients += 1;
        }
        let (mut end_month, end_kind) = match death {
            Some(d) => (MonthIndex::from_date(d.death_date), EndKind::Death),
            None => (window_last, EndKind::Censored),
        };
        // 8. discharges dated after death are flagged; the timeline stays in
        //    the cohort for incidence but is excluded from survival.
        let mut date_conflict = false;
        if let Some(d) = death {
            let death_month = MonthIndex::from_date(d.death_date);
            if rows
                .iter()
                .any(|r| MonthIndex::from_date(r.discharge_date) > death_month)
            {
                date_conflict = true;
                acc.date_conflict_flagged += 1;
            }
        }
        let diagnosis_month = first_month;
        if end_month < diagnosis_month {
            // death precedes every admissible discharge month; clamp so the
            // timeline stays representable, the conflict flag carries the truth
            debug_assert!(date_conflict);
            end_month = diagnosis_month;
        }
        let age = age_at(first.birth_date, first.discharge_date).unwrap_or(0);
        let timeline = PatientTimeline {
            id: (*id).clone(),
            diagnosis_month,
            end_month,
            end_kind,
            imputed: false,
            date_conflict,
            insurer: first.insurer,
            region: first.region,
            age_at_diagnosis: age,
            discharge_count: in_window_rows.len() as u32,
        };
        timeline.validate()?;
        acc.final_patients += 1;
        cohort.push(timeline);
    }

    // deaths with no matching discharge of any kind get an imputed onset.
    let orphan_deaths: Vec<DeathRecord> = death_by_id
        .iter()
        .filter(|(id, d)| !by_patient.contains_key(*id) && d.sex == Sex::Female)
        .map(|(_, d)| (*d).clone())
        .collect();
    acc.deaths_without_discharge = orphan_deaths.len() as u64;
    let imputed = impute_deaths_without_discharge(&orphan_deaths, cfg);
    acc.imputed_included = imputed.len() as u64;
    acc.imputed_out_of_window = acc.deaths_without_discharge - acc.imputed_included;
    cohort.extend(imputed);

    cohort.sort_by(|a, b| a.id.cmp(&b.id));
    acc.check_balance()?;
    Ok((cohort, acc))
}

/// Female deaths with a cohort-defining cause inside the study period, the
/// denominator-side input for mortality rates.
pub fn bc_female_deaths<'a>(
    deaths: &'a [DeathRecord],
    rules: &CodeRuleSet,
    cfg: &CohortConfig,
) -> Vec<&'a DeathRecord> {
    let years = cfg.window_start_year..=cfg.window_end_year;
    deaths
        .iter()
        .filter(|d| {
            d.sex == Sex::Female
                && rules.is_primary(&d.cause_code)
                && years.contains(&d.death_date.year())
        })
        .collect()
}

pub const COHORT_HEADER: &str = "id,diagnosis_month,end_month,end_kind,imputed,date_conflict,insurer,region,age_at_diagnosis,discharge_count";

pub fn write_cohort(cohort: &[PatientTimeline]) -> String {
    let mut out = String::from(COHORT_HEADER);
    out.push('\n');
    for t in cohort {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            t.id,
            t.diagnosis_month,
            t.end_month,
            t.end_kind,
            t.imputed,
            t.date_conflict,
            t.insurer,
            t.region,
            t.age_at_diagnosis,
            t.discharge_count
        ));
    }
    out
}

pub fn parse_cohort(text: &str) -> Result<Vec<PatientTimeline>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == COHORT_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("cohort file must start with header `{COHORT_HEADER}`"),
            })
        }
    }
    let mut out = Vec::new();
    for (idx, raw) in lines.enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: idx + 2,
            message,
        };
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 10 {
            return Err(err(format!("expected 10 fields, got {}", f.len())));
        }
        let parse_bool = |s: &str| match s.trim() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(err(format!("bad boolean `{other}`"))),
        };
        let timeline = PatientTimeline {
            id: PersonId::new(f[0]).map_err(|e| err(e.to_string()))?,
            diagnosis_month: f[1].parse().map_err(|e: Error| err(e.to_string()))?,
            end_month: f[2].parse().map_err(|e: Error| err(e.to_string()))?,
            end_kind: f[3].parse().map_err(|e: Error| err(e.to_string()))?,
            imputed: parse_bool(f[4])?,
            date_conflict: parse_bool(f[5])?,
            insurer: f[6].parse().map_err(|e: Error| err(e.to_string()))?,
            region: f[7].parse().map_err(|e: Error| err(e.to_string()))?,
            age_at_diagnosis: f[8]
                .trim()
                .parse()
                .map_err(|_| err(format!("bad age `{}`", f[8])))?,
            discharge_count: f[9]
                .trim()
                .parse()
                .map_err(|_| err(format!("bad discharge count `{}`", f[9])))?,
        };
        timeline.validate()?;
        out.push(timeline);
    }
    Ok(out)
}
