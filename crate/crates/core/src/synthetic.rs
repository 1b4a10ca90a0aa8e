//! Seeded synthetic registry generator. It produces death and discharge
//! files exhibiting every hazard the reconstruction pipeline must handle
//! (missing IDs, gender conflicts, washout violators, orphan deaths,
//! post-death discharges) in controlled proportions, together with the
//! ground-truth cohort and hazard parameters for oracle testing.


use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::cohort::{EndKind, PatientTimeline};
use crate::cox::{hazard_ratio, CovariateProfile, CoxModel, ProfileRegion};
use crate::date::MonthIndex;
use crate::error::{Error, Result};
use crate::population::{InsurerClass, PopulationTable, StandardPopulation, Stratum};
use crate::registry::{
    DeathRecord, DischargeRecord, FonasaSegment, Insurer, PersonId, RegionCode, Sex,
};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_patients: usize,
    pub window_start_year: i32,
    pub window_end_year: i32,
    pub washout_start_year: i32,
    /// (insurer, proportion); proportions sum to 1.
    pub insurer_mix: Vec<(Insurer, f64)>,
    /// (region, proportion); proportions sum to 1.
    pub region_mix: Vec<(RegionCode, f64)>,
    pub age_mean: f64,
    pub age_sd: f64,
    /// Monthly death hazard of the reference profile.
    pub baseline_monthly_hazard: f64,
    /// Log-hazard effects on standard design columns.
    pub log_hazard_effects: Vec<(String, f64)>,
    /// Probability of death from an unrelated cause before study end; such
    /// patients leave an other-cause death row and end up censored.
    pub censoring_rate: f64,
    /// Per-discharge probability of a blank patient ID.
    pub missing_id_rate: f64,
    /// Per-discharge probability of a male-coded row.
    pub gender_noise_rate: f64,
    /// Orphan deaths (no discharge at all), as a fraction of `n_patients`.
    pub orphan_death_rate: f64,
    /// Per-patient probability of an extra discharge inside the washout years.
    pub washout_violator_rate: f64,
    /// Per-decedent probability of a discharge dated after death.
    pub conflict_rate: f64,
    /// Mean number of follow-up discharges per patient (Poisson).
    pub extra_discharge_mean: f64,
    /// Female population written to the population file, per year.
    pub population_per_year: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        let mut region_mix = vec![
            (RegionCode::Rm, 0.40),
            (RegionCode::V, 0.12),
            (RegionCode::Viii, 0.10),
        ];
        let rest: Vec<RegionCode> = RegionCode::ALL
            .into_iter()
            .filter(|r| !matches!(r, RegionCode::Rm | RegionCode::V | RegionCode::Viii))
            .collect();
        let share = 0.38 / rest.len() as f64;
        region_mix.extend(rest.into_iter().map(|r| (r, share)));
        SyntheticSpec {
            n_patients: 1000,
            window_start_year: 2007,
            window_end_year: 2018,
            washout_start_year: 2001,
            insurer_mix: vec![
                (Insurer::Fonasa(FonasaSegment::A), 0.15),
                (Insurer::Fonasa(FonasaSegment::B), 0.25),
                (Insurer::Fonasa(FonasaSegment::C), 0.20),
                (Insurer::Fonasa(FonasaSegment::D), 0.18),
                (Insurer::Isapre, 0.14),
                (Insurer::ArmedForces, 0.03),
                (Insurer::None, 0.02),
                (Insurer::Unknown, 0.03),
            ],
            region_mix,
            age_mean: 58.0,
            age_sd: 14.0,
            baseline_monthly_hazard: 0.004,
            log_hazard_effects: vec![
                ("fonasa".into(), 0.26),
                ("fonasa_a".into(), 0.25),
                ("isapre".into(), -0.29),
                ("age".into(), -1.5),
                ("age_squared".into(), 2.2),
            ],
            censoring_rate: 0.05,
            missing_id_rate: 0.0,
            gender_noise_rate: 0.0,
            orphan_death_rate: 0.0,
            washout_violator_rate: 0.0,
            conflict_rate: 0.0,
            extra_discharge_mean: 0.7,
            population_per_year: 2_000_000,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let check_mix = |name: &str, sum: f64| -> Result<()> {
            if (sum - 1.0).abs() > 1e-6 {
                return Err(Error::Config(format!(
                    "{name} proportions must sum to 1, got {sum}"
                )));
            }
            Ok(())
        };
        check_mix("insurer", self.insurer_mix.iter().map(|(_, p)| p).sum())?;
        check_mix("region", self.region_mix.iter().map(|(_, p)| p).sum())?;
        if self.insurer_mix.iter().any(|(_, p)| *p < 0.0)
            || self.region_mix.iter().any(|(_, p)| *p < 0.0)
        {
            return Err(Error::Config("mix proportions must be non-negative".into()));
        }
        for (name, rate) in [
            ("censoring_rate", self.censoring_rate),
            ("missing_id_rate", self.missing_id_rate),
            ("gender_noise_rate", self.gender_noise_rate),
            ("orphan_death_rate", self.orphan_death_rate),
            ("washout_violator_rate", self.washout_violator_rate),
            ("conflict_rate", self.conflict_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!(
                    "{name} must be in [0,1], got {rate}"
                )));
            }
        }
        if self.baseline_monthly_hazard <= 0.0 {
            return Err(Error::Config("baseline hazard must be positive".into()));
        }
        if self.washout_start_year >= self.window_start_year
            || self.window_start_year > self.window_end_year
        {
            return Err(Error::Config("generator years are out of order".into()));
        }
        if self.age_sd < 0.0 || self.extra_discharge_mean < 0.0 {
            return Err(Error::Config(
                "dispersion parameters must be non-negative".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad generator spec: {e}")))
    }
}

/// The true cohort and hazard parameters behind a generated registry pair.
#[derive(Debug, Clone)]
pub struct GroundTruth {
    /// Expected reconstruction output (imputed orphans excluded), sorted by ID.
    pub cohort: Vec<PatientTimeline>,
    pub baseline_monthly_hazard: f64,
    pub log_hazard_effects: Vec<(String, f64)>,
    pub n_orphan_deaths: usize,
    pub n_washout_violators: usize,
    pub n_conflicts: usize,
}

impl GroundTruth {
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "baseline_monthly_hazard": self.baseline_monthly_hazard,
            "log_hazard_effects": self.log_hazard_effects,
            "n_orphan_deaths": self.n_orphan_deaths,
            "n_washout_violators": self.n_washout_violators,
            "n_conflicts": self.n_conflicts,
            "cohort_csv": crate::cohort::write_cohort(&self.cohort),
        })
        .to_string()
    }
}

#[derive(Debug)]
pub struct SyntheticData {
    pub deaths: Vec<DeathRecord>,
    pub discharges: Vec<DischargeRecord>,
    pub population: PopulationTable,
    pub ground_truth: GroundTruth,
}

fn categorical<'a, K>(rng: &mut ChaCha12Rng, mix: &'a [(K, f64)]) -> &'a K {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, p) in mix {
        acc += p;
        if u < acc {
            return k;
        }
    }
    &mix.last().expect("non-empty mix").0
}

fn normal(rng: &mut ChaCha12Rng, mean: f64, sd: f64) -> f64 {
    // Box-Muller
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    mean + sd * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

fn poisson(rng: &mut ChaCha12Rng, lambda: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let l = (-lambda).exp();
    let mut k = 0u32;
    let mut p = 1.0;
    loop {
        p *= rng.random::<f64>();
        if p <= l || k >= 50 {
            return k;
        }
        k += 1;
    }
}

const NEVER: u32 = u32::MAX;

fn geometric_months(rng: &mut ChaCha12Rng, p_death: f64) -> u32 {
    if p_death >= 1.0 {
        return 0;
    }
    if p_death <= 0.0 {
        return NEVER;
    }
    let u: f64 = rng.random();
    let t = (1.0 - u).ln() / (1.0 - p_death).ln();
    t.floor().min(f64::from(u32::MAX - 1)) as u32
}

fn day_in(rng: &mut ChaCha12Rng) -> u32 {
    rng.random_range(2..=27)
}

const OTHER_CAUSES: [&str; 3] = ["J189", "I509", "K802"];

/// Generate a registry pair and its ground truth. Identical `(spec, seed)`
/// inputs produce byte-identical outputs.
pub fn generate(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let window_first = MonthIndex::new(spec.window_start_year, 1);
    let window_last = MonthIndex::new(spec.window_end_year, 12);
    let window_months = (window_last - window_first) as u32;

    // hazard model shared by all patients, expressed relative to a fixed
    // reference profile so raw-scale effects (e.g. on calendar year) stay
    // numerically tame
    let effect_model: CoxModel<f64> = CoxModel::from_coefficients(
        &spec
            .log_hazard_effects
            .iter()
            .map(|(n, b)| (n.as_str(), *b))
            .collect::<Vec<_>>(),
    );
    let reference_region = spec
        .region_mix
        .iter()
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .map(|(r, _)| *r)
        .unwrap_or(RegionCode::Rm);
    let reference = CovariateProfile::default()
        .with_age(spec.age_mean)
        .with_year(spec.window_start_year as f64)
        .with_insurer(Insurer::Unknown)
        .with_region(ProfileRegion::Region(reference_region));

    let mut deaths = Vec::new();
    let mut discharges = Vec::new();
    let mut cohort = Vec::with_capacity(spec.n_patients);
    let mut n_washout_violators = 0usize;
    let mut n_conflicts = 0usize;

    for i in 0..spec.n_patients {
        let id = PersonId::new(format!("P{:06}", i + 1)).expect("non-empty id");
        let insurer = *categorical(&mut rng, &spec.insurer_mix);
        let region = *categorical(&mut rng, &spec.region_mix);
        let age = normal(&mut rng, spec.age_mean, spec.age_sd)
            .round()
            .clamp(18.0, 99.0) as u32;
        let diagnosis_month = window_first + rng.random_range(0..=window_months) as i32;

        let profile = CovariateProfile::default()
            .with_age(age as f64)
            .with_year(diagnosis_month.year() as f64)
            .with_insurer(insurer)
            .with_region(ProfileRegion::Region(region));
        let rel = hazard_ratio(&effect_model, &reference, &profile)?;
        let hazard = spec.baseline_monthly_hazard * rel;
        let p_death = 1.0 - (-hazard).exp();

        let admin_after = (window_last - diagnosis_month) as u32;
        let death_after = geometric_months(&mut rng, p_death);
        let other_after = if rng.random::<f64>() < spec.censoring_rate && admin_after > 0 {
            rng.random_range(0..admin_after)
        } else {
            NEVER
        };

        // first event wins; an other-cause death leaves a non-matching death
        // row, so the reconstruction sees such a patient as censored at study
        // end, and the ground truth records exactly that
        let bc_death = death_after <= other_after && death_after <= admin_after;
        let other_death = !bc_death && other_after <= admin_after;
        let last_observed = death_after.min(other_after).min(admin_after);

        let mut truth = PatientTimeline {
            id: id.clone(),
            diagnosis_month,
            end_month: if bc_death {
                diagnosis_month + death_after as i32
            } else {
                window_last
            },
            end_kind: if bc_death {
                EndKind::Death
            } else {
                EndKind::Censored
            },
            imputed: false,
            date_conflict: false,
            insurer,
            region,
            age_at_diagnosis: age,
            discharge_count: 0,
        };

        let birth_date = NaiveDate::from_ymd_opt(
            diagnosis_month.year() - age as i32,
            diagnosis_month.month(),
            1,
        )
        .expect("valid birth date");

        let mut discharge_months = vec![diagnosis_month];
        for _ in 0..poisson(&mut rng, spec.extra_discharge_mean) {
            let offset = if last_observed == 0 {
                0
            } else {
                rng.random_range(0..=last_observed)
            };
            discharge_months.push(diagnosis_month + offset as i32);
        }

        // injected pipeline hazards
        if rng.random::<f64>() < spec.washout_violator_rate {
            let washout_first = MonthIndex::new(spec.washout_start_year, 1);
            let washout_span = (window_first - washout_first) as u32;
            let offset = rng.random_range(0..washout_span);
            discharge_months.push(washout_first + offset as i32);
            n_washout_violators += 1;
        }
        if bc_death && truth.end_month < window_last && rng.random::<f64>() < spec.conflict_rate {
            let latest = ((window_last - truth.end_month) as u32).min(4);
            let offset = rng.random_range(1..=latest);
            discharge_months.push(truth.end_month + offset as i32);
            truth.date_conflict = true;
            n_conflicts += 1;
        }
        let violator = discharge_months.iter().any(|m| *m < window_first);
        truth.discharge_count = discharge_months
            .iter()
            .filter(|m| **m >= window_first && **m <= window_last)
            .count() as u32;

        for month in &discharge_months {
            let admission_day = day_in(&mut rng);
            let admission = NaiveDate::from_ymd_opt(month.year(), month.month(), admission_day)
                .expect("valid admission");
            let discharge_date =
                NaiveDate::from_ymd_opt(month.year(), month.month(), admission_day + 1)
                    .expect("valid discharge");
            let sex = if rng.random::<f64>() < spec.gender_noise_rate {
                Sex::Male
            } else {
                Sex::Female
            };
            let row_id = if rng.random::<f64>() < spec.missing_id_rate {
                None
            } else {
                Some(id.clone())
            };
            let dx_digit = rng.random_range(0..=9u32);
            discharges.push(DischargeRecord {
                id: row_id,
                birth_date,
                sex,
                region,
                insurer,
                admission_date: admission,
                discharge_date,
                primary_dx: format!("C50{dx_digit}").parse().expect("valid code"),
                secondary_dx: vec![],
            });
        }

        if bc_death || other_death {
            let death_month = diagnosis_month + last_observed as i32;
            let cause = if bc_death {
                "C509".to_string()
            } else {
                OTHER_CAUSES[rng.random_range(0..OTHER_CAUSES.len())].to_string()
            };
            deaths.push(DeathRecord {
                id: Some(id.clone()),
                birth_date,
                death_date: NaiveDate::from_ymd_opt(
                    death_month.year(),
                    death_month.month(),
                    day_in(&mut rng),
                )
                .expect("valid death date"),
                sex: Sex::Female,
                region,
                cause_code: cause.parse().expect("valid code"),
            });
        }

        if !violator {
            cohort.push(truth);
        }
    }

    // orphan deaths: women who died of the cohort cause without any discharge
    let n_orphans = (spec.orphan_death_rate * spec.n_patients as f64).round() as usize;
    for i in 0..n_orphans {
        let id = PersonId::new(format!("O{:06}", i + 1)).expect("non-empty id");
        let region = *categorical(&mut rng, &spec.region_mix);
        let age = normal(&mut rng, spec.age_mean + 9.0, spec.age_sd)
            .round()
            .clamp(20.0, 105.0) as i32;
        let death_month = window_first + rng.random_range(0..=window_months) as i32;
        deaths.push(DeathRecord {
            id: Some(id),
            birth_date: NaiveDate::from_ymd_opt(death_month.year() - age, 1, 1)
                .expect("valid birth"),
            death_date: NaiveDate::from_ymd_opt(
                death_month.year(),
                death_month.month(),
                day_in(&mut rng),
            )
            .expect("valid death date"),
            sex: Sex::Female,
            region,
            cause_code: "C509".parse().expect("valid code"),
        });
    }

    // population denominators proportional to the standard age structure
    let std_pop = StandardPopulation::world_standard();
    let fonasa_share: f64 = spec
        .insurer_mix
        .iter()
        .filter(|(i, _)| matches!(i, Insurer::Fonasa(_)))
        .map(|(_, p)| p)
        .sum();
    let isapre_share: f64 = spec
        .insurer_mix
        .iter()
        .filter(|(i, _)| *i == Insurer::Isapre)
        .map(|(_, p)| p)
        .sum();
    let mut population = PopulationTable::new();
    for year in spec.window_start_year..=spec.window_end_year {
        for (band, w) in std_pop.weights().iter().enumerate() {
            let of_share = |share: f64| (w * share * spec.population_per_year as f64).round() as u64;
            population.insert(year, Stratum::National, band, of_share(1.0));
            for (region, share) in &spec.region_mix {
                population.insert(year, Stratum::Region(*region), band, of_share(*share));
            }
            population.insert(
                year,
                Stratum::Insurer(InsurerClass::Fonasa),
                band,
                of_share(fonasa_share),
            );
            population.insert(
                year,
                Stratum::Insurer(InsurerClass::Isapre),
                band,
                of_share(isapre_share),
            );
        }
    }

    cohort.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(SyntheticData {
        deaths,
        discharges,
        population,
        ground_truth: GroundTruth {
            cohort,
            baseline_monthly_hazard: spec.baseline_monthly_hazard,
            log_hazard_effects: spec.log_hazard_effects.clone(),
            n_orphan_deaths: n_orphans,
            n_washout_violators,
            n_conflicts,
        },
    })
}
