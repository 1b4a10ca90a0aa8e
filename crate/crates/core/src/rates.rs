//! Crude, age-specific, and directly age-standardized rates per 100,000
//! women, case-fatality ratios, and the least-squares extrapolation used to
//! fill gaps in population series. Internal arithmetic stays in full
//! precision; rounding happens only at serialization.

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use chrono::Datelike;

use crate::cohort::PatientTimeline;
use crate::date::age_at;
use crate::error::{Error, Result};
use crate::population::{
    band_index, AgeBand, InsurerClass, PopulationTable, StandardPopulation, Stratum,
};
use crate::registry::{DeathRecord, PersonId, RegionCode};
use crate::scalar::Scalar;

const PER_100K: f64 = 100_000.0;

/// Cases per 100,000 population.
pub fn crude_rate<T: Scalar>(cases: u64, population: u64) -> Result<T> {
    if population == 0 {
        return Err(Error::UndefinedRate);
    }
    Ok(T::from_count(cases) / T::from_count(population) * T::from_f64_lossy(PER_100K))
}

/// Directly standardized rate: the weighted sum of age-specific rates. Bands
/// may be missing only where the standard weight is zero.
pub fn age_adjusted_rate<T: Scalar>(
    age_specific: &[Option<T>],
    std_pop: &StandardPopulation<T>,
) -> Result<T> {
    let weights = std_pop.weights();
    if age_specific.len() != weights.len() {
        return Err(Error::Coverage(format!(
            "expected {} age-specific rates, got {}",
            weights.len(),
            age_specific.len()
        )));
    }
    let mut sum = T::zero();
    for (band, (rate, &w)) in age_specific.iter().zip(weights).enumerate() {
        if w == T::zero() {
            continue;
        }
        match rate {
            Some(r) => sum = sum + w * *r,
            None => {
                return Err(Error::Coverage(format!(
                    "age-specific rate missing for band {band} with nonzero standard weight"
                )))
            }
        }
    }
    Ok(sum)
}

/// Case fatality as a percentage: crude mortality over crude incidence.
pub fn case_fatality_rate<T: Scalar>(crude_mortality: T, crude_incidence: T) -> Result<T> {
    if crude_incidence <= T::zero() {
        return Err(Error::UndefinedCaseFatality);
    }
    Ok(crude_mortality / crude_incidence * T::from_f64_lossy(100.0))
}

/// Ordinary least-squares line through (year, count), evaluated at the
/// target years and rounded to whole persons.
pub fn extrapolate_population<T: Scalar>(
    series: &BTreeMap<i32, u64>,
    target_years: &[i32],
) -> Result<BTreeMap<i32, u64>> {
    if series.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "population extrapolation needs at least 2 points, got {}",
            series.len()
        )));
    }
    let n = T::from_count(series.len() as u64);
    let mut sum_x = T::zero();
    let mut sum_y = T::zero();
    for (&year, &count) in series {
        sum_x = sum_x + T::from_f64_lossy(year as f64);
        sum_y = sum_y + T::from_count(count);
    }
    let mean_x = sum_x / n;
    let mean_y = sum_y / n;
    let mut sxx = T::zero();
    let mut sxy = T::zero();
    for (&year, &count) in series {
        let dx = T::from_f64_lossy(year as f64) - mean_x;
        sxx = sxx + dx * dx;
        sxy = sxy + dx * (T::from_count(count) - mean_y);
    }
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    let mut out = BTreeMap::new();
    for &year in target_years {
        let y = mean_y + slope * (T::from_f64_lossy(year as f64) - mean_x);
        let rounded = y.round().to_f64().unwrap_or(0.0).max(0.0) as u64;
        out.insert(year, rounded);
    }
    Ok(out)
}

/// What a rate table counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Measure {
    /// Patients by diagnosis year.
    Incidence,
    /// Deaths by death year.
    Mortality,
}

/// Row grouping for stratified rates. `AgeBand` groups like `Year` but the
/// serialized table carries the per-band columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stratifier {
    Year,
    Region,
    Insurer,
    AgeBand,
}

#[derive(Debug, Clone)]
pub struct RateRow<T> {
    pub year: i32,
    pub stratum: Stratum,
    pub cases: u64,
    pub population: u64,
    /// None when the stratum population is zero (row flagged, not dropped).
    pub crude: Option<T>,
    /// None when age-specific coverage is incomplete for the standard.
    pub adjusted: Option<T>,
    pub age_specific: Vec<Option<T>>,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct RateTable<T> {
    pub measure: Measure,
    pub by: Stratifier,
    pub bands: Vec<AgeBand>,
    pub rows: Vec<RateRow<T>>,
    /// For insurer-stratified mortality: share (%) of deaths per year whose
    /// insurer could not be recovered through linkage.
    pub missing_insurer_pct: BTreeMap<i32, T>,
}

/// Count cohort cases or deaths per (year, stratum, age band) and derive
/// crude, age-specific and standardized rates against the population table.
///
/// Incidence counts every timeline (imputed and date-conflict ones included)
/// by diagnosis year. Mortality counts the supplied death records by death
/// year; for insurer strata the insurer is recovered by ID linkage into the
/// cohort, and deaths that cannot be recovered feed the missing column.
pub fn stratified_rates<T: Scalar>(
    cohort: &[PatientTimeline],
    bc_deaths: &[DeathRecord],
    population: &PopulationTable,
    std_pop: &StandardPopulation<T>,
    by: Stratifier,
    measure: Measure,
    years: RangeInclusive<i32>,
) -> Result<RateTable<T>> {
    let bands = population.bands().to_vec();
    if std_pop.weights().len() != bands.len() {
        return Err(Error::Coverage(
            "standard population bands do not match population table bands".into(),
        ));
    }
    let strata: Vec<Stratum> = match by {
        Stratifier::Year | Stratifier::AgeBand => vec![Stratum::National],
        Stratifier::Region => RegionCode::ALL.iter().map(|r| Stratum::Region(*r)).collect(),
        Stratifier::Insurer => vec![
            Stratum::Insurer(InsurerClass::Fonasa),
            Stratum::Insurer(InsurerClass::Isapre),
        ],
    };

    // tally cases into (year, stratum) -> per-band counts
    let mut tally: BTreeMap<(i32, Stratum), Vec<u64>> = BTreeMap::new();
    for year in years.clone() {
        for stratum in &strata {
            tally.insert((year, *stratum), vec![0; bands.len()]);
        }
    }
    let mut missing_by_year: BTreeMap<i32, (u64, u64)> = BTreeMap::new(); // (missing, total)

    match measure {
        Measure::Incidence => {
            for t in cohort {
                let year = t.diagnosis_month.year();
                if !years.contains(&year) {
                    continue;
                }
                let Some(band) = band_index(&bands, t.age_at_diagnosis) else {
                    continue;
                };
                let stratum = match by {
                    Stratifier::Year | Stratifier::AgeBand => Some(Stratum::National),
                    Stratifier::Region => Some(Stratum::Region(t.region)),
                    Stratifier::Insurer => match InsurerClass::from(t.insurer) {
                        c @ (InsurerClass::Fonasa | InsurerClass::Isapre) => {
                            Some(Stratum::Insurer(c))
                        }
                        _ => None,
                    },
                };
                if let Some(stratum) = stratum {
                    if let Some(counts) = tally.get_mut(&(year, stratum)) {
                        counts[band] += 1;
                    }
                }
            }
        }
        Measure::Mortality => {
            let insurer_of: BTreeMap<&PersonId, InsurerClass> = cohort
                .iter()
                .map(|t| (&t.id, InsurerClass::from(t.insurer)))
                .collect();
            for d in bc_deaths {
                let year = d.death_date.year();
                if !years.contains(&year) {
                    continue;
                }
                let age = age_at(d.birth_date, d.death_date).unwrap_or(0);
                let Some(band) = band_index(&bands, age) else {
                    continue;
                };
                let stratum = match by {
                    Stratifier::Year | Stratifier::AgeBand => Some(Stratum::National),
                    Stratifier::Region => Some(Stratum::Region(d.region)),
                    Stratifier::Insurer => {
                        let linked = d
                            .id
                            .as_ref()
                            .and_then(|id| insurer_of.get(id).copied())
                            .filter(|c| *c != InsurerClass::Unknown);
                        let entry = missing_by_year.entry(year).or_insert((0, 0));
                        entry.1 += 1;
                        match linked {
                            Some(c @ (InsurerClass::Fonasa | InsurerClass::Isapre)) => {
                                Some(Stratum::Insurer(c))
                            }
                            Some(_) => None, // recovered, but outside the two systems
                            None => {
                                entry.0 += 1;
                                None
                            }
                        }
                    }
                };
                if let Some(stratum) = stratum {
                    if let Some(counts) = tally.get_mut(&(year, stratum)) {
                        counts[band] += 1;
                    }
                }
            }
        }
    }

    // derive the rate rows
    let mut rows = Vec::with_capacity(tally.len());
    for ((year, stratum), case_bands) in tally {
        let mut pop_bands = Vec::with_capacity(bands.len());
        for band in 0..bands.len() {
            let count = population.band_count(year, stratum, band).ok_or_else(|| {
                Error::Coverage(format!(
                    "population missing for year {year}, stratum {stratum}, band {}",
                    bands[band]
                ))
            })?;
            pop_bands.push(count);
        }
        let cases: u64 = case_bands.iter().sum();
        let pop_total: u64 = pop_bands.iter().sum();
        let mut flagged = false;
        let crude = match crude_rate::<T>(cases, pop_total) {
            Ok(r) => Some(r),
            Err(_) => {
                flagged = true;
                None
            }
        };
        let age_specific: Vec<Option<T>> = case_bands
            .iter()
            .zip(&pop_bands)
            .map(|(&c, &p)| crude_rate::<T>(c, p).ok())
            .collect();
        let adjusted = match age_adjusted_rate(&age_specific, std_pop) {
            Ok(r) => Some(r),
            Err(_) => {
                flagged = true;
                None
            }
        };
        rows.push(RateRow {
            year,
            stratum,
            cases,
            population: pop_total,
            crude,
            adjusted,
            age_specific,
            flagged,
        });
    }

    let missing_insurer_pct = missing_by_year
        .into_iter()
        .filter(|(_, (_, total))| *total > 0)
        .map(|(year, (missing, total))| {
            (
                year,
                T::from_count(missing) / T::from_count(total) * T::from_f64_lossy(100.0),
            )
        })
        .collect();

    Ok(RateTable {
        measure,
        by,
        bands,
        rows,
        missing_insurer_pct,
    })
}

/// Case-fatality rows derived from matching crude incidence and mortality
/// rows; strata without both rates are skipped.
#[derive(Debug, Clone)]
pub struct CfrRow<T> {
    pub year: i32,
    pub stratum: Stratum,
    pub case_fatality_pct: T,
}

pub fn case_fatality_table<T: Scalar>(
    incidence: &RateTable<T>,
    mortality: &RateTable<T>,
) -> Vec<CfrRow<T>> {
    let mortality_by_key: BTreeMap<(i32, Stratum), &RateRow<T>> = mortality
        .rows
        .iter()
        .map(|r| ((r.year, r.stratum), r))
        .collect();
    let mut out = Vec::new();
    for inc in &incidence.rows {
        let Some(mort) = mortality_by_key.get(&(inc.year, inc.stratum)) else {
            continue;
        };
        let (Some(i), Some(m)) = (inc.crude, mort.crude) else {
            continue;
        };
        if let Ok(cfr) = case_fatality_rate(m, i) {
            out.push(CfrRow {
                year: inc.year,
                stratum: inc.stratum,
                case_fatality_pct: cfr,
            });
        }
    }
    out
}

fn fmt1<T: Scalar>(v: Option<T>) -> String {
    match v {
        Some(x) => format!("{:.1}", x.to_f64().unwrap_or(f64::NAN)),
        None => String::new(),
    }
}

/// Serialize a rate table to one decimal place. The age-band layout emits
/// one row per (year, band) with its age-specific rate; the other layouts
/// emit one row per (year, stratum) with crude and adjusted rates.
pub fn write_rate_table<T: Scalar>(table: &RateTable<T>) -> String {
    if table.by == Stratifier::AgeBand {
        let mut out = String::from("year,age_band,rate\n");
        for row in &table.rows {
            for (band, rate) in table.bands.iter().zip(&row.age_specific) {
                out.push_str(&format!("{},{band},{}\n", row.year, fmt1(*rate)));
            }
        }
        return out;
    }
    let mut header = String::from("year,stratum,cases,population,crude_rate,adjusted_rate");
    if !table.missing_insurer_pct.is_empty() {
        header.push_str(",missing_pct");
    }
    let mut out = header;
    out.push('\n');
    for row in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            row.year,
            row.stratum,
            row.cases,
            row.population,
            fmt1(row.crude),
            fmt1(row.adjusted),
        ));
        if !table.missing_insurer_pct.is_empty() {
            out.push_str(&format!(
                ",{}",
                fmt1(table.missing_insurer_pct.get(&row.year).copied())
            ));
        }
        out.push('\n');
    }
    out
}

pub fn write_cfr_table<T: Scalar>(rows: &[CfrRow<T>]) -> String {
    let mut out = String::from("year,stratum,case_fatality_pct\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{}\n",
            r.year,
            r.stratum,
            fmt1(Some(r.case_fatality_pct))
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::EndKind;
    use crate::date::MonthIndex;
    use crate::population::default_age_bands;
    use crate::registry::{FonasaSegment, Insurer, Sex};
    use proptest::prelude::*;

    fn timeline(id: &str, year: i32, age: u32, region: RegionCode, insurer: Insurer) -> PatientTimeline {
        PatientTimeline {
            id: PersonId::new(id).unwrap(),
            diagnosis_month: MonthIndex::new(year, 6),
            end_month: MonthIndex::new(year, 9),
            end_kind: EndKind::Censored,
            imputed: false,
            date_conflict: false,
            insurer,
            region,
            age_at_diagnosis: age,
            discharge_count: 1,
        }
    }

    fn flat_population(years: std::ops::RangeInclusive<i32>, per_band: u64) -> PopulationTable {
        let mut pop = PopulationTable::new();
        let n_bands = pop.bands().len();
        for year in years {
            for band in 0..n_bands {
                pop.insert(year, Stratum::National, band, per_band);
                for r in RegionCode::ALL {
                    pop.insert(year, Stratum::Region(r), band, per_band);
                }
                pop.insert(year, Stratum::Insurer(InsurerClass::Fonasa), band, per_band);
                pop.insert(year, Stratum::Insurer(InsurerClass::Isapre), band, per_band);
            }
        }
        pop
    }

    #[test]
    fn crude_rate_matches_hand_arithmetic() {
        let r: f64 = crude_rate(1158, 8_390_194).unwrap();
        assert_eq!(format!("{r:.1}"), "13.8");
        let r: f64 = crude_rate(0, 1_000_000).unwrap();
        assert_eq!(r, 0.0);
        let r: f64 = crude_rate(4128, 8_390_194).unwrap();
        assert_eq!(format!("{r:.1}"), "49.2");
        assert!(crude_rate::<f64>(1, 0).is_err());
    }

    #[test]
    fn adjusted_rate_is_weight_invariant_for_constant_rates() {
        let std_pop = StandardPopulation::world_standard();
        let rates: Vec<Option<f64>> = vec![Some(40.0); 15];
        let adj = age_adjusted_rate(&rates, &std_pop).unwrap();
        assert!((adj - 40.0).abs() < 1e-12);
    }

    #[test]
    fn adjusted_rate_two_band_hand_example() {
        let std_pop = StandardPopulation::new(vec![0.25f64, 0.75]).unwrap();
        let adj = age_adjusted_rate(&[Some(10.0), Some(30.0)], &std_pop).unwrap();
        assert!((adj - 25.0).abs() < 1e-12);
    }

    #[test]
    fn zero_weight_band_may_be_missing() {
        let std_pop = StandardPopulation::new(vec![1.0f64, 0.0]).unwrap();
        let adj = age_adjusted_rate(&[Some(12.0), None], &std_pop).unwrap();
        assert!((adj - 12.0).abs() < 1e-12);
        // but a missing band with weight is a coverage error
        let std_pop = StandardPopulation::new(vec![0.5f64, 0.5]).unwrap();
        assert!(age_adjusted_rate(&[Some(12.0), None], &std_pop).is_err());
    }

    #[test]
    fn case_fatality_matches_published_rounding() {
        let cfr: f64 = case_fatality_rate(12.4, 46.7).unwrap();
        assert_eq!(format!("{cfr:.1}"), "26.6");
        assert!((cfr - 26.5).abs() < 0.3);
        let zero: f64 = case_fatality_rate(0.0, 50.0).unwrap();
        assert_eq!(zero, 0.0);
        assert!(case_fatality_rate::<f64>(10.0, 0.0).is_err());
    }

    #[test]
    fn extrapolation_recovers_exact_lines() {
        let series = BTreeMap::from([(2009, 100u64), (2010, 110), (2011, 120)]);
        let out = extrapolate_population::<f64>(&series, &[2008]).unwrap();
        assert_eq!(out.get(&2008), Some(&90));

        let constant = BTreeMap::from([(2009, 500u64), (2010, 500)]);
        let out = extrapolate_population::<f64>(&constant, &[2007]).unwrap();
        assert_eq!(out.get(&2007), Some(&500));

        assert!(extrapolate_population::<f64>(&BTreeMap::from([(2009, 1u64)]), &[2010]).is_err());
    }

    #[test]
    fn extrapolation_matches_closed_form_least_squares() {
        // independent oracle: solve the 2x2 normal equations directly
        let pts: Vec<(i32, u64)> =
            vec![(2009, 103), (2010, 94), (2011, 121), (2012, 117), (2013, 133)];
        let series: BTreeMap<i32, u64> = pts.iter().copied().collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|(x, _)| *x as f64).sum();
        let sy: f64 = pts.iter().map(|(_, y)| *y as f64).sum();
        let sxx: f64 = pts.iter().map(|(x, _)| (*x as f64) * (*x as f64)).sum();
        let sxy: f64 = pts.iter().map(|(x, y)| (*x as f64) * (*y as f64)).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;
        for target in [2007i32, 2008, 2015] {
            let oracle = (intercept + slope * target as f64).round() as i64;
            let got = extrapolate_population::<f64>(&series, &[target]).unwrap()[&target] as i64;
            assert!((got - oracle).abs() <= 1, "target {target}: {got} vs {oracle}");
        }
    }

    #[test]
    fn stratified_counts_match_hand_tally() {
        let cohort = vec![
            timeline("P1", 2010, 45, RegionCode::Rm, Insurer::Fonasa(FonasaSegment::B)),
            timeline("P2", 2010, 52, RegionCode::Rm, Insurer::Isapre),
            timeline("P3", 2010, 67, RegionCode::V, Insurer::Fonasa(FonasaSegment::A)),
            timeline("P4", 2011, 30, RegionCode::V, Insurer::ArmedForces),
        ];
        let pop = flat_population(2010..=2011, 10_000);
        let std_pop = StandardPopulation::world_standard();

        let by_year = stratified_rates(
            &cohort, &[], &pop, &std_pop, Stratifier::Year, Measure::Incidence, 2010..=2011,
        )
        .unwrap();
        let row_2010 = by_year.rows.iter().find(|r| r.year == 2010).unwrap();
        assert_eq!(row_2010.cases, 3);
        assert_eq!(row_2010.population, 150_000);
        assert!((row_2010.crude.unwrap() - 2.0).abs() < 1e-12);
        let row_2011 = by_year.rows.iter().find(|r| r.year == 2011).unwrap();
        assert_eq!(row_2011.cases, 1);

        let by_region = stratified_rates(
            &cohort, &[], &pop, &std_pop, Stratifier::Region, Measure::Incidence, 2010..=2010,
        )
        .unwrap();
        let rm = by_region
            .rows
            .iter()
            .find(|r| r.stratum == Stratum::Region(RegionCode::Rm))
            .unwrap();
        assert_eq!(rm.cases, 2);

        // armed-forces patients do not enter the two insurer strata
        let by_insurer = stratified_rates(
            &cohort, &[], &pop, &std_pop, Stratifier::Insurer, Measure::Incidence, 2010..=2011,
        )
        .unwrap();
        let total: u64 = by_insurer.rows.iter().map(|r| r.cases).sum();
        assert_eq!(total, 3);
    }

    #[test]
    fn single_case_per_hundred_thousand_is_one() {
        let cohort = vec![timeline("P1", 2010, 45, RegionCode::Rm, Insurer::Isapre)];
        let mut pop = PopulationTable::new();
        let n_bands = pop.bands().len();
        for band in 0..n_bands {
            // all population mass in one band keeps the total at 100,000
            pop.insert(2010, Stratum::National, band, if band == 6 { 100_000 } else { 0 });
        }
        let std_pop = StandardPopulation::world_standard();
        let table = stratified_rates(
            &cohort, &[], &pop, &std_pop, Stratifier::Year, Measure::Incidence, 2010..=2010,
        )
        .unwrap();
        assert!((table.rows[0].crude.unwrap() - 1.0).abs() < 1e-12);
        // zero-population bands flag the row rather than dropping it
        assert!(table.rows[0].flagged);
        assert!(table.rows[0].adjusted.is_none());
    }

    #[test]
    fn mortality_links_insurer_and_reports_missing_share() {
        use chrono::NaiveDate;
        let cohort = vec![
            timeline("P1", 2010, 45, RegionCode::Rm, Insurer::Fonasa(FonasaSegment::B)),
            timeline("P2", 2010, 52, RegionCode::Rm, Insurer::Isapre),
        ];
        let death = |id: Option<&str>, y: i32| DeathRecord {
            id: id.map(|s| PersonId::new(s).unwrap()),
            birth_date: NaiveDate::from_ymd_opt(1950, 1, 1).unwrap(),
            death_date: NaiveDate::from_ymd_opt(y, 7, 1).unwrap(),
            sex: Sex::Female,
            region: RegionCode::Rm,
            cause_code: "C509".parse().unwrap(),
        };
        let deaths = vec![
            death(Some("P1"), 2010),
            death(Some("P2"), 2010),
            death(Some("P9"), 2010), // never hospitalized: insurer unrecoverable
            death(None, 2010),       // missing id: unrecoverable
        ];
        let pop = flat_population(2010..=2010, 10_000);
        let std_pop = StandardPopulation::world_standard();
        let table = stratified_rates(
            &cohort, &deaths, &pop, &std_pop, Stratifier::Insurer, Measure::Mortality, 2010..=2010,
        )
        .unwrap();
        let fonasa = table
            .rows
            .iter()
            .find(|r| r.stratum == Stratum::Insurer(InsurerClass::Fonasa))
            .unwrap();
        assert_eq!(fonasa.cases, 1);
        let missing = table.missing_insurer_pct.get(&2010).copied().unwrap();
        assert!((missing - 50.0).abs() < 1e-12, "2 of 4 deaths unrecoverable");
    }

    #[test]
    fn missing_share_reproduces_a_fixed_proportion_fixture() {
        use chrono::NaiveDate;
        // 1000 deaths in one year, 107 of them unlinkable: missing = 10.7%
        let cohort: Vec<PatientTimeline> = (0..893)
            .map(|i| {
                timeline(
                    &format!("L{i:04}"),
                    2012,
                    55,
                    RegionCode::Rm,
                    Insurer::Fonasa(FonasaSegment::B),
                )
            })
            .collect();
        let mut deaths = Vec::new();
        for i in 0..1000 {
            let id = if i < 893 {
                Some(PersonId::new(format!("L{i:04}")).unwrap())
            } else {
                None
            };
            deaths.push(DeathRecord {
                id,
                birth_date: NaiveDate::from_ymd_opt(1950, 1, 1).unwrap(),
                death_date: NaiveDate::from_ymd_opt(2012, 6, 15).unwrap(),
                sex: Sex::Female,
                region: RegionCode::Rm,
                cause_code: "C509".parse().unwrap(),
            });
        }
        let pop = flat_population(2012..=2012, 50_000);
        let std_pop = StandardPopulation::world_standard();
        let table = stratified_rates(
            &cohort, &deaths, &pop, &std_pop, Stratifier::Insurer, Measure::Mortality, 2012..=2012,
        )
        .unwrap();
        let missing = table.missing_insurer_pct.get(&2012).copied().unwrap();
        assert!((missing - 10.7).abs() < 1e-9, "{missing}");
    }

    #[test]
    fn age_band_layout_emits_one_row_per_year_and_band() {
        let cohort = vec![timeline("P1", 2010, 45, RegionCode::Rm, Insurer::Isapre)];
        let pop = flat_population(2010..=2011, 10_000);
        let std_pop = StandardPopulation::world_standard();
        let table = stratified_rates(
            &cohort, &[], &pop, &std_pop, Stratifier::AgeBand, Measure::Incidence, 2010..=2011,
        )
        .unwrap();
        let text = write_rate_table(&table);
        // header + 2 years x 15 bands
        assert_eq!(text.lines().count(), 1 + 2 * 15);
        assert!(text.starts_with("year,age_band,rate\n"));
        assert!(text.contains("2010,45-49,10.0"));
    }

    proptest! {
        #[test]
        fn cfr_is_scale_invariant(m in 0.1f64..100.0, i in 0.1f64..100.0, k in 0.01f64..50.0) {
            let a: f64 = case_fatality_rate(m, i).unwrap();
            let b: f64 = case_fatality_rate(k * m, k * i).unwrap();
            prop_assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        }

        #[test]
        fn adding_a_case_never_decreases_crude_rate(cases in 0u64..10_000, pop in 1u64..10_000_000) {
            let before: f64 = crude_rate(cases, pop).unwrap();
            let after: f64 = crude_rate(cases + 1, pop).unwrap();
            prop_assert!(after > before);
        }

        #[test]
        fn national_cases_equal_sum_of_regional_cases(seed in 0u64..500) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let cohort: Vec<PatientTimeline> = (0..rng.random_range(1..60))
                .map(|i| {
                    let region = RegionCode::ALL[rng.random_range(0..16)];
                    timeline(&format!("P{i}"), 2010, rng.random_range(20..90), region, Insurer::Isapre)
                })
                .collect();
            let pop = flat_population(2010..=2010, 5_000);
            let std_pop = StandardPopulation::world_standard();
            let national = stratified_rates(
                &cohort, &[], &pop, &std_pop, Stratifier::Year, Measure::Incidence, 2010..=2010,
            ).unwrap();
            let regional = stratified_rates(
                &cohort, &[], &pop, &std_pop, Stratifier::Region, Measure::Incidence, 2010..=2010,
            ).unwrap();
            let total: u64 = regional.rows.iter().map(|r| r.cases).sum();
            prop_assert_eq!(national.rows[0].cases, total);
        }

        #[test]
        fn standardization_identity_when_population_matches_standard(
            seed in 0u64..500, scale in 1u64..40,
        ) {
            use rand::{Rng, SeedableRng};
            let std_pop = StandardPopulation::world_standard();
            let bands = default_age_bands();
            // population exactly proportional to the standard weights
            let total = 200_000 * scale;
            let mut pop = PopulationTable::new();
            for (band, w) in std_pop.weights().iter().enumerate() {
                pop.insert(2010, Stratum::National, band, (w * total as f64).round() as u64);
            }
            let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
            let cohort: Vec<PatientTimeline> = (0..rng.random_range(1..80))
                .map(|i| timeline(&format!("P{i}"), 2010, rng.random_range(0..100), RegionCode::Rm, Insurer::Isapre))
                .collect();
            let table = stratified_rates(
                &cohort, &[], &pop, &std_pop, Stratifier::Year, Measure::Incidence, 2010..=2010,
            ).unwrap();
            let row = &table.rows[0];
            let (crude, adjusted) = (row.crude.unwrap(), row.adjusted.unwrap());
            prop_assert!((crude - adjusted).abs() < 1e-9, "crude {crude} adjusted {adjusted}");
            let _ = bands;
        }
    }
}
