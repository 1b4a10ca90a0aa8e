//! Monthly event tables, the Kaplan-Meier product-limit estimator with
//! Greenwood confidence intervals, and the k-sample log-rank test.

use crate::cohort::{EndKind, PatientTimeline};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::chi_square_sf;

/// One month of follow-up: subjects leaving observation split into observed
/// events and censorings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventRow {
    pub month: u32,
    pub removed: u64,
    pub observed: u64,
    pub censored: u64,
    pub at_risk: u64,
}

/// Complete monthly event table over `0..=horizon`. The final row
/// administratively censors everyone still under observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventTable {
    pub rows: Vec<EventRow>,
    pub horizon: u32,
}

impl EventTable {
    /// Check the structural invariants: contiguous months, removed =
    /// observed + censored, and the at-risk recursion.
    pub fn validate(&self) -> Result<()> {
        if self.rows.len() != self.horizon as usize + 1 {
            return Err(Error::InvalidEventTable(format!(
                "expected {} rows for horizon {}, got {}",
                self.horizon + 1,
                self.horizon,
                self.rows.len()
            )));
        }
        for (i, row) in self.rows.iter().enumerate() {
            if row.month != i as u32 {
                return Err(Error::InvalidEventTable(format!(
                    "row {i} has month {}",
                    row.month
                )));
            }
            if row.removed != row.observed + row.censored {
                return Err(Error::InvalidEventTable(format!(
                    "month {}: removed {} != observed {} + censored {}",
                    row.month, row.removed, row.observed, row.censored
                )));
            }
            if row.removed > row.at_risk {
                return Err(Error::InvalidEventTable(format!(
                    "month {}: removed {} exceeds at-risk {}",
                    row.month, row.removed, row.at_risk
                )));
            }
            if i + 1 < self.rows.len() {
                let next = &self.rows[i + 1];
                if next.at_risk != row.at_risk - row.removed {
                    return Err(Error::InvalidEventTable(format!(
                        "month {}: at-risk {} does not equal previous {} - removed {}",
                        next.month, next.at_risk, row.at_risk, row.removed
                    )));
                }
            }
        }
        if let Some(last) = self.rows.last() {
            if last.removed != last.at_risk {
                return Err(Error::InvalidEventTable(format!(
                    "final month must remove everyone still at risk, got {} of {}",
                    last.removed, last.at_risk
                )));
            }
        }
        Ok(())
    }

    pub fn initial_at_risk(&self) -> u64 {
        self.rows.first().map_or(0, |r| r.at_risk)
    }

    pub fn total_observed(&self) -> u64 {
        self.rows.iter().map(|r| r.observed).sum()
    }
}

/// Build the monthly event table from (survival months, event) pairs.
/// Subjects still under observation past the horizon are administratively
/// censored there, as is everything not yet resolved in the final month.
pub fn event_table_from_durations(
    durations: impl IntoIterator<Item = (u32, bool)>,
    horizon: u32,
) -> Result<EventTable> {
    if horizon < 1 {
        return Err(Error::Config("event table horizon must be >= 1".into()));
    }
    let h = horizon as usize;
    let mut observed = vec![0u64; h + 1];
    let mut censored = vec![0u64; h + 1];
    let mut beyond = 0u64; // subjects whose time exceeds the horizon
    let mut n = 0u64;
    for (time, event) in durations {
        n += 1;
        let t = time as usize;
        if t > h {
            beyond += 1;
        } else if event {
            observed[t] += 1;
        } else {
            censored[t] += 1;
        }
    }
    // everyone unresolved by the final month is censored there
    censored[h] += beyond;
    let mut rows = Vec::with_capacity(h + 1);
    let mut at_risk = n;
    for month in 0..=h {
        let (obs, mut cens) = (observed[month], censored[month]);
        if month == h {
            // administrative close-out: observed deaths at the horizon stand,
            // the rest of the risk set is censored
            cens = at_risk - obs;
        }
        rows.push(EventRow {
            month: month as u32,
            removed: obs + cens,
            observed: obs,
            censored: cens,
            at_risk,
        });
        at_risk -= obs + cens;
    }
    let table = EventTable {
        rows,
        horizon,
    };
    table.validate()?;
    Ok(table)
}

/// Event table for the survival-eligible part of a cohort (imputed and
/// date-conflict timelines are excluded).
pub fn build_event_table(timelines: &[PatientTimeline], horizon: u32) -> Result<EventTable> {
    event_table_from_durations(
        timelines.iter().filter(|t| t.survival_eligible()).map(|t| {
            (
                t.survival_months(),
                t.end_kind == EndKind::Death,
            )
        }),
        horizon,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint<T> {
    pub month: u32,
    pub survival: T,
    pub variance: T,
    pub ci_low: T,
    pub ci_high: T,
}

/// Product-limit estimate with Greenwood variance and symmetric 95%
/// confidence limits clamped to [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct SurvivalCurve<T> {
    pub points: Vec<CurvePoint<T>>,
}

impl<T: Scalar> SurvivalCurve<T> {
    /// Survival through month `t` inclusive (the month-`t` row's factor is in
    /// the product).
    pub fn survival_at(&self, month: u32) -> Option<T> {
        self.points
            .iter()
            .find(|p| p.month == month)
            .map(|p| p.survival)
    }

    pub fn half_width_at(&self, month: u32) -> Option<T> {
        self.points
            .iter()
            .find(|p| p.month == month)
            .map(|p| (p.ci_high - p.ci_low) / T::from_f64_lossy(2.0))
    }
}

const Z_95: f64 = 1.96;

/// Kaplan-Meier over a monthly event table. Within a month, deaths precede
/// censorings: both draw on the same risk set. Once survival reaches zero
/// the variance is taken as zero.
pub fn kaplan_meier<T: Scalar>(table: &EventTable) -> Result<SurvivalCurve<T>> {
    table.validate()?;
    let mut survival = T::one();
    let mut greenwood_sum = T::zero();
    let mut points = Vec::with_capacity(table.rows.len());
    let z = T::from_f64_lossy(Z_95);
    for row in &table.rows {
        if row.at_risk > 0 && row.observed > 0 {
            let n = T::from_count(row.at_risk);
            let d = T::from_count(row.observed);
            survival = survival * (T::one() - d / n);
            if row.observed < row.at_risk {
                greenwood_sum = greenwood_sum + d / (n * (n - d));
            }
        }
        let variance = if survival > T::zero() {
            survival * survival * greenwood_sum
        } else {
            T::zero()
        };
        let half = z * variance.sqrt();
        points.push(CurvePoint {
            month: row.month,
            survival,
            variance,
            ci_low: (survival - half).max(T::zero()),
            ci_high: (survival + half).min(T::one()),
        });
    }
    Ok(SurvivalCurve { points })
}

/// Log-rank comparison of k groups on aligned monthly grids.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogRankResult<T> {
    pub chi_square: T,
    pub dof: u32,
    pub p_value: T,
}

/// The k-sample log-rank test: per month, expected deaths split across
/// groups in proportion to their at-risk share; the statistic sums
/// (observed - expected)^2 / expected over groups, chi-square with k-1
/// degrees of freedom.
pub fn log_rank_test<T: Scalar>(tables: &[&EventTable]) -> Result<LogRankResult<T>> {
    if tables.len() < 2 {
        return Err(Error::DegenerateGroup(
            "log-rank needs at least two groups".into(),
        ));
    }
    let horizon = tables[0].horizon;
    for (i, t) in tables.iter().enumerate() {
        t.validate()?;
        if t.horizon != horizon {
            return Err(Error::DegenerateGroup(format!(
                "group {i} horizon {} does not match {horizon}",
                t.horizon
            )));
        }
        if t.initial_at_risk() == 0 {
            return Err(Error::DegenerateGroup(format!("group {i} has no subjects")));
        }
    }
    let k = tables.len();
    let mut observed = vec![T::zero(); k];
    let mut expected = vec![T::zero(); k];
    for month in 0..=horizon as usize {
        let total_deaths: u64 = tables.iter().map(|t| t.rows[month].observed).sum();
        let total_at_risk: u64 = tables.iter().map(|t| t.rows[month].at_risk).sum();
        if total_deaths == 0 || total_at_risk == 0 {
            continue;
        }
        let d = T::from_count(total_deaths);
        let n = T::from_count(total_at_risk);
        for (g, t) in tables.iter().enumerate() {
            let row = &t.rows[month];
            observed[g] = observed[g] + T::from_count(row.observed);
            expected[g] = expected[g] + d * T::from_count(row.at_risk) / n;
        }
    }
    let mut chi_square = T::zero();
    for g in 0..k {
        if expected[g] > T::zero() {
            let diff = observed[g] - expected[g];
            chi_square = chi_square + diff * diff / expected[g];
        } else if observed[g] > T::zero() {
            return Err(Error::Computation(format!(
                "group {g} observed deaths with zero expectation"
            )));
        }
    }
    let dof = (k - 1) as u32;
    let p_value = chi_square_sf(chi_square, dof)?;
    Ok(LogRankResult {
        chi_square,
        dof,
        p_value,
    })
}

pub const EVENT_TABLE_HEADER: &str = "time,removed,observed,censored,at_risk";

/// Serialize an event table; integer counts round-trip bit-exactly.
pub fn write_event_table(table: &EventTable) -> String {
    let mut out = String::from(EVENT_TABLE_HEADER);
    out.push('\n');
    for r in &table.rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.month, r.removed, r.observed, r.censored, r.at_risk
        ));
    }
    out
}

pub fn parse_event_table(text: &str) -> Result<EventTable> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == EVENT_TABLE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("event table must start with `{EVENT_TABLE_HEADER}`"),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, raw) in lines.enumerate() {
        if raw.trim().is_empty() {
            continue;
        }
        let err = |message: String| Error::Parse {
            line: idx + 2,
            message,
        };
        let f: Vec<&str> = raw.split(',').collect();
        if f.len() != 5 {
            return Err(err(format!("expected 5 fields, got {}", f.len())));
        }
        let num = |s: &str| -> Result<u64> {
            s.trim().parse().map_err(|_| err(format!("bad count `{s}`")))
        };
        rows.push(EventRow {
            month: num(f[0])? as u32,
            removed: num(f[1])?,
            observed: num(f[2])?,
            censored: num(f[3])?,
            at_risk: num(f[4])?,
        });
    }
    let horizon = rows.last().map_or(0, |r| r.month);
    let table = EventTable { rows, horizon };
    table.validate()?;
    Ok(table)
}

/// Serialize a survival curve as plot-ready rows.
pub fn write_survival_curve<T: Scalar>(curve: &SurvivalCurve<T>) -> String {
    let mut out = String::from("t,S,ci_low,ci_high\n");
    for p in &curve.points {
        out.push_str(&format!(
            "{},{:.6},{:.6},{:.6}\n",
            p.month,
            p.survival.to_f64().unwrap_or(f64::NAN),
            p.ci_low.to_f64().unwrap_or(f64::NAN),
            p.ci_high.to_f64().unwrap_or(f64::NAN)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toy_table() -> EventTable {
        // 4 subjects: death@1, death@2, censor@2, death@3
        event_table_from_durations(
            vec![(1, true), (2, true), (2, false), (3, true)],
            3,
        )
        .unwrap()
    }

    #[test]
    fn toy_event_table_rows_match_hand_construction() {
        let t = toy_table();
        let row = |m: usize| t.rows[m];
        assert_eq!(row(0), EventRow { month: 0, removed: 0, observed: 0, censored: 0, at_risk: 4 });
        assert_eq!(row(1), EventRow { month: 1, removed: 1, observed: 1, censored: 0, at_risk: 4 });
        assert_eq!(row(2), EventRow { month: 2, removed: 2, observed: 1, censored: 1, at_risk: 3 });
        assert_eq!(row(3), EventRow { month: 3, removed: 1, observed: 1, censored: 0, at_risk: 1 });
    }

    #[test]
    fn toy_km_matches_hand_product() {
        let curve: SurvivalCurve<f64> = kaplan_meier(&toy_table()).unwrap();
        assert_eq!(curve.survival_at(0), Some(1.0));
        assert_eq!(curve.survival_at(1), Some(0.75));
        assert_eq!(curve.survival_at(2), Some(0.5));
        assert_eq!(curve.survival_at(3), Some(0.0));
        // zero survival ends with zero variance and a degenerate interval
        let last = curve.points.last().unwrap();
        assert_eq!(last.variance, 0.0);
        assert_eq!((last.ci_low, last.ci_high), (0.0, 0.0));
    }

    #[test]
    fn empty_cohort_gives_all_zero_table_and_unit_survival() {
        let t = event_table_from_durations(Vec::<(u32, bool)>::new(), 5).unwrap();
        assert!(t.rows.iter().all(|r| r.at_risk == 0 && r.removed == 0));
        let curve: SurvivalCurve<f64> = kaplan_meier(&t).unwrap();
        assert!(curve.points.iter().all(|p| p.survival == 1.0 && p.variance == 0.0));
    }

    #[test]
    fn no_events_means_survival_stays_one() {
        let t = event_table_from_durations(vec![(2, false), (4, false), (9, false)], 6).unwrap();
        let curve: SurvivalCurve<f64> = kaplan_meier(&t).unwrap();
        assert!(curve.points.iter().all(|p| p.survival == 1.0 && p.variance == 0.0));
    }

    #[test]
    fn subjects_beyond_horizon_are_administratively_censored() {
        let t = event_table_from_durations(vec![(10, true), (99, false), (120, true)], 12).unwrap();
        let last = t.rows.last().unwrap();
        assert_eq!(last.month, 12);
        assert_eq!(last.at_risk, 2);
        assert_eq!(last.observed, 0);
        assert_eq!(last.censored, 2);
    }

    #[test]
    fn zero_horizon_is_rejected() {
        assert!(event_table_from_durations(vec![(0, true)], 0).is_err());
    }

    #[test]
    fn single_precision_instantiation_matches_double() {
        let table = toy_table();
        let c32: SurvivalCurve<f32> = kaplan_meier(&table).unwrap();
        let c64: SurvivalCurve<f64> = kaplan_meier(&table).unwrap();
        for (a, b) in c32.points.iter().zip(&c64.points) {
            assert!((f64::from(a.survival) - b.survival).abs() < 1e-6);
            assert!((f64::from(a.ci_low) - b.ci_low).abs() < 1e-5);
        }
        let r32: LogRankResult<f32> = log_rank_test(&[&table, &table]).unwrap();
        assert!(r32.chi_square.abs() < 1e-6);
    }

    #[test]
    fn validation_rejects_broken_tables() {
        let mut t = toy_table();
        t.rows[1].observed += 1;
        assert!(t.validate().is_err());
        assert!(kaplan_meier::<f64>(&t).is_err());

        let mut t = toy_table();
        t.rows[2].at_risk += 1;
        assert!(t.validate().is_err());
    }

    #[test]
    fn identical_groups_give_zero_statistic() {
        let a = toy_table();
        let b = toy_table();
        let r: LogRankResult<f64> = log_rank_test(&[&a, &b]).unwrap();
        assert!(r.chi_square.abs() < 1e-12);
        assert_eq!(r.dof, 1);
        assert!((r.p_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn log_rank_matches_exhaustive_hand_computation() {
        // group A: death@1, death@2, censor@3; group B: censor@1, death@3, death@3
        let a = event_table_from_durations(vec![(1, true), (2, true), (3, false)], 3).unwrap();
        let b = event_table_from_durations(vec![(1, false), (3, true), (3, true)], 3).unwrap();
        // hand sums (months with deaths):
        //   m=1: d=1, nA=3, nB=3 -> eA = 1*3/6 = 0.5, eB = 0.5
        //   m=2: d=1, nA=2, nB=2 -> eA = 0.5, eB = 0.5
        //   m=3: d=2, nA=1, nB=2 -> eA = 2/3, eB = 4/3
        // OA = 2, EA = 5/3; OB = 2, EB = 7/3
        // chi2 = (2-5/3)^2/(5/3) + (2-7/3)^2/(7/3) = (1/9)/(5/3) + (1/9)/(7/3)
        let expect = (1.0 / 9.0) / (5.0 / 3.0) + (1.0 / 9.0) / (7.0 / 3.0);
        let r: LogRankResult<f64> = log_rank_test(&[&a, &b]).unwrap();
        assert!((r.chi_square - expect).abs() < 1e-12, "{} vs {expect}", r.chi_square);
    }

    #[test]
    fn degenerate_groups_are_rejected() {
        let a = toy_table();
        let empty = event_table_from_durations(Vec::<(u32, bool)>::new(), 3).unwrap();
        assert!(log_rank_test::<f64>(&[&a]).is_err());
        assert!(log_rank_test::<f64>(&[&a, &empty]).is_err());
        let other_horizon = event_table_from_durations(vec![(1, true)], 5).unwrap();
        assert!(log_rank_test::<f64>(&[&a, &other_horizon]).is_err());
    }

    #[test]
    fn event_table_csv_round_trips() {
        let t = toy_table();
        let text = write_event_table(&t);
        let again = parse_event_table(&text).unwrap();
        assert_eq!(again, t);
        let c1: SurvivalCurve<f64> = kaplan_meier(&t).unwrap();
        let c2: SurvivalCurve<f64> = kaplan_meier(&again).unwrap();
        assert_eq!(c1, c2);
    }

    proptest! {
        // Brute-force oracle: recompute S month by month from raw durations,
        // independent of the event-table path.
        #[test]
        fn km_equals_brute_force_product_on_small_cohorts(
            durations in proptest::collection::vec((0u32..8, any::<bool>()), 1..10)
        ) {
            let horizon = 8u32;
            let table = event_table_from_durations(durations.clone(), horizon).unwrap();
            let curve: SurvivalCurve<f64> = kaplan_meier(&table).unwrap();
            let mut s = 1.0f64;
            for month in 0..=horizon {
                let at_risk = durations.iter().filter(|(t, _)| *t >= month).count() as f64;
                let deaths = durations
                    .iter()
                    .filter(|(t, e)| *t == month && *e)
                    .count() as f64;
                if at_risk > 0.0 && deaths > 0.0 {
                    s *= 1.0 - deaths / at_risk;
                }
                prop_assert_eq!(curve.survival_at(month).unwrap(), s);
            }
        }

        #[test]
        fn censoring_only_months_leave_survival_unchanged(
            base in proptest::collection::vec((0u32..6, any::<bool>()), 1..12),
        ) {
            let horizon = 6u32;
            let table = event_table_from_durations(base, horizon).unwrap();
            let curve: SurvivalCurve<f64> = kaplan_meier(&table).unwrap();
            for m in 1..=horizon as usize {
                if table.rows[m].observed == 0 {
                    prop_assert_eq!(curve.points[m].survival, curve.points[m - 1].survival);
                    prop_assert_eq!(curve.points[m].variance, curve.points[m - 1].variance);
                }
            }
        }

        #[test]
        fn integer_scaling_preserves_survival_and_shrinks_variance(
            durations in proptest::collection::vec((0u32..6, any::<bool>()), 2..10),
            k in 2u64..6,
        ) {
            let horizon = 6u32;
            let t1 = event_table_from_durations(durations.clone(), horizon).unwrap();
            let mut scaled_rows = Vec::new();
            for r in &t1.rows {
                scaled_rows.push(EventRow {
                    month: r.month,
                    removed: r.removed * k,
                    observed: r.observed * k,
                    censored: r.censored * k,
                    at_risk: r.at_risk * k,
                });
            }
            let t2 = EventTable { rows: scaled_rows, horizon };
            t2.validate().unwrap();
            let c1: SurvivalCurve<f64> = kaplan_meier(&t1).unwrap();
            let c2: SurvivalCurve<f64> = kaplan_meier(&t2).unwrap();
            for (p1, p2) in c1.points.iter().zip(&c2.points) {
                prop_assert!((p1.survival - p2.survival).abs() < 1e-12);
                prop_assert!(p2.variance <= p1.variance + 1e-12);
            }
        }

        #[test]
        fn survival_is_monotone_and_cis_bracket(
            durations in proptest::collection::vec((0u32..10, any::<bool>()), 0..40)
        ) {
            let table = event_table_from_durations(durations, 10).unwrap();
            let curve: SurvivalCurve<f64> = kaplan_meier(&table).unwrap();
            let mut prev = 1.0f64;
            for p in &curve.points {
                prop_assert!(p.survival <= prev + 1e-12);
                prop_assert!((0.0..=1.0).contains(&p.survival));
                prop_assert!(p.ci_low <= p.survival && p.survival <= p.ci_high);
                prop_assert!(p.ci_low >= 0.0 && p.ci_high <= 1.0);
                prev = p.survival;
            }
        }
    }
}
