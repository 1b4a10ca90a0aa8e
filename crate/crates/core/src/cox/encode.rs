//! Covariate encoding: timelines expand into a fixed-order design matrix of
//! insurer, segment and region dummies plus the continuous year and
//! normalized age terms.

use crate::cohort::{EndKind, PatientTimeline};
use crate::error::{Error, Result};
use crate::registry::{FonasaSegment, Insurer, RegionCode};
use crate::scalar::Scalar;

use super::{CovariateProfile, ProfileRegion};

const MAX_AGE: f64 = 100.0;

/// One encodable column of the standard design.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Column {
    Fonasa,
    Isapre,
    ArmedForces,
    Segment(FonasaSegment),
    Region(RegionCode),
    DiagnosisYear,
    Age,
    AgeSquared,
}

impl Column {
    fn name(self) -> String {
        match self {
            Column::Fonasa => "fonasa".into(),
            Column::Isapre => "isapre".into(),
            Column::ArmedForces => "armed_forces".into(),
            Column::Segment(s) => format!("fonasa_{}", s.letter().to_ascii_lowercase()),
            Column::Region(r) => format!("region_{}", r.token().to_ascii_lowercase()),
            Column::DiagnosisYear => "diagnosis_year".into(),
            Column::Age => "age".into(),
            Column::AgeSquared => "age_squared".into(),
        }
    }

    fn of_timeline(self, t: &PatientTimeline) -> f64 {
        let age = (t.age_at_diagnosis as f64 / MAX_AGE).min(1.0);
        match self {
            Column::Fonasa => matches!(t.insurer, Insurer::Fonasa(_)) as u8 as f64,
            Column::Isapre => (t.insurer == Insurer::Isapre) as u8 as f64,
            Column::ArmedForces => (t.insurer == Insurer::ArmedForces) as u8 as f64,
            Column::Segment(s) => (t.insurer == Insurer::Fonasa(s)) as u8 as f64,
            Column::Region(r) => (t.region == r) as u8 as f64,
            Column::DiagnosisYear => t.diagnosis_month.year() as f64,
            Column::Age => age,
            Column::AgeSquared => age * age,
        }
    }

    /// Value for a raw profile field, `None` when the field is unset.
    fn of_profile(self, p: &CovariateProfile) -> Option<f64> {
        match self {
            Column::Fonasa => p
                .insurer
                .map(|i| matches!(i, Insurer::Fonasa(_)) as u8 as f64),
            Column::Isapre => p.insurer.map(|i| (i == Insurer::Isapre) as u8 as f64),
            Column::ArmedForces => p.insurer.map(|i| (i == Insurer::ArmedForces) as u8 as f64),
            Column::Segment(s) => p.insurer.map(|i| (i == Insurer::Fonasa(s)) as u8 as f64),
            Column::Region(r) => p.region.map(|pr| match pr {
                ProfileRegion::Region(code) => (code == r) as u8 as f64,
                ProfileRegion::Other => 0.0,
            }),
            Column::DiagnosisYear => p.year,
            Column::Age => p.age.map(|a| (a / MAX_AGE).min(1.0)),
            Column::AgeSquared => p.age.map(|a| {
                let n = (a / MAX_AGE).min(1.0);
                n * n
            }),
        }
    }

    fn all() -> Vec<Column> {
        let mut cols = vec![Column::Fonasa, Column::Isapre, Column::ArmedForces];
        cols.extend(FonasaSegment::ALL.into_iter().map(Column::Segment));
        cols.extend(RegionCode::ALL.into_iter().map(Column::Region));
        cols.push(Column::DiagnosisYear);
        cols.push(Column::Age);
        cols.push(Column::AgeSquared);
        cols
    }

    fn by_name(name: &str) -> Option<Column> {
        Column::all().into_iter().find(|c| c.name() == name)
    }
}

/// The covariate expansion: insurer dummies, FONASA segment dummies, region
/// dummies, diagnosis year, normalized age and squared normalized age, 26
/// columns in a fixed order.
#[derive(Debug, Clone)]
pub struct CovariateSpec {
    columns: Vec<Column>,
}

impl Default for CovariateSpec {
    fn default() -> Self {
        CovariateSpec::standard()
    }
}

impl CovariateSpec {
    pub fn standard() -> Self {
        CovariateSpec {
            columns: Column::all(),
        }
    }

    pub fn names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name()).collect()
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }
}

/// Raw-field fallbacks recorded at encode time: medians for the continuous
/// fields and modal categories for the dummy groups.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileDefaults {
    pub age: f64,
    pub year: f64,
    pub insurer: Insurer,
    pub region: RegionCode,
}

impl ProfileDefaults {
    fn fill(&self, p: &CovariateProfile) -> CovariateProfile {
        CovariateProfile {
            age: p.age.or(Some(self.age)),
            year: p.year.or(Some(self.year)),
            insurer: p.insurer.or(Some(self.insurer)),
            region: p.region.or(Some(ProfileRegion::Region(self.region))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DesignRow<T> {
    pub x: Vec<T>,
    /// Follow-up in whole months.
    pub time: u32,
    pub event: bool,
}

/// Design matrix with a fixed column order. Rows correspond one-to-one to
/// the survival-eligible timelines they were encoded from.
#[derive(Debug, Clone)]
pub struct DesignMatrix<T> {
    pub names: Vec<String>,
    pub rows: Vec<DesignRow<T>>,
    pub defaults: Option<ProfileDefaults>,
}

impl<T: Scalar> DesignMatrix<T> {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.names.len()
    }

    pub fn n_events(&self) -> usize {
        self.rows.iter().filter(|r| r.event).count()
    }

    /// Project onto a subset of columns (model-selection candidates).
    pub fn select_columns(&self, names: &[String]) -> Result<DesignMatrix<T>> {
        let indices: Vec<usize> = names
            .iter()
            .map(|n| {
                self.names.iter().position(|have| have == n).ok_or_else(|| {
                    Error::Encoding {
                        row: 0,
                        field: n.clone(),
                        message: "column not present in design matrix".into(),
                    }
                })
            })
            .collect::<Result<_>>()?;
        let rows = self
            .rows
            .iter()
            .map(|r| DesignRow {
                x: indices.iter().map(|&i| r.x[i]).collect(),
                time: r.time,
                event: r.event,
            })
            .collect();
        Ok(DesignMatrix {
            names: names.to_vec(),
            rows,
            defaults: self.defaults,
        })
    }

    /// Expand a profile into this matrix's column order. With
    /// `use_defaults`, unset fields fall back to the stored data medians and
    /// modes; otherwise unset fields are an error.
    pub(super) fn profile_vector_for(
        names: &[String],
        defaults: Option<&ProfileDefaults>,
        profile: &CovariateProfile,
    ) -> Result<Vec<T>> {
        let filled = match defaults {
            Some(d) => d.fill(profile),
            None => *profile,
        };
        names
            .iter()
            .map(|name| {
                let col = Column::by_name(name).ok_or_else(|| {
                    Error::Profile(format!("column `{name}` has no profile encoding"))
                })?;
                col.of_profile(&filled)
                    .map(T::from_f64_lossy)
                    .ok_or_else(|| {
                        Error::Profile(format!(
                            "profile leaves `{name}` unset and the model has no data medians"
                        ))
                    })
            })
            .collect()
    }
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = values.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn mode<K: Ord + Copy>(items: impl Iterator<Item = K>) -> Option<K> {
    let mut counts = std::collections::BTreeMap::new();
    for k in items {
        *counts.entry(k).or_insert(0usize) += 1;
    }
    counts
        .into_iter()
        .max_by_key(|(_, c)| *c)
        .map(|(k, _)| k)
}

/// Encode the survival-eligible timelines (imputed and date-conflict rows
/// are skipped) into a design matrix, recording profile defaults from the
/// encoded data.
pub fn encode<T: Scalar>(
    timelines: &[PatientTimeline],
    spec: &CovariateSpec,
) -> Result<DesignMatrix<T>> {
    let eligible: Vec<&PatientTimeline> = timelines
        .iter()
        .filter(|t| t.survival_eligible())
        .collect();
    let rows: Vec<DesignRow<T>> = eligible
        .iter()
        .map(|t| DesignRow {
            x: spec
                .columns
                .iter()
                .map(|c| T::from_f64_lossy(c.of_timeline(t)))
                .collect(),
            time: t.survival_months(),
            event: t.end_kind == EndKind::Death,
        })
        .collect();
    let defaults = if eligible.is_empty() {
        None
    } else {
        let insurer = mode(eligible.iter().map(|t| t.insurer)).unwrap();
        let region = mode(eligible.iter().map(|t| t.region)).unwrap();
        Some(ProfileDefaults {
            age: median(eligible.iter().map(|t| t.age_at_diagnosis as f64).collect()),
            year: median(
                eligible
                    .iter()
                    .map(|t| t.diagnosis_month.year() as f64)
                    .collect(),
            ),
            insurer,
            region,
        })
    };
    Ok(DesignMatrix {
        names: spec.names(),
        rows,
        defaults,
    })
}
