//! Age bands, population denominators, and the standard population used for
//! direct age standardization.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::registry::{Insurer, RegionCode};
use crate::scalar::Scalar;

/// Closed age interval `[lower, upper]` in years; `upper = None` is open.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AgeBand {
    pub lower: u32,
    pub upper: Option<u32>,
}

impl AgeBand {
    pub fn contains(&self, age: u32) -> bool {
        age >= self.lower && self.upper.is_none_or(|u| age <= u)
    }
}

impl fmt::Display for AgeBand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.upper {
            Some(u) => write!(f, "{}-{}", self.lower, u),
            None => write!(f, "{}+", self.lower),
        }
    }
}

impl FromStr for AgeBand {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(lower) = t.strip_suffix('+') {
            let lower = lower
                .parse()
                .map_err(|_| Error::Config(format!("bad age band `{s}`")))?;
            return Ok(AgeBand { lower, upper: None });
        }
        let (lo, hi) = t
            .split_once('-')
            .ok_or_else(|| Error::Config(format!("bad age band `{s}`")))?;
        let lower = lo
            .parse()
            .map_err(|_| Error::Config(format!("bad age band `{s}`")))?;
        let upper = hi
            .parse()
            .map_err(|_| Error::Config(format!("bad age band `{s}`")))?;
        Ok(AgeBand {
            lower,
            upper: Some(upper),
        })
    }
}

/// The default 15-band partition: 0-19, then 5-year bands to 80-84, then 85+.
pub fn default_age_bands() -> Vec<AgeBand> {
    let mut bands = vec![AgeBand {
        lower: 0,
        upper: Some(19),
    }];
    for lower in (20..85).step_by(5) {
        bands.push(AgeBand {
            lower,
            upper: Some(lower + 4),
        });
    }
    bands.push(AgeBand {
        lower: 85,
        upper: None,
    });
    bands
}

/// Index of the band containing `age`, for bands that partition [0, inf).
pub fn band_index(bands: &[AgeBand], age: u32) -> Option<usize> {
    bands.iter().position(|b| b.contains(age))
}

/// Insurance grouping used for stratified rates. Discharge-level FONASA
/// segments collapse into one public-system class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InsurerClass {
    Fonasa,
    Isapre,
    ArmedForces,
    NoInsurance,
    Unknown,
}

impl From<Insurer> for InsurerClass {
    fn from(i: Insurer) -> Self {
        match i {
            Insurer::Fonasa(_) => InsurerClass::Fonasa,
            Insurer::Isapre => InsurerClass::Isapre,
            Insurer::ArmedForces => InsurerClass::ArmedForces,
            Insurer::None => InsurerClass::NoInsurance,
            Insurer::Unknown => InsurerClass::Unknown,
        }
    }
}

impl InsurerClass {
    pub fn token(self) -> &'static str {
        match self {
            InsurerClass::Fonasa => "FONASA",
            InsurerClass::Isapre => "ISAPRE",
            InsurerClass::ArmedForces => "ARMED_FORCES",
            InsurerClass::NoInsurance => "NONE",
            InsurerClass::Unknown => "UNKNOWN",
        }
    }
}

impl FromStr for InsurerClass {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FONASA" => Ok(InsurerClass::Fonasa),
            "ISAPRE" => Ok(InsurerClass::Isapre),
            "ARMED_FORCES" => Ok(InsurerClass::ArmedForces),
            "NONE" => Ok(InsurerClass::NoInsurance),
            "UNKNOWN" => Ok(InsurerClass::Unknown),
            other => Err(Error::Config(format!("unknown insurer class `{other}`"))),
        }
    }
}

impl fmt::Display for InsurerClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// A population stratum: the whole country, one region, or one insurer class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stratum {
    National,
    Region(RegionCode),
    Insurer(InsurerClass),
}

impl Stratum {
    pub fn kind_token(&self) -> &'static str {
        match self {
            Stratum::National => "national",
            Stratum::Region(_) => "region",
            Stratum::Insurer(_) => "insurer",
        }
    }

    pub fn value_token(&self) -> String {
        match self {
            Stratum::National => String::new(),
            Stratum::Region(r) => r.token().to_string(),
            Stratum::Insurer(i) => i.token().to_string(),
        }
    }

    pub fn parse(kind: &str, value: &str) -> Result<Self> {
        match kind.trim().to_ascii_lowercase().as_str() {
            "national" => Ok(Stratum::National),
            "region" => Ok(Stratum::Region(value.parse()?)),
            "insurer" => Ok(Stratum::Insurer(value.parse()?)),
            other => Err(Error::Config(format!("unknown stratum kind `{other}`"))),
        }
    }
}

impl fmt::Display for Stratum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stratum::National => f.write_str("national"),
            Stratum::Region(r) => write!(f, "{r}"),
            Stratum::Insurer(i) => write!(f, "{i}"),
        }
    }
}

/// Female population counts per (year, stratum, age band).
#[derive(Debug, Clone, Default)]
pub struct PopulationTable {
    counts: BTreeMap<(i32, Stratum, usize), u64>,
    bands: Vec<AgeBand>,
}

pub const POPULATION_HEADER: &str = "year,stratum_kind,stratum,age_band,count";

impl PopulationTable {
    pub fn new() -> Self {
        PopulationTable {
            counts: BTreeMap::new(),
            bands: default_age_bands(),
        }
    }

    pub fn bands(&self) -> &[AgeBand] {
        &self.bands
    }

    pub fn insert(&mut self, year: i32, stratum: Stratum, band: usize, count: u64) {
        assert!(band < self.bands.len(), "band index out of range");
        *self.counts.entry((year, stratum, band)).or_insert(0) += count;
    }

    pub fn band_count(&self, year: i32, stratum: Stratum, band: usize) -> Option<u64> {
        self.counts.get(&(year, stratum, band)).copied()
    }

    /// Total population of a (year, stratum); every band must be present.
    pub fn total(&self, year: i32, stratum: Stratum) -> Result<u64> {
        let mut sum = 0u64;
        for band in 0..self.bands.len() {
            sum += self.band_count(year, stratum, band).ok_or_else(|| {
                Error::Coverage(format!(
                    "population missing for year {year}, stratum {stratum}, band {}",
                    self.bands[band]
                ))
            })?;
        }
        Ok(sum)
    }

    pub fn has_stratum(&self, year: i32, stratum: Stratum) -> bool {
        (0..self.bands.len()).all(|b| self.counts.contains_key(&(year, stratum, b)))
    }

    /// Parse `year,stratum_kind,stratum,age_band,count` rows.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == POPULATION_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!("population file must start with `{POPULATION_HEADER}`"),
                })
            }
        }
        let mut table = PopulationTable::new();
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
            let year: i32 = f[0]
                .trim()
                .parse()
                .map_err(|_| err(format!("bad year `{}`", f[0])))?;
            let stratum = Stratum::parse(f[1], f[2]).map_err(|e| err(e.to_string()))?;
            let band: AgeBand = f[3].parse().map_err(|e: Error| err(e.to_string()))?;
            let band_idx = table
                .bands
                .iter()
                .position(|b| *b == band)
                .ok_or_else(|| err(format!("age band `{band}` is not a default band")))?;
            let count: u64 = f[4]
                .trim()
                .parse()
                .map_err(|_| err(format!("bad count `{}`", f[4])))?;
            table.insert(year, stratum, band_idx, count);
        }
        Ok(table)
    }

    pub fn write(&self) -> String {
        let mut out = String::from(POPULATION_HEADER);
        out.push('\n');
        for ((year, stratum, band), count) in &self.counts {
            out.push_str(&format!(
                "{year},{},{},{},{count}\n",
                stratum.kind_token(),
                stratum.value_token(),
                self.bands[*band]
            ));
        }
        out
    }
}

/// Standard population weights per age band, normalized to sum to one.
#[derive(Debug, Clone)]
pub struct StandardPopulation<T> {
    weights: Vec<T>,
}

pub const STANDARD_POPULATION_HEADER: &str = "age_band,weight";

impl<T: Scalar> StandardPopulation<T> {
    /// Build from raw (non-negative) weights; they are normalized here.
    pub fn new(raw: Vec<T>) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::Config("standard population has no bands".into()));
        }
        if raw.iter().any(|w| *w < T::zero() || !w.is_finite()) {
            return Err(Error::Config(
                "standard population weights must be non-negative".into(),
            ));
        }
        let sum: T = raw.iter().copied().sum();
        if sum <= T::zero() {
            return Err(Error::Config(
                "standard population weights sum to zero".into(),
            ));
        }
        Ok(StandardPopulation {
            weights: raw.into_iter().map(|w| w / sum).collect(),
        })
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Parse `age_band,weight` rows ordered to match the default bands.
    pub fn parse(text: &str, bands: &[AgeBand]) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == STANDARD_POPULATION_HEADER => {}
            _ => {
                return Err(Error::Parse {
                    line: 1,
                    message: format!(
                        "standard population file must start with `{STANDARD_POPULATION_HEADER}`"
                    ),
                })
            }
        }
        let mut weights: Vec<Option<T>> = vec![None; bands.len()];
        for (idx, raw) in lines.enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: idx + 2,
                message,
            };
            let (band_s, weight_s) = raw
                .split_once(',')
                .ok_or_else(|| err("expected `age_band,weight`".into()))?;
            let band: AgeBand = band_s.parse().map_err(|e: Error| err(e.to_string()))?;
            let pos = bands
                .iter()
                .position(|b| *b == band)
                .ok_or_else(|| err(format!("unknown age band `{band}`")))?;
            let w: f64 = weight_s
                .trim()
                .parse()
                .map_err(|_| err(format!("bad weight `{weight_s}`")))?;
            weights[pos] = Some(T::from_f64_lossy(w));
        }
        let missing: Vec<String> = bands
            .iter()
            .zip(&weights)
            .filter(|(_, w)| w.is_none())
            .map(|(b, _)| b.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::Coverage(format!(
                "standard population missing bands: {}",
                missing.join(", ")
            )));
        }
        StandardPopulation::new(weights.into_iter().map(Option::unwrap).collect())
    }
}

const DEFAULT_STANDARD: &str = include_str!("../../../config/standard_population.csv");

impl StandardPopulation<f64> {
    /// The world standard population shipped as config (collapsed to the
    /// default bands); swap the file to use a different standard.
    pub fn world_standard() -> StandardPopulation<f64> {
        StandardPopulation::parse(DEFAULT_STANDARD, &default_age_bands())
            .expect("bundled standard population parses")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bands_partition_all_ages() {
        let bands = default_age_bands();
        assert_eq!(bands.len(), 15);
        for age in 0..130u32 {
            let hits = bands.iter().filter(|b| b.contains(age)).count();
            assert_eq!(hits, 1, "age {age}");
        }
        assert_eq!(band_index(&bands, 0), Some(0));
        assert_eq!(band_index(&bands, 19), Some(0));
        assert_eq!(band_index(&bands, 20), Some(1));
        assert_eq!(band_index(&bands, 84), Some(13));
        assert_eq!(band_index(&bands, 85), Some(14));
    }

    #[test]
    fn age_band_tokens_round_trip() {
        for band in default_age_bands() {
            assert_eq!(band.to_string().parse::<AgeBand>().unwrap(), band);
        }
        assert!("x-y".parse::<AgeBand>().is_err());
    }

    #[test]
    fn world_standard_weights_are_normalized() {
        let std = StandardPopulation::world_standard();
        assert_eq!(std.weights().len(), 15);
        let sum: f64 = std.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        // youngest band carries the four collapsed 5-year groups
        assert!((std.weights()[0] - 0.40).abs() < 1e-12);
    }

    #[test]
    fn population_table_round_trips_and_totals() {
        let mut pop = PopulationTable::new();
        for band in 0..15 {
            pop.insert(2010, Stratum::National, band, 1000 + band as u64);
        }
        pop.insert(2010, Stratum::Region(RegionCode::Rm), 0, 42);
        let text = pop.write();
        let again = PopulationTable::parse(&text).unwrap();
        assert_eq!(again.total(2010, Stratum::National).unwrap(), pop.total(2010, Stratum::National).unwrap());
        // partial stratum errors out
        assert!(again.total(2010, Stratum::Region(RegionCode::Rm)).is_err());
        assert!(!again.has_stratum(2010, Stratum::Region(RegionCode::Rm)));
        assert!(again.has_stratum(2010, Stratum::National));
    }

    #[test]
    fn standard_population_requires_full_coverage() {
        let bands = default_age_bands();
        let text = "age_band,weight\n0-19,0.5\n20-24,0.5\n";
        assert!(StandardPopulation::<f64>::parse(text, &bands).is_err());
    }
}
