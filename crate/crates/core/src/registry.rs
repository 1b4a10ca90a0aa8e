//! Raw registry rows: death and hospital-discharge records, with the
//! comma-separated text format they are exchanged in. Dates are ISO-8601 and
//! a missing patient ID is an empty field.

use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::icd::DiagnosisCode;

/// Opaque non-empty patient identifier. A record may carry no ID at all
/// (`Option<PersonId>` = `None`); absent IDs never link to anything,
/// including each other.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PersonId(String);

impl PersonId {
    pub fn new(token: impl Into<String>) -> Result<Self> {
        let token = token.into();
        if token.trim().is_empty() {
            return Err(Error::Config("person id must be non-empty".into()));
        }
        Ok(PersonId(token))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PersonId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sex {
    Female,
    Male,
    Unknown,
}

impl Sex {
    pub fn token(self) -> &'static str {
        match self {
            Sex::Female => "female",
            Sex::Male => "male",
            Sex::Unknown => "unknown",
        }
    }
}

impl FromStr for Sex {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "female" | "f" => Ok(Sex::Female),
            "male" | "m" => Ok(Sex::Male),
            "unknown" | "" => Ok(Sex::Unknown),
            other => Err(Error::Config(format!("unknown sex token `{other}`"))),
        }
    }
}

impl fmt::Display for Sex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// FONASA benefit segment, A (lowest income) through D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FonasaSegment {
    A,
    B,
    C,
    D,
}

impl FonasaSegment {
    pub const ALL: [FonasaSegment; 4] = [
        FonasaSegment::A,
        FonasaSegment::B,
        FonasaSegment::C,
        FonasaSegment::D,
    ];

    pub fn letter(self) -> char {
        match self {
            FonasaSegment::A => 'A',
            FonasaSegment::B => 'B',
            FonasaSegment::C => 'C',
            FonasaSegment::D => 'D',
        }
    }
}

/// Health insurance affiliation carried by discharge rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Insurer {
    Fonasa(FonasaSegment),
    Isapre,
    ArmedForces,
    None,
    Unknown,
}

impl Insurer {
    pub fn token(self) -> String {
        match self {
            Insurer::Fonasa(seg) => format!("FONASA_{}", seg.letter()),
            Insurer::Isapre => "ISAPRE".into(),
            Insurer::ArmedForces => "ARMED_FORCES".into(),
            Insurer::None => "NONE".into(),
            Insurer::Unknown => "UNKNOWN".into(),
        }
    }
}

impl FromStr for Insurer {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "FONASA_A" => Ok(Insurer::Fonasa(FonasaSegment::A)),
            "FONASA_B" => Ok(Insurer::Fonasa(FonasaSegment::B)),
            "FONASA_C" => Ok(Insurer::Fonasa(FonasaSegment::C)),
            "FONASA_D" => Ok(Insurer::Fonasa(FonasaSegment::D)),
            "ISAPRE" => Ok(Insurer::Isapre),
            "ARMED_FORCES" => Ok(Insurer::ArmedForces),
            "NONE" => Ok(Insurer::None),
            "UNKNOWN" | "" => Ok(Insurer::Unknown),
            other => Err(Error::Config(format!("unknown insurer token `{other}`"))),
        }
    }
}

impl fmt::Display for Insurer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.token())
    }
}

/// The sixteen administrative regions, in north-to-south order. Tokens are
/// the customary roman numerals plus RM for the Metropolitan region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RegionCode {
    Xv,
    I,
    Ii,
    Iii,
    Iv,
    V,
    Rm,
    Vi,
    Vii,
    Xvi,
    Viii,
    Ix,
    Xiv,
    X,
    Xi,
    Xii,
}

impl RegionCode {
    pub const ALL: [RegionCode; 16] = [
        RegionCode::Xv,
        RegionCode::I,
        RegionCode::Ii,
        RegionCode::Iii,
        RegionCode::Iv,
        RegionCode::V,
        RegionCode::Rm,
        RegionCode::Vi,
        RegionCode::Vii,
        RegionCode::Xvi,
        RegionCode::Viii,
        RegionCode::Ix,
        RegionCode::Xiv,
        RegionCode::X,
        RegionCode::Xi,
        RegionCode::Xii,
    ];

    pub fn token(self) -> &'static str {
        match self {
            RegionCode::Xv => "XV",
            RegionCode::I => "I",
            RegionCode::Ii => "II",
            RegionCode::Iii => "III",
            RegionCode::Iv => "IV",
            RegionCode::V => "V",
            RegionCode::Rm => "RM",
            RegionCode::Vi => "VI",
            RegionCode::Vii => "VII",
            RegionCode::Xvi => "XVI",
            RegionCode::Viii => "VIII",
            RegionCode::Ix => "IX",
            RegionCode::Xiv => "XIV",
            RegionCode::X => "X",
            RegionCode::Xi => "XI",
            RegionCode::Xii => "XII",
        }
    }
}

impl FromStr for RegionCode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim().to_ascii_uppercase();
        RegionCode::ALL
            .iter()
            .copied()
            .find(|r| r.token() == token)
            .ok_or_else(|| Error::Config(format!("unknown region code `{s}`")))
    }
}

impl fmt::Display for RegionCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// One row of the national death registry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeathRecord {
    pub id: Option<PersonId>,
    pub birth_date: NaiveDate,
    pub death_date: NaiveDate,
    pub sex: Sex,
    pub region: RegionCode,
    pub cause_code: DiagnosisCode,
}

impl DeathRecord {
    pub fn validate(&self) -> Result<()> {
        if self.death_date < self.birth_date {
            return Err(Error::DateOrder(format!(
                "death {} precedes birth {}",
                self.death_date, self.birth_date
            )));
        }
        Ok(())
    }
}

/// One row of the hospital discharge registry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DischargeRecord {
    pub id: Option<PersonId>,
    pub birth_date: NaiveDate,
    pub sex: Sex,
    pub region: RegionCode,
    pub insurer: Insurer,
    pub admission_date: NaiveDate,
    pub discharge_date: NaiveDate,
    pub primary_dx: DiagnosisCode,
    pub secondary_dx: Vec<DiagnosisCode>,
}

impl DischargeRecord {
    pub fn validate(&self) -> Result<()> {
        if self.discharge_date < self.admission_date {
            return Err(Error::DateOrder(format!(
                "discharge {} precedes admission {}",
                self.discharge_date, self.admission_date
            )));
        }
        Ok(())
    }
}

/// A rejected input row with its 1-based line number.
#[derive(Debug, Clone)]
pub struct RowRejection {
    pub line: usize,
    pub message: String,
}

pub const DEATH_HEADER: &str = "id,birth_date,death_date,sex,region,cause_code";
pub const DISCHARGE_HEADER: &str =
    "id,birth_date,sex,region,insurer,admission_date,discharge_date,primary_dx,secondary_dx";

fn parse_date(s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|_| Error::Config(format!("bad date `{s}`, expected YYYY-MM-DD")))
}

fn parse_opt_id(s: &str) -> Result<Option<PersonId>> {
    let t = s.trim();
    if t.is_empty() {
        Ok(None)
    } else {
        PersonId::new(t).map(Some)
    }
}

fn check_header(line: Option<&str>, expect: &str, what: &str) -> Result<()> {
    match line {
        Some(h) if h.trim() == expect => Ok(()),
        other => Err(Error::Parse {
            line: 1,
            message: format!(
                "{what} file must start with header `{expect}`, got `{}`",
                other.unwrap_or("").trim()
            ),
        }),
    }
}

/// Parse the death registry format. Rows that fail to parse are collected as
/// rejections rather than aborting the load; a missing header is fatal.
pub fn parse_death_records(text: &str) -> Result<(Vec<DeathRecord>, Vec<RowRejection>)> {
    let mut lines = text.lines();
    check_header(lines.next(), DEATH_HEADER, "death registry")?;
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for (idx, raw) in lines.enumerate() {
        let line_no = idx + 2;
        if raw.trim().is_empty() {
            continue;
        }
        match parse_death_row(raw) {
            Ok(rec) => records.push(rec),
            Err(e) => rejected.push(RowRejection {
                line: line_no,
                message: e.to_string(),
            }),
        }
    }
    Ok((records, rejected))
}

fn parse_death_row(raw: &str) -> Result<DeathRecord> {
    let fields: Vec<&str> = raw.split(',').collect();
    if fields.len() != 6 {
        return Err(Error::Config(format!(
            "expected 6 fields, got {}",
            fields.len()
        )));
    }
    let rec = DeathRecord {
        id: parse_opt_id(fields[0])?,
        birth_date: parse_date(fields[1])?,
        death_date: parse_date(fields[2])?,
        sex: fields[3].parse()?,
        region: fields[4].parse()?,
        cause_code: fields[5].parse()?,
    };
    rec.validate()?;
    Ok(rec)
}

/// Parse the discharge registry format. Secondary diagnoses are
/// semicolon-separated inside the final field; the field may be empty.
pub fn parse_discharge_records(text: &str) -> Result<(Vec<DischargeRecord>, Vec<RowRejection>)> {
    let mut lines = text.lines();
    check_header(lines.next(), DISCHARGE_HEADER, "discharge registry")?;
    let mut records = Vec::new();
    let mut rejected = Vec::new();
    for (idx, raw) in lines.enumerate() {
        let line_no = idx + 2;
        if raw.trim().is_empty() {
            continue;
        }
        match parse_discharge_row(raw) {
            Ok(rec) => records.push(rec),
            Err(e) => rejected.push(RowRejection {
                line: line_no,
                message: e.to_string(),
            }),
        }
    }
    Ok((records, rejected))
}

fn parse_discharge_row(raw: &str) -> Result<DischargeRecord> {
    let fields: Vec<&str> = raw.split(',').collect();
    if fields.len() != 9 {
        return Err(Error::Config(format!(
            "expected 9 fields, got {}",
            fields.len()
        )));
    }
    let secondary_dx = fields[8]
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::parse)
        .collect::<Result<Vec<DiagnosisCode>>>()?;
    let rec = DischargeRecord {
        id: parse_opt_id(fields[0])?,
        birth_date: parse_date(fields[1])?,
        sex: fields[2].parse()?,
        region: fields[3].parse()?,
        insurer: fields[4].parse()?,
        admission_date: parse_date(fields[5])?,
        discharge_date: parse_date(fields[6])?,
        primary_dx: fields[7].parse()?,
        secondary_dx,
    };
    rec.validate()?;
    Ok(rec)
}

pub fn write_death_records(records: &[DeathRecord]) -> String {
    let mut out = String::from(DEATH_HEADER);
    out.push('\n');
    for r in records {
        let id = r.id.as_ref().map(PersonId::as_str).unwrap_or("");
        out.push_str(&format!(
            "{id},{},{},{},{},{}\n",
            r.birth_date, r.death_date, r.sex, r.region, r.cause_code
        ));
    }
    out
}

pub fn write_discharge_records(records: &[DischargeRecord]) -> String {
    let mut out = String::from(DISCHARGE_HEADER);
    out.push('\n');
    for r in records {
        let id = r.id.as_ref().map(PersonId::as_str).unwrap_or("");
        let secondary = r
            .secondary_dx
            .iter()
            .map(DiagnosisCode::as_str)
            .collect::<Vec<_>>()
            .join(";");
        out.push_str(&format!(
            "{id},{},{},{},{},{},{},{},{secondary}\n",
            r.birth_date, r.sex, r.region, r.insurer, r.admission_date, r.discharge_date,
            r.primary_dx
        ));
    }
    out
}
