//! ICD-10 diagnosis codes and the rule set that classifies them into the
//! cohort-defining primary set and three related-condition groups.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// A syntactically valid ICD-10 code: a letter, two digits, and an optional
/// third digit or literal `X` placeholder. Stored uppercase.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DiagnosisCode(String);

impl DiagnosisCode {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Three-character stem (letter + two digits).
    pub fn stem(&self) -> &str {
        &self.0[..3]
    }

    fn fourth(&self) -> Option<char> {
        self.0.chars().nth(3)
    }
}

impl FromStr for DiagnosisCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let token = s.trim().to_ascii_uppercase();
        let bad = |reason: &str| Error::MalformedCode {
            code: s.to_string(),
            reason: reason.to_string(),
        };
        let bytes = token.as_bytes();
        if !(3..=4).contains(&bytes.len()) {
            return Err(bad("expected 3 or 4 characters"));
        }
        if !bytes[0].is_ascii_alphabetic() {
            return Err(bad("must start with a letter"));
        }
        if !bytes[1].is_ascii_digit() || !bytes[2].is_ascii_digit() {
            return Err(bad("positions 2-3 must be digits"));
        }
        if let Some(&c) = bytes.get(3) {
            if !c.is_ascii_digit() && c != b'X' {
                return Err(bad("position 4 must be a digit or X"));
            }
        }
        Ok(DiagnosisCode(token))
    }
}

impl fmt::Display for DiagnosisCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Outcome of classifying a diagnosis against a [`CodeRuleSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnosisClass {
    /// Cohort-defining code (prefix match against the primary set).
    Primary,
    /// Directly attributable to the disease or its treatment.
    RelatedGroup1,
    /// Other malignancy associated with the disease.
    RelatedGroup2,
    /// Symptomatic condition, linked only within `period_years` of death
    /// (`None` = unlimited).
    RelatedGroup3 { period_years: Option<u8> },
    Unrelated,
}

/// One group entry. A code ending in `X` matches its 3-character stem with
/// any or no fourth character; otherwise the match is exact.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum RuleKey {
    Exact(String),
    Stem(String),
}

impl RuleKey {
    fn parse(code: &str) -> Result<Self> {
        let dx: DiagnosisCode = code.parse()?;
        if dx.fourth() == Some('X') {
            Ok(RuleKey::Stem(dx.stem().to_string()))
        } else {
            Ok(RuleKey::Exact(dx.as_str().to_string()))
        }
    }

    fn matches(&self, code: &DiagnosisCode) -> bool {
        match self {
            RuleKey::Exact(s) => code.as_str() == s,
            RuleKey::Stem(s) => code.stem() == s,
        }
    }

    fn token(&self) -> String {
        match self {
            RuleKey::Exact(s) => s.clone(),
            RuleKey::Stem(s) => format!("{s}X"),
        }
    }
}

/// The primary prefixes and the three related-code groups, normalized so the
/// four sets are pairwise disjoint: a group entry covered by a primary prefix
/// is dropped, and a token repeated across groups stays in the
/// lowest-numbered one.
#[derive(Debug, Clone)]
pub struct CodeRuleSet {
    primary_prefixes: Vec<String>,
    group1: Vec<RuleKey>,
    group2: Vec<RuleKey>,
    group3: BTreeMap<RuleKey, Option<u8>>,
}

const DEFAULT_RULES: &str = include_str!("../../../config/diagnosis_rules.txt");

impl CodeRuleSet {
    /// The rule set shipped with the crate (also available as a swap-in
    /// config file under `config/`).
    pub fn default_rules() -> Self {
        CodeRuleSet::parse(DEFAULT_RULES).expect("bundled rule set parses")
    }

    /// Parse the rule-set text format: prefixes under a `[primary]` section,
    /// `code,category,period_years` records under `[codes]` (empty period =
    /// unlimited). `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        #[derive(PartialEq)]
        enum Section {
            Codes,
            Primary,
        }
        let mut section = Section::Codes;
        let mut primary_prefixes = Vec::new();
        let mut group1 = Vec::new();
        let mut group2 = Vec::new();
        let mut group3 = BTreeMap::new();

        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: idx + 1,
                message,
            };
            if line.eq_ignore_ascii_case("[primary]") {
                section = Section::Primary;
                continue;
            }
            if line.starts_with('[') {
                section = Section::Codes;
                continue;
            }
            match section {
                Section::Primary => {
                    let prefix = line.to_ascii_uppercase();
                    if prefix.is_empty() || !prefix.chars().next().unwrap().is_ascii_alphabetic() {
                        return Err(err(format!("bad primary prefix `{line}`")));
                    }
                    primary_prefixes.push(prefix);
                }
                Section::Codes => {
                    let mut parts = line.split(',');
                    let code = parts.next().unwrap_or("").trim();
                    let category = parts.next().unwrap_or("").trim();
                    let period = parts.next().unwrap_or("").trim();
                    let key = RuleKey::parse(code).map_err(|e| err(e.to_string()))?;
                    match category {
                        "1" => group1.push(key),
                        "2" => group2.push(key),
                        "3" => {
                            let period_years = if period.is_empty() {
                                None
                            } else {
                                let p: u8 = period.parse().map_err(|_| {
                                    err(format!("bad period `{period}` for code {code}"))
                                })?;
                                if p == 0 || p > 10 {
                                    return Err(err(format!(
                                        "period for code {code} must be 1-10 years, got {p}"
                                    )));
                                }
                                Some(p)
                            };
                            group3.insert(key, period_years);
                        }
                        other => return Err(err(format!("bad category `{other}`"))),
                    }
                }
            }
        }
        if primary_prefixes.is_empty() {
            return Err(Error::Config("rule set has no [primary] prefixes".into()));
        }
        Ok(CodeRuleSet::normalize(
            primary_prefixes,
            group1,
            group2,
            group3,
        ))
    }

    fn normalize(
        primary_prefixes: Vec<String>,
        group1: Vec<RuleKey>,
        group2: Vec<RuleKey>,
        group3: BTreeMap<RuleKey, Option<u8>>,
    ) -> Self {
        let covered_by_primary =
            |key: &RuleKey| primary_prefixes.iter().any(|p| key.token().starts_with(p.as_str()));
        let mut seen: Vec<RuleKey> = Vec::new();
        let mut keep = |key: &RuleKey| {
            if covered_by_primary(key) || seen.contains(key) {
                false
            } else {
                seen.push(key.clone());
                true
            }
        };
        let group1: Vec<_> = group1.into_iter().filter(|k| keep(k)).collect();
        let group2: Vec<_> = group2.into_iter().filter(|k| keep(k)).collect();
        let group3: BTreeMap<_, _> = group3.into_iter().filter(|(k, _)| keep(k)).collect();
        CodeRuleSet {
            primary_prefixes,
            group1,
            group2,
            group3,
        }
    }

    pub fn primary_prefixes(&self) -> &[String] {
        &self.primary_prefixes
    }

    /// Classify a diagnosis code: primary prefix match first, then exact
    /// (or X-placeholder) lookup against groups 1-3.
    pub fn classify(&self, code: &DiagnosisCode) -> DiagnosisClass {
        if self
            .primary_prefixes
            .iter()
            .any(|p| code.as_str().starts_with(p.as_str()))
        {
            return DiagnosisClass::Primary;
        }
        if self.group1.iter().any(|k| k.matches(code)) {
            return DiagnosisClass::RelatedGroup1;
        }
        if self.group2.iter().any(|k| k.matches(code)) {
            return DiagnosisClass::RelatedGroup2;
        }
        if let Some((_, period_years)) = self.group3.iter().find(|(k, _)| k.matches(code)) {
            return DiagnosisClass::RelatedGroup3 {
                period_years: *period_years,
            };
        }
        DiagnosisClass::Unrelated
    }

    pub fn is_primary(&self, code: &DiagnosisCode) -> bool {
        self.classify(code) == DiagnosisClass::Primary
    }
}
