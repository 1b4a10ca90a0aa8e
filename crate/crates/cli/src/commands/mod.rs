pub mod build_cohort;
pub mod cox;
pub mod km;
pub mod rates;
pub mod simulate;

use std::path::Path;

use regsurv_core::icd::CodeRuleSet;
use regsurv_core::registry::RowRejection;
use regsurv_core::{PatientTimeline, Result};

/// Load a rule set from a path, or fall back to the bundled defaults.
pub fn load_rules(path: Option<&Path>) -> Result<CodeRuleSet> {
    match path {
        Some(p) => CodeRuleSet::parse(&std::fs::read_to_string(p)?),
        None => Ok(CodeRuleSet::default_rules()),
    }
}

pub fn load_cohort(path: &Path) -> Result<Vec<PatientTimeline>> {
    regsurv_core::cohort::parse_cohort(&std::fs::read_to_string(path)?)
}

/// Report rejected rows on stderr without failing the run.
pub fn report_rejections(what: &str, rejected: &[RowRejection]) {
    if rejected.is_empty() {
        return;
    }
    eprintln!("{}: {} row(s) rejected", what, rejected.len());
    for r in rejected.iter().take(10) {
        eprintln!("  line {}: {}", r.line, r.message);
    }
    if rejected.len() > 10 {
        eprintln!("  ... and {} more", rejected.len() - 10);
    }
}
