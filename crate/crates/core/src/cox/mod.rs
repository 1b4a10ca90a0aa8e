//! Cox proportional-hazards engine: covariate encoding, partial-likelihood
//! evaluation with Efron or Breslow tie handling, Newton-Raphson fitting with
//! Wald inference, hazard ratios between covariate profiles, and absolute
//! survival prediction from the baseline cumulative hazard.

mod encode;
mod fit;
mod likelihood;

pub use encode::{encode, CovariateSpec, DesignMatrix, DesignRow, ProfileDefaults};
pub use fit::{
    fit, hazard_ratio, predict_survival, write_baseline_hazard, CoxModel, FitOptions,
    PredictedSurvival,
};
pub use likelihood::{log_partial_likelihood, PlDerivatives, TieMethod};

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::registry::{Insurer, RegionCode};

/// Region assignment in a profile: a concrete region, or none of the dummy
/// regions (the "any other region" reference).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileRegion {
    Region(RegionCode),
    Other,
}

/// A named assignment of raw covariates. Unset fields fall back to the
/// fitted model's data medians (continuous) or modal categories (dummies);
/// in hazard ratios a field unset on both sides cancels exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CovariateProfile {
    pub age: Option<f64>,
    pub year: Option<f64>,
    pub insurer: Option<Insurer>,
    pub region: Option<ProfileRegion>,
}

impl CovariateProfile {
    pub fn with_age(mut self, age: f64) -> Self {
        self.age = Some(age);
        self
    }

    pub fn with_year(mut self, year: f64) -> Self {
        self.year = Some(year);
        self
    }

    pub fn with_insurer(mut self, insurer: Insurer) -> Self {
        self.insurer = Some(insurer);
        self
    }

    pub fn with_region(mut self, region: ProfileRegion) -> Self {
        self.region = Some(region);
        self
    }
}

impl FromStr for CovariateProfile {
    type Err = Error;

    /// Parse `age=60,insurer=ISAPRE,region=RM,year=2010`; `region=OTHER`
    /// selects the no-dummy reference region.
    fn from_str(s: &str) -> Result<Self> {
        let mut profile = CovariateProfile::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = part
                .split_once('=')
                .ok_or_else(|| Error::Profile(format!("expected key=value, got `{part}`")))?;
            match key.trim().to_ascii_lowercase().as_str() {
                "age" => {
                    profile.age = Some(value.trim().parse().map_err(|_| {
                        Error::Profile(format!("bad age `{value}`"))
                    })?)
                }
                "year" => {
                    profile.year = Some(value.trim().parse().map_err(|_| {
                        Error::Profile(format!("bad year `{value}`"))
                    })?)
                }
                "insurer" => {
                    profile.insurer =
                        Some(value.parse().map_err(|e: Error| Error::Profile(e.to_string()))?)
                }
                "region" => {
                    profile.region = Some(if value.trim().eq_ignore_ascii_case("other") {
                        ProfileRegion::Other
                    } else {
                        ProfileRegion::Region(
                            value.parse().map_err(|e: Error| Error::Profile(e.to_string()))?,
                        )
                    })
                }
                other => return Err(Error::Profile(format!("unknown profile field `{other}`"))),
            }
        }
        Ok(profile)
    }
}
