//! Optional JSON run configuration. Any field may be omitted; command-line
//! flags always win over the file.

use std::path::{Path, PathBuf};

use regsurv_core::{CohortConfig, Error, Result};
use serde::Deserialize;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub deaths: Option<PathBuf>,
    pub discharges: Option<PathBuf>,
    pub cohort: Option<PathBuf>,
    pub population: Option<PathBuf>,
    pub standard_population: Option<PathBuf>,
    pub rules: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub window_start_year: Option<i32>,
    pub window_end_year: Option<i32>,
    pub washout_start_year: Option<i32>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("bad config file {}: {e}", path.display())))
    }

    /// Cohort window settings: flags beat the file, the file beats defaults.
    pub fn cohort_config(
        &self,
        window_start: Option<i32>,
        window_end: Option<i32>,
        washout_start: Option<i32>,
        seed: Option<u64>,
    ) -> CohortConfig {
        let defaults = CohortConfig::default();
        CohortConfig {
            window_start_year: window_start
                .or(self.window_start_year)
                .unwrap_or(defaults.window_start_year),
            window_end_year: window_end
                .or(self.window_end_year)
                .unwrap_or(defaults.window_end_year),
            washout_start_year: washout_start
                .or(self.washout_start_year)
                .unwrap_or(defaults.washout_start_year),
            imputation_seed: seed.or(self.seed).unwrap_or(defaults.imputation_seed),
            ..defaults
        }
    }
}

pub fn require_path(
    flag: Option<PathBuf>,
    from_config: Option<&PathBuf>,
    name: &str,
) -> Result<PathBuf> {
    let path = flag
        .or_else(|| from_config.cloned())
        .ok_or_else(|| Error::Config(format!("missing required path: --{name}")))?;
    if !path.exists() {
        return Err(Error::Config(format!(
            "--{name} path does not exist: {}",
            path.display()
        )));
    }
    Ok(path)
}

pub fn out_dir(flag: Option<PathBuf>, from_config: Option<&PathBuf>) -> Result<PathBuf> {
    flag.or_else(|| from_config.cloned())
        .ok_or_else(|| Error::Config("missing required path: --out-dir".into()))
}
