//! Atomic output files: write to a temp name in the target directory, then
//! rename into place, so readers never observe a half-written file.

use std::fs;
use std::path::{Path, PathBuf};

use regsurv_core::Result;

pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(".tmp.{name}"));
    fs::write(&tmp, contents)?;
    let target = dir.join(name);
    fs::rename(&tmp, &target)?;
    Ok(target)
}
