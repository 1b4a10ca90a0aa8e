use std::path::PathBuf;

use clap::Args;
use regsurv_core::registry::{write_death_records, write_discharge_records};
use regsurv_core::synthetic::{generate, SyntheticSpec};
use regsurv_core::Result;

use crate::config::{out_dir, FileConfig};
use crate::out::write_atomic;

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Generator spec as JSON; omitted fields use the documented defaults
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    n_patients: Option<usize>,
    #[arg(long)]
    missing_id_rate: Option<f64>,
    #[arg(long)]
    gender_noise_rate: Option<f64>,
    #[arg(long)]
    orphan_death_rate: Option<f64>,
    #[arg(long)]
    washout_violator_rate: Option<f64>,
    #[arg(long)]
    conflict_rate: Option<f64>,
    #[arg(long)]
    censoring_rate: Option<f64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

pub fn run(args: SimulateArgs, file_cfg: &FileConfig) -> Result<()> {
    let out = out_dir(args.out_dir, file_cfg.out_dir.as_ref())?;
    let mut spec = match &args.spec {
        Some(path) => SyntheticSpec::from_json(&std::fs::read_to_string(path)?)?,
        None => SyntheticSpec::default(),
    };
    if let Some(n) = args.n_patients {
        spec.n_patients = n;
    }
    if let Some(r) = args.missing_id_rate {
        spec.missing_id_rate = r;
    }
    if let Some(r) = args.gender_noise_rate {
        spec.gender_noise_rate = r;
    }
    if let Some(r) = args.orphan_death_rate {
        spec.orphan_death_rate = r;
    }
    if let Some(r) = args.washout_violator_rate {
        spec.washout_violator_rate = r;
    }
    if let Some(r) = args.conflict_rate {
        spec.conflict_rate = r;
    }
    if let Some(r) = args.censoring_rate {
        spec.censoring_rate = r;
    }
    let seed = args.seed.or(file_cfg.seed).unwrap_or(7);

    let data = generate(&spec, seed)?;
    let deaths_path = write_atomic(&out, "deaths.csv", &write_death_records(&data.deaths))?;
    let discharges_path = write_atomic(
        &out,
        "discharges.csv",
        &write_discharge_records(&data.discharges),
    )?;
    let population_path = write_atomic(&out, "population.csv", &data.population.write())?;
    let truth_path = write_atomic(&out, "ground_truth.json", &data.ground_truth.to_json())?;
    write_atomic(&out, "generator_spec.json", &spec.to_json())?;

    println!(
        "simulated {} patients (seed {seed}): {} deaths, {} discharges",
        spec.n_patients,
        data.deaths.len(),
        data.discharges.len()
    );
    for p in [deaths_path, discharges_path, population_path, truth_path] {
        println!("  -> {}", p.display());
    }
    Ok(())
}
