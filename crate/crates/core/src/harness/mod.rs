//! Configuration, Monte-Carlo runner, figure presets and output files.

pub mod config;
pub mod experiment;
pub mod figures;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use config::{Axis, ExperimentConfig, SchemeKind};
pub use experiment::{
    paired_z, run_experiment, run_points, summarize, trial_seed, PointResult, SweepRecord,
};
pub use figures::{figure_configs, figure_points, reproduce_figure, Scale, FIGURES};

use crate::error::Result;

/// Writes rows with the header `axis,series,mean,std,trials`.
pub fn write_csv<W: Write>(records: &[SweepRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv_file(records: &[SweepRecord], path: &Path) -> Result<()> {
    write_csv(records, std::fs::File::create(path)?)
}

pub fn read_csv(path: &Path) -> Result<Vec<SweepRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

/// Provenance written next to every CSV.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub version: String,
    pub wall_time_s: f64,
    pub workers: usize,
    pub configs: Vec<ExperimentConfig>,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64, configs: Vec<ExperimentConfig>, wall_time_s: f64) -> Self {
        Self {
            command: command.into(),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s,
            workers: rayon::current_num_threads(),
            configs,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }
}
