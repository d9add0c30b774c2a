//! Configuration, experiment drivers and structured result output.

mod config;
mod drivers;
mod record;
mod thresholds;

pub use config::{fmt_f64, parse_config, Experiment, ExperimentConfig, Length, KEYS};
pub use drivers::{
    gaussian_datum, run_cauchy_enhancement, run_cauchy_solution, run_defect, run_energy_bound,
    run_enhance, run_evolve, run_experiment, run_propagation_1d, run_strichartz, strichartz_params,
};
pub use record::{csv_to_json, emit_csv, emit_json, json_to_csv, Check, RunRecord, Table};
pub use thresholds::{threshold, Threshold, THRESHOLDS, THRESHOLDS_VERSION};

use std::path::PathBuf;

use crate::Result;

/// Writes `<out>/<experiment>.csv` and `.json`; returns both paths.
pub fn write_outputs(record: &RunRecord, cfg: &ExperimentConfig) -> Result<(PathBuf, PathBuf)> {
    let csv = cfg.out.join(format!("{}.csv", record.experiment));
    let json = cfg.out.join(format!("{}.json", record.experiment));
    emit_csv(record, &csv)?;
    emit_json(record, &json)?;
    Ok((csv, json))
}
