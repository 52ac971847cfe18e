//! Fit results on disk: a TOML summary plus CSV side files.

use std::fs;
use std::io::Write;
use std::path::Path;

use pcpd_core::FitReport;
use serde::{Deserialize, Serialize};

use crate::algo::Algorithm;
use crate::format::{self, FormatError};

/// Serializable view of a [`FitReport`] without the factor matrices, which
/// go to their own CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub algo: Algorithm,
    pub seed: u64,
    pub estimated_rank: usize,
    pub rank_bound: usize,
    pub iterations_run: usize,
    pub converged: bool,
    pub noise_precision: f64,
    pub noise_shape: f64,
    pub noise_rate: f64,
    pub data_scale: f64,
    pub wall_time_seconds: f64,
    pub dims: Vec<usize>,
    pub z_powers: Vec<f64>,
    pub rank_trace: Vec<usize>,
    pub elbo_trace: Vec<f64>,
}

impl FitSummary {
    pub fn new(algo: Algorithm, seed: u64, r: &FitReport) -> Self {
        Self {
            algo,
            seed,
            estimated_rank: r.estimated_rank,
            rank_bound: r.rank_bound,
            iterations_run: r.iterations_run,
            converged: r.converged,
            noise_precision: r.noise_precision,
            noise_shape: r.noise.e,
            noise_rate: r.noise.f,
            data_scale: r.data_scale,
            wall_time_seconds: r.wall_time_seconds,
            dims: r.model.dims(),
            z_powers: r.z_powers.clone(),
            rank_trace: r.rank_trace.clone(),
            elbo_trace: r.elbo_trace.clone(),
        }
    }
}

fn write_column<T: ToString>(path: &Path, header: &str, values: &[T]) -> Result<(), FormatError> {
    let mut f = fs::File::create(path)?;
    writeln!(f, "{header}")?;
    for v in values {
        writeln!(f, "{}", v.to_string())?;
    }
    Ok(())
}

/// Writes `report.toml`, `factor_<n>.csv`, `z_powers.csv` and, when the
/// trace is non-empty, `elbo.csv` into `dir`.
pub fn write_fit_outputs(dir: &Path, summary: &FitSummary, report: &FitReport) -> Result<(), FormatError> {
    fs::create_dir_all(dir)?;
    let text = toml::to_string(summary)?;
    fs::write(dir.join("report.toml"), text)?;
    format::write_factors(dir, report.model.factors())?;
    write_column(&dir.join("z_powers.csv"), "z_power", &report.z_powers)?;
    if !report.elbo_trace.is_empty() {
        write_column(&dir.join("elbo.csv"), "elbo", &report.elbo_trace)?;
    }
    Ok(())
}

/// Reads back a `report.toml`.
pub fn read_summary(path: &Path) -> anyhow::Result<FitSummary> {
    Ok(toml::from_str(&fs::read_to_string(path)?)?)
}
