//! Monte-Carlo rank-recovery benchmark over a grid of synthetic tensors.
//!
//! Every trial draws its own tensor from a seed derived from
//! `(base_seed, cell, trial)` alone, so the rows do not depend on how many
//! workers ran them or in which order. All algorithms and rank bounds of a
//! cell see the same tensor in a given trial.
//!
//! Config schema (TOML):
//!
//! ```toml
//! base_seed = 7
//! trials = 20
//! parallelism = 4                 # optional, default 1
//! algorithms = ["gh", "gg"]       # gh | gg | gg-ho
//! rank_bound_factors = [1.0, 2.0] # L = ceil(factor · max J_n)
//!
//! [fit]                           # optional overrides
//! max_iters = 500
//! tol = 1e-6
//! prune_threshold = 1e-4
//! noise_period = 1
//! fixed_beta = 0.01
//!
//! [[cells]]
//! dims = [30, 30, 30]
//! rank = 6
//! snr_db = 10.0                   # omit for noise-free
//! correlated = false
//! ```

use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use pcpd_core::synth::{self, derive_seed, FactorCorrelation, SynthSpec};
use pcpd_core::{FitOptions, RankBound};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algo::Algorithm;

/// One synthetic-data cell of the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub dims: Vec<usize>,
    pub rank: usize,
    #[serde(default)]
    pub snr_db: Option<f64>,
    #[serde(default)]
    pub correlated: bool,
}

/// Fit knobs applied to every trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSettings {
    pub max_iters: usize,
    pub tol: f64,
    pub prune_threshold: f64,
    pub noise_period: usize,
    pub fixed_beta: Option<f64>,
}

impl Default for FitSettings {
    fn default() -> Self {
        let d = FitOptions::default();
        Self {
            max_iters: d.max_iters,
            tol: d.tol,
            prune_threshold: d.prune_rel_threshold,
            noise_period: d.noise_update_period,
            fixed_beta: d.fixed_beta,
        }
    }
}

/// A benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub base_seed: u64,
    pub trials: usize,
    #[serde(default = "one")]
    pub parallelism: usize,
    pub algorithms: Vec<Algorithm>,
    pub rank_bound_factors: Vec<f64>,
    #[serde(default)]
    pub fit: FitSettings,
    pub cells: Vec<CellSpec>,
}

fn one() -> usize {
    1
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.trials < 1 {
            bail!("trials must be at least 1");
        }
        if self.parallelism < 1 {
            bail!("parallelism must be at least 1");
        }
        if self.algorithms.is_empty() || self.rank_bound_factors.is_empty() || self.cells.is_empty() {
            bail!("algorithms, rank_bound_factors and cells must all be non-empty");
        }
        for c in &self.cells {
            if c.rank < 1 || c.dims.len() < 2 || c.dims.contains(&0) {
                bail!("cell {c:?} needs rank ≥ 1 and at least two nonzero dims");
            }
            if let Some(s) = c.snr_db {
                if !s.is_finite() {
                    bail!("cell {c:?} has a non-finite SNR");
                }
            }
        }
        Ok(())
    }

    fn fit_options(&self, factor: f64, seed: u64) -> FitOptions {
        FitOptions {
            rank_bound: RankBound::Factor(factor),
            max_iters: self.fit.max_iters,
            tol: self.fit.tol,
            prune_rel_threshold: self.fit.prune_threshold,
            noise_update_period: self.fit.noise_period,
            fixed_beta: self.fit.fixed_beta,
            seed,
            ..FitOptions::default()
        }
    }
}

/// Seed of trial `trial` in cell `cell`.
pub fn trial_seed(base_seed: u64, cell: usize, trial: usize) -> u64 {
    derive_seed(base_seed, ((cell as u64) << 32) | trial as u64)
}

/// One fitted trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub cell: usize,
    pub algo: Algorithm,
    pub rank: usize,
    pub snr_db: Option<f64>,
    pub rank_bound: usize,
    pub trial: usize,
    pub seed: u64,
    /// `None` when the fit failed.
    pub outcome: Option<TrialOutcome>,
}

/// Numbers from a successful fit.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub est_rank: usize,
    pub rmse: f64,
    pub iters: usize,
    pub seconds: f64,
    pub converged: bool,
}

/// Aggregate over the trials of one (cell, algorithm, rank bound).
#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub cell: usize,
    pub algo: Algorithm,
    pub rank: usize,
    pub snr_db: Option<f64>,
    pub rank_bound: usize,
    pub trials: usize,
    pub failures: usize,
    /// Fraction of all trials with `est_rank == rank`; failed fits count as misses.
    pub accuracy: f64,
    pub mean_rank: f64,
    pub std_rank: f64,
    pub mean_rmse: f64,
    pub mean_seconds: f64,
}

/// Raw rows in task order plus per-cell summaries.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<TrialRow>,
    pub summaries: Vec<CellSummary>,
}

impl BenchReport {
    /// Summary for a given cell, algorithm and resolved rank bound.
    pub fn summary(&self, cell: usize, algo: Algorithm, rank_bound: usize) -> Option<&CellSummary> {
        self.summaries
            .iter()
            .find(|s| s.cell == cell && s.algo == algo && s.rank_bound == rank_bound)
    }
}

struct Task {
    cell: usize,
    algo: Algorithm,
    factor: f64,
    trial: usize,
}

fn run_task(cfg: &BenchConfig, t: &Task) -> TrialRow {
    let spec_cell = &cfg.cells[t.cell];
    let seed = trial_seed(cfg.base_seed, t.cell, t.trial);
    let rank_bound = RankBound::Factor(t.factor).resolve(&spec_cell.dims).unwrap_or(0);
    let spec = SynthSpec {
        dims: spec_cell.dims.clone(),
        rank: spec_cell.rank,
        snr_db: spec_cell.snr_db,
        correlation: if spec_cell.correlated {
            FactorCorrelation::Correlated
        } else {
            FactorCorrelation::Iid
        },
        seed,
    };
    let outcome = (|| -> pcpd_core::Result<TrialOutcome> {
        let (x, y, _) = synth::gen_observation(&spec)?;
        let report = t.algo.fit(&y, &cfg.fit_options(t.factor, seed))?;
        Ok(TrialOutcome {
            est_rank: report.estimated_rank,
            rmse: synth::rmse(&x, &report.model.reconstruct())?,
            iters: report.iterations_run,
            seconds: report.wall_time_seconds,
            converged: report.converged,
        })
    })();
    let outcome = match outcome {
        Ok(o) => Some(o),
        Err(e) => {
            log::warn!("cell {} {} L={} trial {}: {e}", t.cell, t.algo, rank_bound, t.trial);
            None
        }
    };
    TrialRow {
        cell: t.cell,
        algo: t.algo,
        rank: spec_cell.rank,
        snr_db: spec_cell.snr_db,
        rank_bound,
        trial: t.trial,
        seed,
        outcome,
    }
}

fn summarize(rows: &[TrialRow]) -> CellSummary {
    let first = &rows[0];
    let ok: Vec<&TrialOutcome> = rows.iter().filter_map(|r| r.outcome.as_ref()).collect();
    let n = ok.len() as f64;
    let mean = |f: &dyn Fn(&TrialOutcome) -> f64| if ok.is_empty() { f64::NAN } else { ok.iter().map(|o| f(o)).sum::<f64>() / n };
    let mean_rank = mean(&|o| o.est_rank as f64);
    let var_rank = mean(&|o| (o.est_rank as f64 - mean_rank).powi(2));
    let hits = ok.iter().filter(|o| o.est_rank == first.rank).count();
    CellSummary {
        cell: first.cell,
        algo: first.algo,
        rank: first.rank,
        snr_db: first.snr_db,
        rank_bound: first.rank_bound,
        trials: rows.len(),
        failures: rows.len() - ok.len(),
        accuracy: hits as f64 / rows.len() as f64,
        mean_rank,
        std_rank: var_rank.sqrt(),
        mean_rmse: mean(&|o| o.rmse),
        mean_seconds: mean(&|o| o.seconds),
    }
}

/// Runs every (cell, algorithm, rank bound, trial) on `cfg.parallelism` workers.
pub fn run_bench(cfg: &BenchConfig) -> anyhow::Result<BenchReport> {
    cfg.validate()?;
    let mut tasks = Vec::new();
    for cell in 0..cfg.cells.len() {
        for &algo in &cfg.algorithms {
            for &factor in &cfg.rank_bound_factors {
                for trial in 0..cfg.trials {
                    tasks.push(Task { cell, algo, factor, trial });
                }
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.parallelism).build()?;
    let rows: Vec<TrialRow> = pool.install(|| tasks.par_iter().map(|t| run_task(cfg, t)).collect());
    let summaries = rows.chunks(cfg.trials).map(summarize).collect();
    Ok(BenchReport { rows, summaries })
}

/// Column names of the raw CSV.
pub const RAW_HEADER: [&str; 11] = [
    "algo", "R", "snr_db", "L", "trial", "seed", "est_rank", "rmse", "iters", "seconds", "converged",
];

/// Column names of the aggregate CSV.
pub const SUMMARY_HEADER: [&str; 11] = [
    "algo", "R", "snr_db", "L", "trials", "failures", "accuracy", "mean_rank", "std_rank", "mean_rmse", "mean_seconds",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn finite(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        String::new()
    }
}

/// Writes one row per trial. With `timing` off the `seconds` column is left
/// empty so reruns are byte-identical.
pub fn write_raw_csv<W: Write>(w: W, report: &BenchReport, timing: bool) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(RAW_HEADER)?;
    for r in &report.rows {
        let o = r.outcome.as_ref();
        out.write_record([
            r.algo.to_string(),
            r.rank.to_string(),
            opt(r.snr_db),
            r.rank_bound.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            opt(o.map(|o| o.est_rank)),
            opt(o.map(|o| o.rmse)),
            opt(o.map(|o| o.iters)),
            if timing { opt(o.map(|o| o.seconds)) } else { String::new() },
            o.is_some_and(|o| o.converged).to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Writes one row per (cell, algorithm, rank bound).
pub fn write_summary_csv<W: Write>(w: W, report: &BenchReport, timing: bool) -> anyhow::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for s in &report.summaries {
        out.write_record([
            s.algo.to_string(),
            s.rank.to_string(),
            opt(s.snr_db),
            s.rank_bound.to_string(),
            s.trials.to_string(),
            s.failures.to_string(),
            s.accuracy.to_string(),
            finite(s.mean_rank),
            finite(s.std_rank),
            finite(s.mean_rmse),
            if timing { finite(s.mean_seconds) } else { String::new() },
        ])?;
    }
    out.flush()?;
    Ok(())
}
