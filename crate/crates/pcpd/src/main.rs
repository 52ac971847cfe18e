use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use pcpd::bench::{self, BenchConfig};
use pcpd::report::{write_fit_outputs, FitSummary};
use pcpd::{format, Algorithm};
use pcpd_core::synth::{self, FactorCorrelation, SynthSpec};
use pcpd_core::{FitOptions, RankBound};

#[derive(Parser)]
#[command(name = "pcpd", version, about = "Probabilistic CP decomposition with automatic rank learning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random low-rank tensor with optional noise.
    Synth {
        /// Shape, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        dims: Vec<usize>,
        #[arg(long)]
        rank: usize,
        /// Input SNR in dB; omit for a noise-free tensor.
        #[arg(long, allow_negative_numbers = true)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Draw factor rows with a shared random covariance.
        #[arg(long)]
        correlated: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit a tensor file and write the report and factors.
    Fit {
        input: PathBuf,
        #[arg(long, default_value = "gh")]
        algo: Algorithm,
        /// Initial column count.
        #[arg(long, conflicts_with = "rank_bound_factor")]
        rank_bound: Option<usize>,
        /// Initial column count as a multiple of the largest dim.
        #[arg(long)]
        rank_bound_factor: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        prune_threshold: Option<f64>,
        #[arg(long)]
        noise_period: Option<usize>,
        /// Hold the noise precision fixed at this value.
        #[arg(long)]
        fixed_beta: Option<f64>,
        /// Record the ELBO after every sweep.
        #[arg(long)]
        elbo: bool,
        #[arg(long)]
        no_prune: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark grid from a TOML config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Leave the timing columns empty so outputs are reproducible byte for byte.
        #[arg(long)]
        no_timing: bool,
        /// Override the worker count from the config.
        #[arg(long)]
        parallelism: Option<usize>,
    },
}

fn synth_cmd(spec: SynthSpec, out: PathBuf) -> anyhow::Result<()> {
    let (x, y, model) = synth::gen_observation(&spec)?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    format::write_tensor(&out.join("clean.tnsr"), &x)?;
    format::write_tensor(&out.join("observed.tnsr"), &y)?;
    format::write_factors(&out, model.factors())?;
    println!("wrote {:?} rank {} tensor to {}", spec.dims, spec.rank, out.display());
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Synth { dims, rank, snr, seed, correlated, out } => {
            let spec = SynthSpec {
                dims,
                rank,
                snr_db: snr,
                correlation: if correlated { FactorCorrelation::Correlated } else { FactorCorrelation::Iid },
                seed,
            };
            synth_cmd(spec, out)
        }
        Command::Fit {
            input,
            algo,
            rank_bound,
            rank_bound_factor,
            max_iters,
            tol,
            prune_threshold,
            noise_period,
            fixed_beta,
            elbo,
            no_prune,
            seed,
            out,
        } => {
            let y = format::read_tensor(&input).with_context(|| format!("reading {}", input.display()))?;
            let d = FitOptions::default();
            let opts = FitOptions {
                rank_bound: match (rank_bound, rank_bound_factor) {
                    (Some(l), _) => RankBound::Explicit(l),
                    (None, Some(f)) => RankBound::Factor(f),
                    (None, None) => d.rank_bound,
                },
                max_iters: max_iters.unwrap_or(d.max_iters),
                tol: tol.unwrap_or(d.tol),
                prune_rel_threshold: prune_threshold.unwrap_or(d.prune_rel_threshold),
                prune: !no_prune,
                noise_update_period: noise_period.unwrap_or(d.noise_update_period),
                fixed_beta,
                seed,
                compute_elbo: elbo,
                ..d
            };
            let report = algo.fit(&y, &opts)?;
            let summary = FitSummary::new(algo, seed, &report);
            write_fit_outputs(&out, &summary, &report)?;
            println!(
                "{algo}: rank {} (bound {}), {} iterations, converged {}, noise precision {:.6e}, {:.3}s",
                report.estimated_rank,
                report.rank_bound,
                report.iterations_run,
                report.converged,
                report.noise_precision,
                report.wall_time_seconds
            );
            Ok(())
        }
        Command::Bench { config, out, no_timing, parallelism } => {
            let mut cfg = BenchConfig::load(&config)?;
            if let Some(p) = parallelism {
                if p < 1 {
                    bail!("parallelism must be at least 1");
                }
                cfg.parallelism = p;
            }
            let report = bench::run_bench(&cfg)?;
            fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
            bench::write_raw_csv(fs::File::create(out.join("raw.csv"))?, &report, !no_timing)?;
            bench::write_summary_csv(fs::File::create(out.join("summary.csv"))?, &report, !no_timing)?;
            for s in &report.summaries {
                println!(
                    "{} R={} snr={} L={}: accuracy {:.2}, mean rank {:.2}",
                    s.algo,
                    s.rank,
                    s.snr_db.map_or("inf".into(), |v| v.to_string()),
                    s.rank_bound,
                    s.accuracy,
                    s.mean_rank
                );
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
