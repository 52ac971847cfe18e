//! Algorithm selection shared by the CLI and the benchmark runner.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use pcpd_core::vi_gg::{self, GgSettings};
use pcpd_core::{vi_gh, DenseTensor, FitOptions, FitReport};
use serde::{Deserialize, Serialize};

/// Which column prior to fit with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    /// Generalized hyperbolic prior.
    #[serde(rename = "gh")]
    Gh,
    /// Gaussian-gamma prior.
    #[serde(rename = "gg")]
    Gg,
    /// Gaussian-gamma prior with a learnt gamma rate.
    #[serde(rename = "gg-ho", alias = "gg_ho")]
    GgHo,
}

impl Algorithm {
    /// Name used on the command line and in reports.
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Gh => "gh",
            Algorithm::Gg => "gg",
            Algorithm::GgHo => "gg-ho",
        }
    }

    /// Runs the fit and records its wall time in the report.
    pub fn fit(self, y: &DenseTensor, opts: &FitOptions) -> pcpd_core::Result<FitReport> {
        let start = Instant::now();
        let mut report = match self {
            Algorithm::Gh => vi_gh::fit(y, opts),
            Algorithm::Gg => vi_gg::fit_gg(y, opts),
            Algorithm::GgHo => vi_gg::fit_with(y, opts, &GgSettings::with_hyper_prior()),
        }?;
        report.wall_time_seconds = start.elapsed().as_secs_f64();
        Ok(report)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gh" => Ok(Algorithm::Gh),
            "gg" => Ok(Algorithm::Gg),
            "gg-ho" | "gg_ho" => Ok(Algorithm::GgHo),
            other => Err(format!("unknown algorithm {other:?}; expected gh, gg or gg-ho")),
        }
    }
}
