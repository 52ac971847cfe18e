//! Rank learning with the Gaussian-gamma (ARD) column prior.
//!
//! `v_l | γ_l ~ N(0, γ_l⁻¹ I)`, `γ_l ~ gamma(c0, d0)`. The posterior is
//! `gamma(c_l, d_l)` with `c_l = c0 + Z/2` and `d_l = d0 + E‖v_l‖²/2`.
//!
//! The optional hyper-prior variant puts `d0_l ~ gamma(ε, ε)` on the rate,
//! giving `Q(d0_l) = gamma(c0 + ε, E[γ_l] + ε)`; its mean then replaces `d0`
//! in the `d_l` update.

use alloc::format;
use alloc::vec::Vec;

use libm::log;

use crate::engine::{retain_flagged, run, svd_init, ColumnPrior, FitOptions, FitReport, Observation, VariationalState, LN_2PI};
use crate::priors::GgHyper;
use crate::special::{digamma, gamma_entropy, log_gamma};
use crate::tensor::DenseTensor;
use crate::{Error, Result};

/// Hyper-parameter choices for the Gaussian-gamma prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgSettings {
    /// `(c0, d0)`.
    pub hyper: GgHyper,
    /// Learn `d0` per column under a `gamma(ε, ε)` hyper-prior.
    pub hyper_prior: bool,
    /// `ε`, shared by the noise and `d0` hyper-priors.
    pub eps: f64,
}

impl Default for GgSettings {
    fn default() -> Self {
        Self {
            hyper: GgHyper::default(),
            hyper_prior: false,
            eps: 1e-6,
        }
    }
}

impl GgSettings {
    /// Defaults with the `d0` hyper-prior switched on.
    pub fn with_hyper_prior() -> Self {
        Self {
            hyper_prior: true,
            ..Self::default()
        }
    }
}

/// Gaussian-gamma prior with the posteriors `Q(γ_l) = gamma(c_l, d_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GgPrior {
    /// `(c0, d0)`; with the hyper-prior `d0` is only the starting value.
    pub hyper: GgHyper,
    /// `c_l` (identical for all columns once updated).
    pub c: Vec<f64>,
    /// `d_l`.
    pub d: Vec<f64>,
    /// `E[d0_l]` in use by the `d_l` update.
    pub d0_mean: Vec<f64>,
    /// `Q(d0_l)` rate, present when the hyper-prior is on.
    pub d0_rate: Option<Vec<f64>>,
    /// `ε` of the `d0` hyper-prior.
    pub eps: f64,
    mean_gamma: Vec<f64>,
}

impl GgPrior {
    /// Prior for `l` columns with `E[γ_l] = 1` before the first update.
    pub fn new(l: usize, settings: &GgSettings) -> Result<Self> {
        let hyper = GgHyper::new(settings.hyper.c0, settings.hyper.d0)?;
        if settings.hyper_prior && !(settings.eps > 0.0) {
            return Err(Error::Config(format!("hyper-prior ε must be positive, got {}", settings.eps)));
        }
        Ok(Self {
            hyper,
            c: alloc::vec![hyper.c0; l],
            d: alloc::vec![hyper.c0; l],
            d0_mean: alloc::vec![hyper.d0; l],
            d0_rate: settings.hyper_prior.then(|| alloc::vec![1.0 + settings.eps; l]),
            eps: settings.eps,
            mean_gamma: alloc::vec![1.0; l],
        })
    }

    /// `E[γ_l]`.
    pub fn mean_gamma(&self) -> &[f64] {
        &self.mean_gamma
    }

    fn hyper_shape(&self) -> f64 {
        self.hyper.c0 + self.eps
    }
}

impl ColumnPrior for GgPrior {
    fn precisions(&self) -> &[f64] {
        &self.mean_gamma
    }

    fn update(&mut self, power: &[f64], z_dim: usize, _iteration: usize) -> Result<()> {
        let c = self.hyper.c0 + 0.5 * z_dim as f64;
        for (l, &p) in power.iter().enumerate() {
            self.c[l] = c;
            self.d[l] = self.d0_mean[l] + 0.5 * p;
            self.mean_gamma[l] = c / self.d[l];
        }
        Ok(())
    }

    fn update_hyper(&mut self, _iteration: usize) -> Result<()> {
        let shape = self.hyper_shape();
        if let Some(rate) = &mut self.d0_rate {
            for l in 0..rate.len() {
                rate[l] = self.mean_gamma[l] + self.eps;
                self.d0_mean[l] = shape / rate[l];
            }
        }
        Ok(())
    }

    fn retain(&mut self, keep: &[bool]) {
        retain_flagged(&mut self.c, keep);
        retain_flagged(&mut self.d, keep);
        retain_flagged(&mut self.d0_mean, keep);
        retain_flagged(&mut self.mean_gamma, keep);
        if let Some(rate) = &mut self.d0_rate {
            retain_flagged(rate, keep);
        }
    }

    fn elbo(&self, power: &[f64], z_dim: usize) -> Result<f64> {
        let z = z_dim as f64;
        let c0 = self.hyper.c0;
        let log_gamma_c0 = log_gamma(c0)?;
        let mut total = 0.0;
        for l in 0..power.len() {
            let e_gamma = self.mean_gamma[l];
            let e_log_gamma = digamma(self.c[l])? - log(self.d[l]);
            total += -0.5 * z * LN_2PI + 0.5 * z * e_log_gamma - 0.5 * e_gamma * power[l];
            total += gamma_entropy(self.c[l], self.d[l])?;
            match &self.d0_rate {
                None => {
                    let d0 = self.hyper.d0;
                    total += c0 * log(d0) - log_gamma_c0 + (c0 - 1.0) * e_log_gamma - d0 * e_gamma;
                }
                Some(rate) => {
                    let shape = self.hyper_shape();
                    let e_d0 = self.d0_mean[l];
                    let e_log_d0 = digamma(shape)? - log(rate[l]);
                    total += c0 * e_log_d0 - log_gamma_c0 + (c0 - 1.0) * e_log_gamma - e_d0 * e_gamma;
                    let eps = self.eps;
                    total += eps * log(eps) - log_gamma(eps)? + (eps - 1.0) * e_log_d0 - eps * e_d0;
                    total += gamma_entropy(shape, rate[l])?;
                }
            }
        }
        Ok(total)
    }

    fn z_powers(&self) -> Vec<f64> {
        self.mean_gamma.iter().map(|g| 1.0 / g).collect()
    }
}

/// Engine state under the Gaussian-gamma prior.
pub type GgState = VariationalState<GgPrior>;

/// Builds the initial state on the normalized observation, with the same
/// initializer as the GH engine.
pub fn init(y: &DenseTensor, opts: &FitOptions, settings: &GgSettings) -> Result<(GgState, Observation)> {
    opts.validate()?;
    let obs = Observation::normalized(y)?;
    let l = opts.rank_bound.resolve(y.dims())?;
    let prior = GgPrior::new(l, settings)?;
    let means = svd_init(&obs, l, opts.seed)?;
    let state = VariationalState::new(means, prior, settings.eps, opts.fixed_beta.map(|b| obs.normalized_precision(b)))?;
    Ok((state, obs))
}

/// Fits with default Gaussian-gamma settings (no hyper-prior).
pub fn fit_gg(y: &DenseTensor, opts: &FitOptions) -> Result<FitReport> {
    fit_with(y, opts, &GgSettings::default())
}

/// Fits with explicit settings.
pub fn fit_with(y: &DenseTensor, opts: &FitOptions, settings: &GgSettings) -> Result<FitReport> {
    let (mut state, obs) = init(y, opts, settings)?;
    run(&mut state, &obs, opts)
}
