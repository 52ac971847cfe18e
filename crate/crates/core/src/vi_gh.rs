//! Rank learning with the generalized hyperbolic (GH) column prior.
//!
//! Each column group `v_l = [U⁽¹⁾_{:,l}; …; U⁽ᴺ⁾_{:,l}]` has the scale mixture
//! prior `v_l | z_l ~ N(0, z_l I)`, `z_l ~ GIG(a0_l, b0, λ0)`, with a gamma
//! hyper-prior `gamma(a0_l | κ1, κ2)` driving the point update of `a0_l`.
//! The posterior of `z_l` is `GIG(a_l, b_l, λ_l)` with
//!
//! ```text
//! a_l = a0_l,   b_l = b0 + E‖v_l‖²,   λ_l = λ0 − Z/2
//! ```
//!
//! where `Z = Σ_n J_n`.

use alloc::format;
use alloc::vec::Vec;

use libm::log;

use crate::engine::{retain_flagged, run, svd_init, ColumnPrior, FitOptions, FitReport, Observation, VariationalState, LN_2PI};
use crate::special::{gig_entropy, gig_moments, GigMoments, GigParams};
use crate::tensor::DenseTensor;
use crate::{Error, Result};

/// Lower bound on `b_l`, reached only by columns that are exactly zero.
pub const B_FLOOR: f64 = 1e-12;

/// Hyper-parameter choices for the GH prior. `None` picks the defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhSettings {
    /// Prior order `λ0`; defaults to `−min J_n`.
    pub lambda0: Option<f64>,
    /// Hyper-prior shape `κ1`; defaults to `2 − λ0/2`.
    pub kappa1: Option<f64>,
    /// Hyper-prior rate `κ2`.
    pub kappa2: f64,
    /// Starting value of every `a0_l`.
    pub a0_init: f64,
    /// Noise hyper `ε`.
    pub noise_eps: f64,
}

impl Default for GhSettings {
    fn default() -> Self {
        Self {
            lambda0: None,
            kappa1: None,
            kappa2: 1e-6,
            a0_init: 1.0,
            noise_eps: 1e-6,
        }
    }
}

/// GH prior over the columns together with the GIG posteriors `Q(z_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GhPrior {
    /// `a0_l`.
    pub a0: Vec<f64>,
    /// `b0`, zero by default.
    pub b0: f64,
    /// `λ0`.
    pub lambda0: f64,
    /// Hyper-prior shape.
    pub kappa1: f64,
    /// Hyper-prior rate.
    pub kappa2: f64,
    /// `Q(z_l)` parameters, `None` before the first scale update.
    pub posterior: Option<Vec<GigParams>>,
    /// Cached moments of `Q(z_l)`.
    pub moments: Vec<GigMoments>,
    mean_inv: Vec<f64>,
}

impl GhPrior {
    /// Prior with `E[1/z_l] = 1` for all `l` columns.
    pub fn new(l: usize, lambda0: f64, kappa1: f64, kappa2: f64, a0_init: f64) -> Result<Self> {
        if kappa1 + 0.5 * lambda0 - 1.0 <= 0.0 {
            return Err(Error::Config(format!(
                "κ1 + λ0/2 − 1 must be positive for the a0 update, got κ1={kappa1}, λ0={lambda0}"
            )));
        }
        if !(kappa2 >= 0.0) || !(a0_init > 0.0) {
            return Err(Error::Config(format!("need κ2 ≥ 0 and a0 > 0, got {kappa2}, {a0_init}")));
        }
        Ok(Self {
            a0: alloc::vec![a0_init; l],
            b0: 0.0,
            lambda0,
            kappa1,
            kappa2,
            posterior: None,
            moments: alloc::vec![
                GigMoments {
                    mean: 1.0,
                    mean_inv: 1.0,
                    mean_log: 0.0
                };
                l
            ],
            mean_inv: alloc::vec![1.0; l],
        })
    }

    /// Posterior order `λ0 − Z/2`, the same for every column and sweep.
    pub fn posterior_order(&self, z_dim: usize) -> f64 {
        self.lambda0 - 0.5 * z_dim as f64
    }
}

impl ColumnPrior for GhPrior {
    fn precisions(&self) -> &[f64] {
        &self.mean_inv
    }

    fn update(&mut self, power: &[f64], z_dim: usize, iteration: usize) -> Result<()> {
        let lambda = self.posterior_order(z_dim);
        let mut post = Vec::with_capacity(power.len());
        for (l, &p) in power.iter().enumerate() {
            let b = (self.b0 + p).max(B_FLOOR);
            let params = GigParams::new(self.a0[l], b, lambda).map_err(|e| Error::Numerical {
                iteration,
                detail: format!("column {l} scale posterior: {e}"),
            })?;
            let m = gig_moments(&params).map_err(|e| Error::Numerical {
                iteration,
                detail: format!("column {l} scale moments: {e}"),
            })?;
            self.moments[l] = m;
            self.mean_inv[l] = m.mean_inv;
            post.push(params);
        }
        self.posterior = Some(post);
        Ok(())
    }

    fn update_hyper(&mut self, _iteration: usize) -> Result<()> {
        let num = self.kappa1 + 0.5 * self.lambda0 - 1.0;
        for (a0, m) in self.a0.iter_mut().zip(&self.moments) {
            *a0 = num / (self.kappa2 + 0.5 * m.mean);
        }
        Ok(())
    }

    fn retain(&mut self, keep: &[bool]) {
        retain_flagged(&mut self.a0, keep);
        retain_flagged(&mut self.moments, keep);
        retain_flagged(&mut self.mean_inv, keep);
        if let Some(post) = &mut self.posterior {
            retain_flagged(post, keep);
        }
    }

    fn elbo(&self, power: &[f64], z_dim: usize) -> Result<f64> {
        let Some(post) = &self.posterior else {
            return Err(Error::Config("ELBO needs at least one scale update".into()));
        };
        let z = z_dim as f64;
        let mut total = 0.0;
        for l in 0..power.len() {
            let m = &self.moments[l];
            let a0 = self.a0[l];
            // E ln N(v_l | 0, z_l I)
            total += -0.5 * z * LN_2PI - 0.5 * z * m.mean_log - 0.5 * m.mean_inv * power[l];
            // E ln GIG(z_l | a0, b0, λ0) without the a0-free normalizer part
            total += 0.5 * self.lambda0 * log(a0) + (self.lambda0 - 1.0) * m.mean_log
                - 0.5 * a0 * m.mean
                - 0.5 * self.b0 * m.mean_inv;
            total += gig_entropy(&post[l], m)?;
            // gamma(a0 | κ1, κ2) hyper-prior, up to a constant
            total += (self.kappa1 - 1.0) * log(a0) - self.kappa2 * a0;
        }
        Ok(total)
    }

    fn z_powers(&self) -> Vec<f64> {
        self.moments.iter().map(|m| m.mean).collect()
    }
}

/// Engine state under the GH prior.
pub type GhState = VariationalState<GhPrior>;

/// Builds the initial state on the normalized observation: SVD factor means,
/// identity covariances, `E[1/z_l] = 1`, `Q(β) = gamma(ε, ε)`.
pub fn init(y: &DenseTensor, opts: &FitOptions, settings: &GhSettings) -> Result<(GhState, Observation)> {
    opts.validate()?;
    let obs = Observation::normalized(y)?;
    let l = opts.rank_bound.resolve(y.dims())?;
    let min_j = y.dims().iter().copied().min().unwrap_or(1) as f64;
    let lambda0 = settings.lambda0.unwrap_or(-min_j);
    let kappa1 = settings.kappa1.unwrap_or(2.0 - 0.5 * lambda0);
    let prior = GhPrior::new(l, lambda0, kappa1, settings.kappa2, settings.a0_init)?;
    let means = svd_init(&obs, l, opts.seed)?;
    let state = VariationalState::new(means, prior, settings.noise_eps, opts.fixed_beta.map(|b| obs.normalized_precision(b)))?;
    Ok((state, obs))
}

/// Fits with default GH settings.
pub fn fit(y: &DenseTensor, opts: &FitOptions) -> Result<FitReport> {
    fit_with(y, opts, &GhSettings::default())
}

/// Fits with explicit GH settings.
pub fn fit_with(y: &DenseTensor, opts: &FitOptions, settings: &GhSettings) -> Result<FitReport> {
    let (mut state, obs) = init(y, opts, settings)?;
    run(&mut state, &obs, opts)
}
