//! Inference engine shared by the column priors.
//!
//! A fit alternates closed-form updates of the mean-field factors
//!
//! ```text
//! Q(U⁽¹⁾) … Q(U⁽ᴺ⁾)   matrix normal, one per mode (Gauss–Seidel order)
//! Q(column scales)     prior specific, see `ColumnPrior`
//! Q(β)                 gamma on the noise precision
//! hyper-parameters     prior specific point estimates
//! ```
//!
//! then prunes columns whose magnitude fell below a relative threshold and
//! stops when the reconstruction no longer moves.

use alloc::format;
use alloc::vec::Vec;

use libm::{ceil, log, pow, sqrt};
use nalgebra::DMatrix;

use crate::linalg::{select_columns, select_square, spd_inverse_logdet, spd_logdet};
use crate::special::{digamma, gamma_entropy, log_gamma};
use crate::tensor::{hadamard_gram_excluding, khatri_rao_excluding, reconstruct, unfold, DenseTensor, KruskalModel};
use crate::{Error, Result};

pub(crate) const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// How the initial column count `L` is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankBound {
    /// Exactly this many columns.
    Explicit(usize),
    /// `ceil(factor · max J_n)` columns.
    Factor(f64),
}

impl RankBound {
    /// Column count for a tensor of the given shape.
    pub fn resolve(&self, dims: &[usize]) -> Result<usize> {
        let l = match *self {
            RankBound::Explicit(l) => l,
            RankBound::Factor(f) => {
                if !(f > 0.0) || !f.is_finite() {
                    return Err(Error::Config(format!("rank bound factor must be positive, got {f}")));
                }
                let max_j = dims.iter().copied().max().unwrap_or(0) as f64;
                ceil(f * max_j) as usize
            }
        };
        if l < 1 {
            return Err(Error::Config("rank bound must be at least 1".into()));
        }
        Ok(l)
    }
}

/// Which column magnitude the pruning rule compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PruneMagnitude {
    /// `(Σ_n ‖M⁽ⁿ⁾_{:,l}‖²)^{1/2}` over posterior means only.
    Mean,
    /// `(Σ_n ‖M⁽ⁿ⁾_{:,l}‖² + J_n Σ⁽ⁿ⁾_{ll})^{1/2}`, the posterior second moment.
    SecondMoment,
}

/// Knobs of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    /// Initial number of columns.
    pub rank_bound: RankBound,
    /// Upper limit on full sweeps.
    pub max_iters: usize,
    /// Stop when `‖X_t − X_{t−1}‖ / ‖X_{t−1}‖` drops below this.
    pub tol: f64,
    /// Prune columns with magnitude below this fraction of the largest.
    pub prune_rel_threshold: f64,
    /// Disable to keep every column (used for ELBO traces).
    pub prune: bool,
    /// Magnitude used by the pruning rule.
    pub prune_magnitude: PruneMagnitude,
    /// Update the noise precision on sweeps `t` with `t % period == 0`.
    pub noise_update_period: usize,
    /// Hold `E[β]` at this value (in the units of the input) instead of learning it.
    pub fixed_beta: Option<f64>,
    /// Seed for the random padding columns of the initializer.
    pub seed: u64,
    /// Record the ELBO after every sweep.
    pub compute_elbo: bool,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            rank_bound: RankBound::Factor(1.0),
            max_iters: 500,
            tol: 1e-6,
            prune_rel_threshold: 1e-4,
            prune: true,
            prune_magnitude: PruneMagnitude::Mean,
            noise_update_period: 1,
            fixed_beta: None,
            seed: 0,
            compute_elbo: false,
        }
    }
}

impl FitOptions {
    /// Rejects out-of-range knobs.
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        if !(self.prune_rel_threshold > 0.0 && self.prune_rel_threshold < 1.0) {
            return Err(Error::Config(format!(
                "prune threshold must lie in (0, 1), got {}",
                self.prune_rel_threshold
            )));
        }
        if self.noise_update_period < 1 {
            return Err(Error::Config("noise update period must be at least 1".into()));
        }
        if let Some(b) = self.fixed_beta {
            if !(b > 0.0) || !b.is_finite() {
                return Err(Error::Config(format!("fixed noise precision must be positive, got {b}")));
            }
        }
        Ok(())
    }
}

/// `Q(β) = gamma(e, f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisePosterior {
    /// Shape.
    pub e: f64,
    /// Rate.
    pub f: f64,
}

impl NoisePosterior {
    /// `E[β] = e/f`.
    pub fn mean(&self) -> f64 {
        self.e / self.f
    }

    /// `E[ln β] = ψ(e) − ln f`.
    pub fn mean_log(&self) -> Result<f64> {
        Ok(digamma(self.e)? - log(self.f))
    }
}

/// Outcome of a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    /// Number of surviving columns.
    pub estimated_rank: usize,
    /// Column count the fit started from.
    pub rank_bound: usize,
    /// Posterior means of the surviving factor columns.
    pub model: KruskalModel,
    /// Learnt scale power of each surviving column.
    pub z_powers: Vec<f64>,
    /// Final noise posterior.
    pub noise: NoisePosterior,
    /// Noise precision in effect at the end (`E[β]` or the fixed value).
    pub noise_precision: f64,
    /// Factor the input was divided by before fitting.
    pub data_scale: f64,
    /// ELBO of the normalized problem after each sweep, empty unless requested.
    pub elbo_trace: Vec<f64>,
    /// Column count after each sweep.
    pub rank_trace: Vec<usize>,
    /// Sweeps performed.
    pub iterations_run: usize,
    /// Whether the tolerance was met before `max_iters`.
    pub converged: bool,
    /// Filled in by callers that can read a clock.
    pub wall_time_seconds: f64,
}

/// Mode unfoldings and norm of the observed tensor, computed once per fit.
///
/// The engine works on `y / scale`; [`run`] maps its results back to the
/// units of `y`.
#[derive(Debug, Clone)]
pub struct Observation {
    dims: Vec<usize>,
    unfoldings: Vec<DMatrix<f64>>,
    norm_sq: f64,
    scale: f64,
}

impl Observation {
    /// Precomputes every unfolding of `y`.
    pub fn new(y: &DenseTensor) -> Result<Self> {
        if y.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("observed tensor has non-finite entries".into()));
        }
        let unfoldings = (0..y.ndims()).map(|k| unfold(y, k)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dims: y.dims().to_vec(),
            unfoldings,
            norm_sq: y.values().iter().map(|v| v * v).sum(),
            scale: 1.0,
        })
    }

    /// Unfoldings of `y / s`, where `s` is the largest leading singular value
    /// over all unfoldings divided by `√(Π J_n)`.
    ///
    /// A rank-one tensor with factor entries of unit power has `s ≈ 1`, and
    /// `s(c·y) = c·s(y)`, so fits on `y` and `c·y` see the same numbers.
    pub fn normalized(y: &DenseTensor) -> Result<Self> {
        let mut obs = Self::new(y)?;
        let top = obs
            .unfoldings
            .iter()
            .map(|u| crate::linalg::left_singular(u).1[0])
            .fold(0.0, f64::max);
        if !(top > 0.0) {
            return Err(Error::Domain("observed tensor is identically zero".into()));
        }
        let s = top / sqrt(obs.len() as f64);
        for u in &mut obs.unfoldings {
            *u /= s;
        }
        obs.norm_sq = obs.unfoldings[0].norm_squared();
        obs.scale = s;
        Ok(obs)
    }

    /// Factor the input was divided by.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// A noise precision in the units of the input, expressed for `y / scale`.
    pub fn normalized_precision(&self, beta: f64) -> f64 {
        beta * self.scale * self.scale
    }

    /// Tensor shape.
    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    /// Mode-`k` unfolding.
    pub fn unfolding(&self, k: usize) -> &DMatrix<f64> {
        &self.unfoldings[k]
    }

    /// `‖Y‖²`.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// Number of entries.
    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    /// Always false; tensors have no zero-length modes.
    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A prior over the factor columns, seen through the quantities the shared
/// engine needs.
pub trait ColumnPrior: Clone {
    /// `E[precision_l]` entering the factor covariance diagonal.
    fn precisions(&self) -> &[f64];

    /// Refreshes the scale posteriors given `power_l = Σ_n E‖U⁽ⁿ⁾_{:,l}‖²`
    /// and `Z = Σ_n J_n`.
    fn update(&mut self, power: &[f64], z_dim: usize, iteration: usize) -> Result<()>;

    /// Point update of the hyper-parameters.
    fn update_hyper(&mut self, iteration: usize) -> Result<()>;

    /// Keeps only the flagged columns.
    fn retain(&mut self, keep: &[bool]);

    /// Prior-side ELBO terms: `E ln p(U | scales) + E ln p(scales) − E ln q(scales)`
    /// plus any hyper-prior terms.
    fn elbo(&self, power: &[f64], z_dim: usize) -> Result<f64>;

    /// Learnt variance scale of each column.
    fn z_powers(&self) -> Vec<f64>;
}

/// Variational posterior of the factors and noise, generic over the column prior.
#[derive(Debug, Clone)]
pub struct VariationalState<P> {
    /// Posterior means `M⁽ⁿ⁾`, `J_n × L`.
    pub means: Vec<DMatrix<f64>>,
    /// Row covariances `Σ⁽ⁿ⁾`, `L × L`.
    pub covs: Vec<DMatrix<f64>>,
    /// `ln det Σ⁽ⁿ⁾`.
    pub cov_logdets: Vec<f64>,
    /// Column prior and its posterior.
    pub prior: P,
    /// `Q(β)`.
    pub noise: NoisePosterior,
    /// Noise hyper `ε` of `p(β) = gamma(ε, ε)`.
    pub noise_eps: f64,
    /// When set, `β` is held at this value.
    pub fixed_beta: Option<f64>,
    /// Completed sweeps.
    pub iteration: usize,
    /// `(k, Y(k)·(⊙_{n≠k} M⁽ⁿ⁾))` from the latest factor update.
    mttkrp: Option<(usize, DMatrix<f64>)>,
}

impl<P: ColumnPrior> VariationalState<P> {
    /// State with the given means, identity covariances and `Q(β) = gamma(ε, ε)`.
    pub fn new(means: Vec<DMatrix<f64>>, prior: P, noise_eps: f64, fixed_beta: Option<f64>) -> Result<Self> {
        let l = means.first().map(|m| m.ncols()).unwrap_or(0);
        if means.len() < 2 || means.iter().any(|m| m.ncols() != l) || l == 0 {
            return Err(Error::Shape("need N ≥ 2 factor means with a common, nonzero column count".into()));
        }
        if prior.precisions().len() != l {
            return Err(Error::Shape(format!(
                "prior has {} columns, factors have {l}",
                prior.precisions().len()
            )));
        }
        let n = means.len();
        Ok(Self {
            means,
            covs: (0..n).map(|_| DMatrix::identity(l, l)).collect(),
            cov_logdets: alloc::vec![0.0; n],
            prior,
            noise: NoisePosterior {
                e: noise_eps,
                f: noise_eps,
            },
            noise_eps,
            fixed_beta,
            iteration: 0,
            mttkrp: None,
        })
    }

    /// Current column count.
    pub fn rank(&self) -> usize {
        self.means[0].ncols()
    }

    /// Noise precision in effect.
    pub fn beta(&self) -> f64 {
        self.fixed_beta.unwrap_or_else(|| self.noise.mean())
    }

    fn mode_sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.means.iter().map(|m| m.nrows())
    }

    fn z_dim(&self) -> usize {
        self.mode_sizes().sum()
    }

    /// `E[U⁽ⁿ⁾ᵀU⁽ⁿ⁾] = M⁽ⁿ⁾ᵀM⁽ⁿ⁾ + J_n Σ⁽ⁿ⁾` for every mode.
    pub fn grams(&self) -> Vec<DMatrix<f64>> {
        self.means
            .iter()
            .zip(&self.covs)
            .map(|(m, s)| m.tr_mul(m) + s * (m.nrows() as f64))
            .collect()
    }

    /// `Σ_n E‖U⁽ⁿ⁾_{:,l}‖²` per column.
    pub fn column_power(&self) -> Vec<f64> {
        let l = self.rank();
        let mut power = alloc::vec![0.0; l];
        for (m, s) in self.means.iter().zip(&self.covs) {
            let j = m.nrows() as f64;
            for (c, p) in power.iter_mut().enumerate() {
                *p += m.column(c).norm_squared() + j * s[(c, c)];
            }
        }
        power
    }

    /// Pruning magnitude of every column.
    pub fn column_magnitudes(&self, kind: PruneMagnitude) -> Vec<f64> {
        match kind {
            PruneMagnitude::SecondMoment => self.column_power().into_iter().map(sqrt).collect(),
            PruneMagnitude::Mean => (0..self.rank())
                .map(|c| sqrt(self.means.iter().map(|m| m.column(c).norm_squared()).sum::<f64>()))
                .collect(),
        }
    }

    /// Refreshes `Q(U⁽ᵏ⁾)` from the current posteriors of every other factor.
    pub fn update_factor(&mut self, obs: &Observation, k: usize) -> Result<()> {
        let l = self.rank();
        let beta = self.beta();
        let grams = self.grams();
        let mut precision = hadamard_gram_excluding(&grams, Some(k))? * beta;
        for (c, p) in self.prior.precisions().iter().enumerate() {
            precision[(c, c)] += p;
        }
        let (cov, logdet) = spd_inverse_logdet(&precision).ok_or_else(|| Error::Numerical {
            iteration: self.iteration + 1,
            detail: format!("mode-{k} precision ({l}×{l}) is not positive definite"),
        })?;
        let kr = khatri_rao_excluding(&self.means, Some(k))?;
        let mttkrp = obs.unfolding(k) * kr;
        self.means[k] = (&mttkrp * beta) * &cov;
        self.covs[k] = cov;
        self.cov_logdets[k] = logdet;
        self.mttkrp = Some((k, mttkrp));
        Ok(())
    }

    /// `⟨Y, ⟦M⁽¹⁾, …, M⁽ᴺ⁾⟧⟩`.
    fn data_inner(&self, obs: &Observation) -> Result<f64> {
        let (k, p) = match &self.mttkrp {
            Some((k, p)) => (*k, p.clone()),
            None => (0, obs.unfolding(0) * khatri_rao_excluding(&self.means, Some(0))?),
        };
        Ok(self.means[k].component_mul(&p).sum())
    }

    /// `E‖Y − ⟦U⁽¹⁾, …, U⁽ᴺ⁾⟧‖²` under the factor posteriors.
    pub fn expected_residual(&self, obs: &Observation) -> Result<f64> {
        let grams = self.grams();
        let second = hadamard_gram_excluding(&grams, None)?.sum();
        Ok(obs.norm_sq() + second - 2.0 * self.data_inner(obs)?)
    }

    /// Refreshes `Q(β)`. A no-op when `β` is fixed.
    pub fn update_noise(&mut self, obs: &Observation) -> Result<()> {
        if self.fixed_beta.is_some() {
            return Ok(());
        }
        let resid = self.expected_residual(obs)?;
        if !(resid > 0.0) {
            return Err(Error::Numerical {
                iteration: self.iteration + 1,
                detail: format!("expected residual {resid} is not positive"),
            });
        }
        self.noise = NoisePosterior {
            e: self.noise_eps + 0.5 * obs.len() as f64,
            f: self.noise_eps + 0.5 * resid,
        };
        Ok(())
    }

    /// One full sweep: every factor, the column scales, the noise (when due)
    /// and the hyper-parameters.
    pub fn sweep(&mut self, obs: &Observation, noise_update_period: usize) -> Result<()> {
        let t = self.iteration + 1;
        for k in 0..self.means.len() {
            self.update_factor(obs, k)?;
        }
        let power = self.column_power();
        let z_dim = self.z_dim();
        self.prior.update(&power, z_dim, t)?;
        if t % noise_update_period == 0 {
            self.update_noise(obs)?;
        }
        self.prior.update_hyper(t)?;
        self.iteration = t;
        Ok(())
    }

    /// Evidence lower bound of the current posteriors, up to constants that
    /// do not depend on any variational or hyper-parameter.
    pub fn elbo(&self, obs: &Observation) -> Result<f64> {
        let p = obs.len() as f64;
        let resid = self.expected_residual(obs)?;
        let (e_beta, e_log_beta) = match self.fixed_beta {
            Some(b) => (b, log(b)),
            None => (self.noise.mean(), self.noise.mean_log()?),
        };
        let mut total = -0.5 * p * LN_2PI + 0.5 * p * e_log_beta - 0.5 * e_beta * resid;
        if self.fixed_beta.is_none() {
            let eps = self.noise_eps;
            total += eps * log(eps) - log_gamma(eps)? + (eps - 1.0) * e_log_beta - eps * e_beta;
            total += gamma_entropy(self.noise.e, self.noise.f)?;
        }
        let l = self.rank() as f64;
        for (m, logdet) in self.means.iter().zip(&self.cov_logdets) {
            let j = m.nrows() as f64;
            total += 0.5 * j * l * (1.0 + LN_2PI) + 0.5 * j * logdet;
        }
        total += self.prior.elbo(&self.column_power(), self.z_dim())?;
        Ok(total)
    }

    /// Drops columns whose magnitude is below `threshold` times the largest.
    /// Returns the number removed; at least one column always survives.
    pub fn prune(&mut self, threshold: f64, kind: PruneMagnitude) -> Result<usize> {
        let mags = self.column_magnitudes(kind);
        let max = mags.iter().copied().fold(0.0, f64::max);
        let mut keep: Vec<bool> = mags.iter().map(|&m| m >= threshold * max && m > 0.0).collect();
        if !keep.iter().any(|&k| k) {
            let best = mags
                .iter()
                .enumerate()
                .fold(0, |b, (i, &m)| if m > mags[b] { i } else { b });
            keep[best] = true;
        }
        let removed = keep.iter().filter(|&&k| !k).count();
        if removed == 0 {
            return Ok(0);
        }
        self.retain(&keep)?;
        Ok(removed)
    }

    /// Keeps only the flagged columns everywhere in the state.
    pub fn retain(&mut self, keep: &[bool]) -> Result<()> {
        for m in &mut self.means {
            *m = select_columns(m, keep);
        }
        for (s, logdet) in self.covs.iter_mut().zip(&mut self.cov_logdets) {
            *s = select_square(s, keep);
            *logdet = spd_logdet(s).ok_or_else(|| Error::Numerical {
                iteration: self.iteration,
                detail: "retained covariance block is not positive definite".into(),
            })?;
        }
        if let Some((_, p)) = &mut self.mttkrp {
            *p = select_columns(p, keep);
        }
        self.prior.retain(keep);
        Ok(())
    }

    /// `⟦M⁽¹⁾, …, M⁽ᴺ⁾⟧`.
    pub fn reconstruct(&self) -> DenseTensor {
        reconstruct(&self.means)
    }
}

/// Keeps the entries of `v` whose flag is set.
pub(crate) fn retain_flagged<T>(v: &mut Vec<T>, keep: &[bool]) {
    let mut flags = keep.iter();
    v.retain(|_| *flags.next().unwrap_or(&false));
}

fn rel_change(prev: &DenseTensor, cur: &DenseTensor) -> f64 {
    let mut diff = 0.0;
    let mut base = 0.0;
    for (a, b) in prev.values().iter().zip(cur.values()) {
        diff += (a - b) * (a - b);
        base += a * a;
    }
    if base > 0.0 {
        sqrt(diff / base)
    } else if diff > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Runs sweeps until convergence or `opts.max_iters`, pruning as configured.
pub fn run<P: ColumnPrior>(
    state: &mut VariationalState<P>,
    obs: &Observation,
    opts: &FitOptions,
) -> Result<FitReport> {
    opts.validate()?;
    let rank_bound = state.rank();
    let mut elbo_trace = Vec::new();
    let mut rank_trace = Vec::new();
    let mut prev = state.reconstruct();
    let mut converged = false;
    while state.iteration < opts.max_iters {
        state.sweep(obs, opts.noise_update_period)?;
        if opts.compute_elbo {
            elbo_trace.push(state.elbo(obs)?);
        }
        let pruned = if opts.prune {
            state.prune(opts.prune_rel_threshold, opts.prune_magnitude)?
        } else {
            0
        };
        rank_trace.push(state.rank());
        let cur = state.reconstruct();
        let change = rel_change(&prev, &cur);
        prev = cur;
        if pruned == 0 && change < opts.tol {
            converged = true;
            break;
        }
    }
    // Back to the units of the input: factors by s^{1/N}, variances by s^{2/N}.
    let s = obs.scale();
    let n = state.means.len() as f64;
    let factor_scale = pow(s, 1.0 / n);
    let model = KruskalModel::new(state.means.iter().map(|m| m * factor_scale).collect())?;
    Ok(FitReport {
        estimated_rank: state.rank(),
        rank_bound,
        model,
        z_powers: state.prior.z_powers().into_iter().map(|z| z * factor_scale * factor_scale).collect(),
        noise: NoisePosterior {
            e: state.noise.e,
            f: state.noise.f * s * s,
        },
        noise_precision: state.beta() / (s * s),
        data_scale: s,
        elbo_trace,
        rank_trace,
        iterations_run: state.iteration,
        converged,
        wall_time_seconds: 0.0,
    })
}

/// Initial factor means from the leading left singular vectors of each
/// unfolding, `U_{:,1:L} S^{1/2}`, padded with standard-normal columns when
/// `L > J_n`.
pub fn svd_init(obs: &Observation, l: usize, seed: u64) -> Result<Vec<DMatrix<f64>>> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(crate::synth::derive_seed(seed, 0));
    let dims = obs.dims();
    let total: usize = dims.iter().product();
    let mut means = Vec::with_capacity(dims.len());
    for (k, &j) in dims.iter().enumerate() {
        if l > total / j {
            log::warn!(
                "rank bound {l} exceeds the {} columns of the mode-{k} unfolding",
                total / j
            );
        }
        let (u, s) = crate::linalg::left_singular(obs.unfolding(k));
        let mut m = DMatrix::zeros(j, l);
        for c in 0..l {
            if c < j {
                let scale = sqrt(s[c]);
                for r in 0..j {
                    m[(r, c)] = u[(r, c)] * scale;
                }
            } else {
                for r in 0..j {
                    m[(r, c)] = StandardNormal.sample(&mut rng);
                }
            }
        }
        means.push(m);
    }
    Ok(means)
}
