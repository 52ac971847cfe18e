//! Synthetic low-rank tensors, additive noise at a target SNR, and the
//! recovery metrics used to score fits.

use alloc::format;
use alloc::vec::Vec;

use libm::{log10, pow, sqrt};
use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::{DenseTensor, KruskalModel};
use crate::{Error, Result};

/// Independent 64-bit seed for sub-stream `stream` of `base`.
///
/// Counter based, so the value depends only on `(base, stream)` and never on
/// how many other streams were drawn before.
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(stream);
    rng.next_u64()
}

/// Distribution of the factor rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FactorCorrelation {
    /// Every entry i.i.d. `N(0, 1)`.
    #[default]
    Iid,
    /// Each row `N(0, F Fᵀ)` with a per-factor `F` of i.i.d. `N(0, 1)` entries.
    Correlated,
}

/// Recipe for a synthetic tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    /// Tensor shape.
    pub dims: Vec<usize>,
    /// Number of rank-one components.
    pub rank: usize,
    /// Target input SNR in dB; `None` leaves the tensor noise-free.
    pub snr_db: Option<f64>,
    /// Factor row distribution.
    pub correlation: FactorCorrelation,
    /// Seed for factors and noise.
    pub seed: u64,
}

impl SynthSpec {
    /// Noise-free spec with i.i.d. factors.
    pub fn iid(dims: Vec<usize>, rank: usize, seed: u64) -> Self {
        Self {
            dims,
            rank,
            snr_db: None,
            correlation: FactorCorrelation::Iid,
            seed,
        }
    }

    /// Same spec with additive noise at `snr_db`.
    pub fn with_snr(mut self, snr_db: f64) -> Self {
        self.snr_db = Some(snr_db);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.rank < 1 {
            return Err(Error::Config("synthetic rank must be at least 1".into()));
        }
        if let Some(s) = self.snr_db {
            if !s.is_finite() {
                return Err(Error::Config(format!("SNR must be finite, got {s}")));
            }
        }
        Ok(())
    }
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    // Row-major draw order so the stream does not depend on storage layout.
    let mut m = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            m[(r, c)] = StandardNormal.sample(rng);
        }
    }
    m
}

/// Random factors and the clean tensor `⟦U⁽¹⁾, …, U⁽ᴺ⁾⟧` they generate.
pub fn gen_cpd(spec: &SynthSpec) -> Result<(DenseTensor, KruskalModel)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, 0));
    let r = spec.rank;
    let factors = spec
        .dims
        .iter()
        .map(|&j| match spec.correlation {
            FactorCorrelation::Iid => normal_matrix(j, r, &mut rng),
            FactorCorrelation::Correlated => {
                let f = normal_matrix(r, r, &mut rng);
                // Rows g_iᵀ Fᵀ have covariance F Fᵀ.
                normal_matrix(j, r, &mut rng) * f.transpose()
            }
        })
        .collect();
    let model = KruskalModel::new(factors)?;
    let x = model.reconstruct();
    Ok((x, model))
}

/// Clean tensor, plus its noisy observation when the spec carries an SNR.
pub fn gen_observation(spec: &SynthSpec) -> Result<(DenseTensor, DenseTensor, KruskalModel)> {
    let (x, model) = gen_cpd(spec)?;
    let y = match spec.snr_db {
        Some(snr) => add_noise(&x, snr, spec.seed)?,
        None => x.clone(),
    };
    Ok((x, y, model))
}

/// Population variance over all entries.
pub fn variance(t: &DenseTensor) -> f64 {
    let n = t.len() as f64;
    let mean = t.values().iter().sum::<f64>() / n;
    t.values().iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

/// `x + w` with `w` i.i.d. `N(0, var(x)/10^{snr/10})`.
pub fn add_noise(x: &DenseTensor, snr_db: f64, seed: u64) -> Result<DenseTensor> {
    if !snr_db.is_finite() {
        return Err(Error::Config(format!("SNR must be finite, got {snr_db}")));
    }
    let var = variance(x);
    if !(var > 0.0) {
        return Err(Error::Domain("cannot set an SNR for a constant tensor".into()));
    }
    let sigma = sqrt(var / pow(10.0, snr_db / 10.0));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut y = x.clone();
    for v in y.values_mut() {
        let w: f64 = StandardNormal.sample(&mut rng);
        *v += sigma * w;
    }
    Ok(y)
}

fn diff_norm_sq(a: &DenseTensor, b: &DenseTensor) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!("{:?} vs {:?}", a.dims(), b.dims())));
    }
    Ok(a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum())
}

fn norm_sq(a: &DenseTensor) -> f64 {
    a.values().iter().map(|v| v * v).sum()
}

/// `√(‖x − x̂‖² / Π J_n)`.
pub fn rmse(x_true: &DenseTensor, x_hat: &DenseTensor) -> Result<f64> {
    Ok(sqrt(diff_norm_sq(x_true, x_hat)? / x_true.len() as f64))
}

/// `(1 − ‖x̂ − x‖/‖x‖) · 100`.
pub fn fit_value(x_ref: &DenseTensor, x_hat: &DenseTensor) -> Result<f64> {
    let base = norm_sq(x_ref);
    if !(base > 0.0) {
        return Err(Error::Domain("fit is undefined for a zero reference tensor".into()));
    }
    Ok((1.0 - sqrt(diff_norm_sq(x_ref, x_hat)? / base)) * 100.0)
}

/// `10 log10(‖x̂‖² / ‖y − x̂‖²)`; `+∞` when `x̂ = y`.
pub fn snr_output(y_in: &DenseTensor, x_hat: &DenseTensor) -> Result<f64> {
    let resid = diff_norm_sq(y_in, x_hat)?;
    if resid == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * log10(norm_sq(x_hat) / resid))
}
