//! Special functions used by the variational updates and the ELBO.
//!
//! `K_ν(x)` is evaluated in log scale: orders around −75 are routine in the
//! inference loop, and `K` itself under- or overflows there. The base pair
//! `K_μ, K_{μ+1}` with `|μ| ≤ 1/2` comes from Temme's series (`x < 2`) or
//! Steed's continued fraction (`x ≥ 2`), and the order is then raised by the
//! forward recurrence carried as a ratio `K_{m+1}/K_m`, which is stable for `K`.

use alloc::format;

use libm::{cosh, exp, fabs, floor, log, sin, sinh, sqrt, tgamma};

use crate::{Error, Result};

const EPS: f64 = 1e-16;
const MAX_SERIES_TERMS: usize = 10_000;
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const TEMME_SWITCH: f64 = 2.0;

/// Base-order state produced by the series or the continued fraction.
struct Ladder {
    /// ln K_ν at the requested order.
    log_k: f64,
    /// K_{ν+1}/K_ν.
    ratio_up: f64,
}

/// Returns `(1/Γ(1-μ) - 1/Γ(1+μ)) / (2μ)` and `(1/Γ(1-μ) + 1/Γ(1+μ)) / 2`
/// together with `1/Γ(1+μ)` and `1/Γ(1-μ)`, for `|μ| ≤ 1/2`.
fn temme_gammas(mu: f64) -> (f64, f64, f64, f64) {
    let gampl = 1.0 / tgamma(1.0 + mu);
    let gammi = 1.0 / tgamma(1.0 - mu);
    let gam2 = 0.5 * (gammi + gampl);
    // Odd Taylor coefficients of 1/Γ(1+z) avoid the cancellation near μ = 0.
    let gam1 = if fabs(mu) < 1e-3 {
        let m2 = mu * mu;
        -(EULER_GAMMA - 0.042_002_635_034_095_2 * m2 - 0.042_197_734_555_544_3 * m2 * m2)
    } else {
        (gammi - gampl) / (2.0 * mu)
    };
    (gam1, gam2, gampl, gammi)
}

/// `ln K_μ(x)` and `K_{μ+1}/K_μ` for `|μ| ≤ 1/2`, `x > 0`.
fn base_pair(mu: f64, x: f64) -> Ladder {
    let xi = 1.0 / x;
    if x < TEMME_SWITCH {
        let x2 = 0.5 * x;
        let pimu = core::f64::consts::PI * mu;
        let fact = if fabs(pimu) < EPS { 1.0 } else { pimu / sin(pimu) };
        let d = -log(x2);
        let e = mu * d;
        let fact2 = if fabs(e) < EPS { 1.0 } else { sinh(e) / e };
        let (gam1, gam2, gampl, gammi) = temme_gammas(mu);
        let mut ff = fact * (gam1 * cosh(e) + gam2 * fact2 * d);
        let mut sum = ff;
        let ee = exp(e);
        let mut p = 0.5 * ee / gampl;
        let mut q = 0.5 / (ee * gammi);
        let mut c = 1.0;
        let dd = x2 * x2;
        let mut sum1 = p;
        for i in 1..MAX_SERIES_TERMS {
            let fi = i as f64;
            ff = (fi * ff + p + q) / (fi * fi - mu * mu);
            c *= dd / fi;
            p /= fi - mu;
            q /= fi + mu;
            let del = c * ff;
            sum += del;
            sum1 += c * (p - fi * ff);
            if fabs(del) < fabs(sum) * EPS {
                break;
            }
        }
        let k_mu = sum;
        let k_mu1 = sum1 * 2.0 * xi;
        Ladder {
            log_k: log(k_mu),
            ratio_up: k_mu1 / k_mu,
        }
    } else {
        let mut b = 2.0 * (1.0 + x);
        let mut d = 1.0 / b;
        let mut h = d;
        let mut delh = d;
        let mut q1 = 0.0;
        let mut q2 = 1.0;
        let a1 = 0.25 - mu * mu;
        let mut q = a1;
        let mut c = a1;
        let mut a = -a1;
        let mut s = 1.0 + q * delh;
        for i in 1..MAX_SERIES_TERMS {
            let fi = i as f64;
            a -= 2.0 * fi;
            c = -a * c / (fi + 1.0);
            let qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            let dels = q * delh;
            s += dels;
            if fabs(dels / s) < EPS {
                break;
            }
        }
        let log_k = 0.5 * log(core::f64::consts::PI / (2.0 * x)) - x - log(s);
        Ladder {
            log_k,
            ratio_up: (mu + x + 0.5 - a1 * h) * xi,
        }
    }
}

/// `ln K_ν(x)` and `K_{ν+1}/K_ν` for `ν ≥ 0`.
fn ladder(nu: f64, x: f64) -> Ladder {
    debug_assert!(nu >= 0.0);
    let steps = floor(nu + 0.5);
    let mu = nu - steps;
    let mut state = base_pair(mu, x);
    let two_over_x = 2.0 / x;
    for i in 1..=(steps as usize) {
        state.log_k += log(state.ratio_up);
        state.ratio_up = (mu + i as f64) * two_over_x + 1.0 / state.ratio_up;
    }
    state
}

fn check_arg(nu: f64, x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Bessel K needs finite x > 0, got {x}")));
    }
    if !nu.is_finite() {
        return Err(Error::Domain(format!("Bessel K order must be finite, got {nu}")));
    }
    Ok(())
}

/// `ln K_ν(x)` for real order `ν` and `x > 0`.
pub fn log_bessel_k(nu: f64, x: f64) -> Result<f64> {
    check_arg(nu, x)?;
    let v = ladder(fabs(nu), x).log_k;
    if v.is_nan() {
        return Err(Error::Domain(format!("ln K_{nu}({x}) is not representable")));
    }
    Ok(v)
}

/// `ln(K_{ν+shift}(x) / K_ν(x))`.
///
/// Integer shifts between orders of the same sign walk the recurrence ratio
/// directly, so no large logarithms are subtracted.
pub fn bessel_k_log_ratio(nu: f64, x: f64, shift: f64) -> Result<f64> {
    check_arg(nu, x)?;
    if !shift.is_finite() {
        return Err(Error::Domain(format!("shift must be finite, got {shift}")));
    }
    if shift == 0.0 {
        return Ok(0.0);
    }
    let target = nu + shift;
    let same_side = (nu >= 0.0 && target >= 0.0) || (nu <= 0.0 && target <= 0.0);
    if shift != floor(shift) || !same_side || fabs(shift) > 1e6 {
        return Ok(log_bessel_k(target, x)? - log_bessel_k(nu, x)?);
    }
    // Orders |ν| and |ν+shift| on one recurrence chain; walk from the lower.
    let (from, to) = (fabs(nu), fabs(target));
    let (lo, hi, sign) = if to > from { (from, to, 1.0) } else { (to, from, -1.0) };
    let steps = (hi - lo + 0.5) as usize;
    let mut r = ladder(lo, x).ratio_up;
    let mut acc = 0.0;
    for i in 0..steps {
        acc += log(r);
        r = (lo + 1.0 + i as f64) * 2.0 / x + 1.0 / r;
    }
    Ok(sign * acc)
}

/// `∂/∂ν ln K_ν(x)` by a central difference with step `1e-5·max(1, |ν|)`.
pub fn log_bessel_k_order_derivative(nu: f64, x: f64) -> Result<f64> {
    let h = 1e-5 * fabs(nu).max(1.0);
    Ok((log_bessel_k(nu + h, x)? - log_bessel_k(nu - h, x)?) / (2.0 * h))
}

/// Natural log of the gamma function for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::Domain(format!("log_gamma needs x > 0, got {x}")));
    }
    Ok(libm::lgamma(x))
}

/// Digamma `ψ(x)` for `x > 0`.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("digamma needs finite x > 0, got {x}")));
    }
    let mut x = x;
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // Bernoulli-number asymptotic tail through x^-14.
    let tail = inv2
        * (1.0 / 12.0
            - inv2
                * (1.0 / 120.0
                    - inv2
                        * (1.0 / 252.0
                            - inv2 * (1.0 / 240.0 - inv2 * (1.0 / 132.0 - inv2 * (691.0 / 32760.0 - inv2 / 12.0))))));
    Ok(acc + log(x) - 0.5 * inv - tail)
}

/// Parameters of `GIG(z | a, b, λ) ∝ z^{λ-1} exp(-(a z + b/z)/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigParams {
    /// Rate on `z`.
    pub a: f64,
    /// Rate on `1/z`.
    pub b: f64,
    /// Order.
    pub lambda: f64,
}

impl GigParams {
    /// Checks `a > 0`, `b > 0` and a finite order.
    pub fn new(a: f64, b: f64, lambda: f64) -> Result<Self> {
        let p = Self { a, b, lambda };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.b > 0.0) || !self.a.is_finite() || !self.b.is_finite() {
            return Err(Error::Domain(format!(
                "GIG needs finite a > 0 and b > 0, got a={} b={}",
                self.a, self.b
            )));
        }
        if !self.lambda.is_finite() {
            return Err(Error::Domain(format!("GIG order {} not finite", self.lambda)));
        }
        Ok(())
    }

    /// `√(ab)`, the Bessel argument.
    pub fn omega(&self) -> f64 {
        sqrt(self.a * self.b)
    }

    /// `ln` of the normalizing constant `(a/b)^{λ/2} / (2 K_λ(√(ab)))`.
    pub fn log_normalizer(&self) -> Result<f64> {
        self.validate()?;
        Ok(0.5 * self.lambda * log(self.a / self.b)
            - core::f64::consts::LN_2
            - log_bessel_k(self.lambda, self.omega())?)
    }
}

/// First moments of a GIG distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GigMoments {
    /// `E[z]`.
    pub mean: f64,
    /// `E[1/z]`.
    pub mean_inv: f64,
    /// `E[ln z]`.
    pub mean_log: f64,
}

/// `E[z]` and `E[1/z]` only (two recurrence walks, no order derivative).
pub fn gig_mean_and_inverse(p: &GigParams) -> Result<(f64, f64)> {
    p.validate()?;
    let w = p.omega();
    let scale = sqrt(p.b / p.a);
    let up = bessel_k_log_ratio(p.lambda, w, 1.0)?;
    let down = bessel_k_log_ratio(p.lambda, w, -1.0)?;
    Ok((scale * exp(up), exp(down) / scale))
}

/// `E[z]`, `E[1/z]` and `E[ln z]` under `GIG(a, b, λ)`.
pub fn gig_moments(p: &GigParams) -> Result<GigMoments> {
    let (mean, mean_inv) = gig_mean_and_inverse(p)?;
    let mean_log = 0.5 * log(p.b / p.a) + log_bessel_k_order_derivative(p.lambda, p.omega())?;
    Ok(GigMoments {
        mean,
        mean_inv,
        mean_log,
    })
}

/// Differential entropy of `GIG(a, b, λ)` given its moments.
pub fn gig_entropy(p: &GigParams, m: &GigMoments) -> Result<f64> {
    Ok(-(p.log_normalizer()? + (p.lambda - 1.0) * m.mean_log
        - 0.5 * p.a * m.mean
        - 0.5 * p.b * m.mean_inv))
}

/// Differential entropy of `gamma(shape, rate)`.
pub fn gamma_entropy(shape: f64, rate: f64) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0) {
        return Err(Error::Domain(format!(
            "gamma needs shape, rate > 0, got {shape}, {rate}"
        )));
    }
    Ok(log_gamma(shape)? - (shape - 1.0) * digamma(shape)? - log(rate) + shape)
}
