//! Log-densities of the column priors and their limiting forms.
//!
//! The generalized hyperbolic (GH) density of a column group `v ∈ ℝ^Z` is
//! defined by its Gaussian scale mixture
//!
//! ```text
//! GH(v | a, b, λ) = ∫ N(v | 0, z I) · GIG(z | a, b, λ) dz
//! ```
//!
//! and [`gh_logpdf`] evaluates exactly that integral numerically.
//! [`gh_logpdf_closed_form`] is the Bessel-function expression it reduces to.

use alloc::format;

use libm::{exp, log, sqrt};

use crate::quadrature::log_integrate_unimodal;
use crate::special::{log_bessel_k, log_gamma, GigParams};
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;
const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Hyper-parameters of a GH column prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GhHyper {
    /// Rate on the mixing variable, `a0 > 0`.
    pub a0: f64,
    /// Rate on its inverse, `b0 ≥ 0`.
    pub b0: f64,
    /// Order.
    pub lambda0: f64,
}

impl GhHyper {
    /// Checks `a0 > 0`, `b0 ≥ 0` and a finite order.
    pub fn new(a0: f64, b0: f64, lambda0: f64) -> Result<Self> {
        if !(a0 > 0.0) || !(b0 >= 0.0) || !a0.is_finite() || !b0.is_finite() || !lambda0.is_finite() {
            return Err(Error::Domain(format!(
                "GH hyper-parameters need a0 > 0, b0 ≥ 0, finite λ0; got ({a0}, {b0}, {lambda0})"
            )));
        }
        Ok(Self { a0, b0, lambda0 })
    }
}

/// Hyper-parameters of a Gaussian-gamma column prior.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GgHyper {
    /// Gamma shape.
    pub c0: f64,
    /// Gamma rate.
    pub d0: f64,
}

impl GgHyper {
    /// Checks `c0 > 0` and `d0 > 0`.
    pub fn new(c0: f64, d0: f64) -> Result<Self> {
        if !(c0 > 0.0 && d0 > 0.0) || !c0.is_finite() || !d0.is_finite() {
            return Err(Error::Domain(format!("gamma hyper-parameters need c0, d0 > 0; got ({c0}, {d0})")));
        }
        Ok(Self { c0, d0 })
    }
}

impl Default for GgHyper {
    fn default() -> Self {
        Self { c0: 1e-6, d0: 1e-6 }
    }
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// `ln GIG(z | a, b, λ)`.
pub fn gig_logpdf(z: f64, p: &GigParams) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::Domain(format!("GIG support is z > 0, got {z}")));
    }
    Ok(p.log_normalizer()? + (p.lambda - 1.0) * log(z) - 0.5 * (p.a * z + p.b / z))
}

/// `ln GH(v | a0, b0, λ0)` by quadrature of the scale mixture over `u = ln z`.
///
/// Needs `b0 > 0`; the `b0 → 0` limit is approached by taking `b0` small.
pub fn gh_logpdf(v: &[f64], h: &GhHyper) -> Result<f64> {
    let gig = GigParams::new(h.a0, h.b0, h.lambda0)?;
    let z_dim = v.len() as f64;
    let big_b = h.b0 + norm_sq(v);
    let order = h.lambda0 - 0.5 * z_dim;
    let a = h.a0;
    let log_norm = gig.log_normalizer()? - 0.5 * z_dim * LN_2PI;
    // Integrand in u: order·u − (a e^u + B e^{-u})/2, strictly concave.
    let log_f = |u: f64| order * u - 0.5 * (a * exp(u) + big_b * exp(-u));
    let s = sqrt(order * order + a * big_b);
    let z_mode = if order >= 0.0 { (order + s) / a } else { big_b / (s - order) };
    let curvature = 0.5 * (a * z_mode + big_b / z_mode);
    let mode = log(z_mode);
    Ok(log_norm + log_integrate_unimodal(log_f, mode, 1.0 / sqrt(curvature), 1e-13))
}

/// Closed form of [`gh_logpdf`]:
///
/// ```text
/// (a/b)^{λ/2} / (2 K_λ(√(ab))) · (2π)^{-Z/2} · 2 K_{λ-Z/2}(√(a(b+r²))) · ((b+r²)/a)^{(λ-Z/2)/2}
/// ```
///
/// with `r = ‖v‖`. Needs `b0 > 0`, or `b0 = 0` with `v ≠ 0`.
pub fn gh_logpdf_closed_form(v: &[f64], h: &GhHyper) -> Result<f64> {
    let z_dim = v.len() as f64;
    let big_b = h.b0 + norm_sq(v);
    if !(big_b > 0.0) {
        return Err(Error::Domain("closed-form GH density needs b0 + ‖v‖² > 0".into()));
    }
    let order = h.lambda0 - 0.5 * z_dim;
    let tail = log_bessel_k(order, sqrt(h.a0 * big_b))? + 0.5 * order * log(big_b / h.a0);
    let head = if h.b0 > 0.0 {
        GigParams::new(h.a0, h.b0, h.lambda0)?.log_normalizer()?
    } else if h.lambda0 > 0.0 {
        // b0 → 0 limit of (a/b)^{λ/2}/(2K_λ(√(ab))) is a^λ / (2^λ Γ(λ)).
        h.lambda0 * log(0.5 * h.a0) - log_gamma(h.lambda0)?
    } else {
        return Err(Error::Domain("b0 = 0 needs λ0 > 0 for a proper density".into()));
    };
    Ok(head - 0.5 * z_dim * LN_2PI + core::f64::consts::LN_2 + tail)
}

/// Multivariate student-t marginal of the Gaussian-gamma prior,
/// `∫ N(v | 0, γ⁻¹ I) · gamma(γ | c0, d0) dγ`, in log scale.
pub fn student_t_marginal_logpdf(v: &[f64], h: &GgHyper) -> Result<f64> {
    let half_z = 0.5 * v.len() as f64;
    let shape = h.c0 + half_z;
    Ok(h.c0 * log(h.d0) - log_gamma(h.c0)? + log_gamma(shape)? - half_z * LN_2PI
        - shape * log(h.d0 + 0.5 * norm_sq(v)))
}

/// `a0 → 0` limit of the GH density for `λ0 < 0`:
///
/// ```text
/// π^{-Z/2} Γ(-λ + Z/2) / (b^λ Γ(-λ)) · (b + r²)^{λ - Z/2}
/// ```
pub fn gh_student_t_limit_logpdf(v: &[f64], b0: f64, lambda0: f64) -> Result<f64> {
    if !(b0 > 0.0) || !(lambda0 < 0.0) {
        return Err(Error::Domain(format!("student-t limit needs b0 > 0 and λ0 < 0; got ({b0}, {lambda0})")));
    }
    let half_z = 0.5 * v.len() as f64;
    Ok(-half_z * LN_PI + log_gamma(half_z - lambda0)? - lambda0 * log(b0) - log_gamma(-lambda0)?
        + (lambda0 - half_z) * log(b0 + norm_sq(v)))
}

/// Normalized Laplacian density `∝ exp(-√a ‖v‖)` on `ℝ^Z`, the `b0 → 0`
/// limit of the GH density at order `λ0 = Z/2 + 1/2`.
pub fn laplacian_logpdf(v: &[f64], a0: f64) -> Result<f64> {
    if !(a0 > 0.0) || v.is_empty() {
        return Err(Error::Domain(format!("Laplacian needs a0 > 0 and Z ≥ 1; got a0={a0}")));
    }
    let z_dim = v.len() as f64;
    let half_z = 0.5 * z_dim;
    // ∫ exp(-√a r) dv = 2 π^{Z/2} Γ(Z) / (Γ(Z/2) a^{Z/2}).
    let log_mass = core::f64::consts::LN_2 + half_z * LN_PI + log_gamma(z_dim)? - log_gamma(half_z)? - half_z * log(a0);
    Ok(-sqrt(a0) * sqrt(norm_sq(v)) - log_mass)
}
