//! Adaptive Gauss–Kronrod quadrature for integrands given in log scale.

use alloc::vec::Vec;

use libm::{exp, fabs, log};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;
/// Log-drop from the peak beyond which the integrand is treated as zero.
const TAIL_DROP: f64 = 60.0;

#[derive(Clone, Copy)]
struct Piece {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

fn gk15(f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> Piece {
    let center = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Piece {
        lo,
        hi,
        value: kronrod * half,
        error: fabs((kronrod - gauss) * half),
    }
}

/// `∫_lo^hi f(u) du` by globally adaptive bisection until the summed error
/// estimate falls below `rel_tol · |integral|`.
pub fn integrate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, rel_tol: f64) -> f64 {
    let mut pieces: Vec<Piece> = Vec::with_capacity(64);
    // Start from a few panels so narrow peaks are not missed.
    let panels = 8;
    let width = (hi - lo) / panels as f64;
    for i in 0..panels {
        let a = lo + width * i as f64;
        let b = if i + 1 == panels { hi } else { a + width };
        pieces.push(gk15(&f, a, b));
    }
    loop {
        let total: f64 = pieces.iter().map(|p| p.value).sum();
        let err: f64 = pieces.iter().map(|p| p.error).sum();
        if err <= rel_tol * fabs(total) || pieces.len() >= MAX_INTERVALS {
            return total;
        }
        let (worst, _) = pieces
            .iter()
            .enumerate()
            .fold((0, -1.0), |acc, (i, p)| if p.error > acc.1 { (i, p.error) } else { acc });
        let p = pieces.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        pieces.push(gk15(&f, p.lo, mid));
        pieces.push(gk15(&f, mid, p.hi));
    }
}

/// `ln ∫ exp(log_f(u)) du` over ℝ for a unimodal log-integrand.
///
/// `mode` must be (close to) the maximizer and `scale` a rough width; the
/// bracket is widened by doubling until the integrand has dropped by
/// `e^-60` relative to the peak on both sides.
pub fn log_integrate_unimodal(log_f: impl Fn(f64) -> f64, mode: f64, scale: f64, rel_tol: f64) -> f64 {
    let peak = log_f(mode);
    let bracket = |dir: f64| {
        let mut step = scale.max(1e-12);
        for _ in 0..200 {
            let u = mode + dir * step;
            if log_f(u) < peak - TAIL_DROP {
                return u;
            }
            step *= 2.0;
        }
        mode + dir * step
    };
    let lo = bracket(-1.0);
    let hi = bracket(1.0);
    let shifted = |u: f64| exp(log_f(u) - peak);
    // Split at the mode so each side is monotone.
    let left = integrate(&shifted, lo, mode, rel_tol);
    let right = integrate(&shifted, mode, hi, rel_tol);
    peak + log(left + right)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral() {
        let v = log_integrate_unimodal(|u| -0.5 * u * u, 0.0, 1.0, 1e-13);
        let expected = 0.5 * log(2.0 * core::f64::consts::PI);
        assert!(fabs(v - expected) < 1e-13);
    }

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x| x * x * x - 2.0 * x, 0.0, 2.0, 1e-14);
        assert!(fabs(v - 0.0) < 1e-13);
        let w = integrate(|x| x * x, 0.0, 3.0, 1e-14);
        assert!(fabs(w - 9.0) < 1e-13);
    }
}
