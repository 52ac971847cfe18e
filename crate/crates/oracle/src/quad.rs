//! Brute-force composite Gauss–Legendre quadrature in log-shifted form.

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

const ORDER: usize = 20;
const PANELS: usize = 600;
const DROP: f64 = 70.0;

struct Grid {
    points: Vec<f64>,
    weights: Vec<f64>,
}

fn grid(lo: f64, hi: f64) -> Grid {
    let (x, w) = gauss_legendre(ORDER);
    let h = (hi - lo) / PANELS as f64;
    let mut points = Vec::with_capacity(PANELS * ORDER);
    let mut weights = Vec::with_capacity(PANELS * ORDER);
    for p in 0..PANELS {
        let c = lo + h * (p as f64 + 0.5);
        for j in 0..ORDER {
            points.push(c + 0.5 * h * x[j]);
            weights.push(0.5 * h * w[j]);
        }
    }
    Grid { points, weights }
}

/// Interval outside which `log_f` is more than `DROP` below its maximum,
/// found by scanning `[lo, hi]` with step `step`.
pub fn bracket(log_f: &impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> (f64, f64) {
    let n = ((hi - lo) / step).ceil() as usize;
    let vals: Vec<f64> = (0..=n).map(|i| log_f(lo + step * i as f64)).collect();
    let peak = vals.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    let first = vals.iter().position(|&v| v > peak - DROP).unwrap();
    let last = vals.iter().rposition(|&v| v > peak - DROP).unwrap();
    (
        lo + step * first.saturating_sub(1) as f64,
        lo + step * (last + 1).min(n) as f64,
    )
}

/// `(ln ∫ e^{log_f}, ∫ h e^{log_f} / ∫ e^{log_f})` over `[lo, hi]`.
pub fn log_integral_with_mean(log_f: &impl Fn(f64) -> f64, h: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> (f64, f64) {
    let g = grid(lo, hi);
    let vals: Vec<f64> = g.points.iter().map(|&u| log_f(u)).collect();
    let peak = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut mass = 0.0;
    let mut first = 0.0;
    for ((&u, &w), &v) in g.points.iter().zip(&g.weights).zip(&vals) {
        let e = w * (v - peak).exp();
        mass += e;
        first += e * h(u);
    }
    (peak + mass.ln(), first / mass)
}

/// `ln ∫ e^{log_f}` over `[lo, hi]`.
pub fn log_integral(log_f: &impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    log_integral_with_mean(log_f, &|_| 0.0, lo, hi).0
}

/// `ln ∫₀^∞ e^{log_f(z)} dz`, integrating over `u = ln z ∈ [-250, 250]`.
pub fn log_integral_positive(log_f: &impl Fn(f64) -> f64) -> f64 {
    let lf = |u: f64| log_f(u.exp()) + u;
    let (lo, hi) = bracket(&lf, -250.0, 250.0, 0.01);
    log_integral(&lf, lo, hi)
}

/// `E[h(z)]` under the density `∝ e^{log_f(z)}` on `(0, ∞)`.
pub fn mean_positive(log_f: &impl Fn(f64) -> f64, h: &impl Fn(f64) -> f64) -> f64 {
    let lf = |u: f64| log_f(u.exp()) + u;
    let (lo, hi) = bracket(&lf, -250.0, 250.0, 0.01);
    log_integral_with_mean(&lf, &|u: f64| h(u.exp()), lo, hi).1
}

fn ln_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln K_ν(x)` from `K_ν(x) = ∫₀^∞ exp(−x cosh t) cosh(νt) dt`.
pub fn log_bessel_k(nu: f64, x: f64) -> f64 {
    let log_f = |t: f64| -x * t.cosh() + ln_cosh(nu * t);
    // The integrand peaks near asinh(|ν|/x) and then falls like exp(-x e^t/2).
    let peak = (nu.abs() / x).asinh();
    let mut hi = peak + 1.0;
    let top = log_f(peak).max(log_f(0.0));
    while log_f(hi) > top - DROP {
        hi += 0.5;
    }
    let (lo, hi) = bracket(&log_f, 0.0, hi, hi / 20_000.0);
    log_integral(&log_f, lo.max(0.0), hi)
}

/// `(E[z], E[1/z], E[ln z])` of `GIG(a, b, λ) ∝ z^{λ−1} e^{−(az + b/z)/2}`.
pub fn gig_moments(a: f64, b: f64, lambda: f64) -> (f64, f64, f64) {
    let base = |k: f64| move |z: f64| (lambda - 1.0 + k) * z.ln() - 0.5 * (a * z + b / z);
    let l0 = log_integral_positive(&base(0.0));
    let l1 = log_integral_positive(&base(1.0));
    let lm = log_integral_positive(&base(-1.0));
    let mean_log = mean_positive(&base(0.0), &|z: f64| z.ln());
    ((l1 - l0).exp(), (lm - l0).exp(), mean_log)
}

/// Differential entropy of a density `∝ e^{log_f}` on `(0, ∞)`.
pub fn entropy_positive(log_f: &impl Fn(f64) -> f64) -> f64 {
    let log_norm = log_integral_positive(log_f);
    -mean_positive(log_f, &|z| log_f(z) - log_norm)
}
