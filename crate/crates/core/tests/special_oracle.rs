use pcpd_core::special::{
    bessel_k_log_ratio, digamma, gamma_entropy, gig_entropy, gig_moments, log_bessel_k, log_gamma, GigParams,
};
use pcpd_oracle::quad;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

#[test]
fn bessel_matches_integral_on_random_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for _ in 0..150 {
        let x = log_uniform(&mut rng, 1e-6, 1e4);
        let nu = rng.random_range(-200.0..200.0);
        let got = log_bessel_k(nu, x).unwrap();
        let want = quad::log_bessel_k(nu, x);
        // |Δ ln K| bounds the relative error of K.
        let err = (got - want).abs();
        worst = worst.max(err);
        assert!(err <= 1e-10, "nu={nu} x={x}: {got} vs {want}");
    }
    eprintln!("worst |Δ ln K| = {worst:.2e}");
}

#[test]
fn bessel_edges_of_validated_box() {
    for &x in &[1e-6, 1e-3, 0.5, 1.999, 2.0, 2.001, 30.0, 1e4] {
        for &nu in &[0.0, 1e-4, 0.5, 1.0, 2.5, 37.3, 75.5, 199.9, 200.0] {
            let got = log_bessel_k(nu, x).unwrap();
            let want = quad::log_bessel_k(nu, x);
            assert!((got - want).abs() <= 1e-10, "nu={nu} x={x}: {got} vs {want}");
        }
    }
}

#[test]
fn bessel_reference_values() {
    let half = log_bessel_k(0.5, 1.0).unwrap();
    assert!((half - ((std::f64::consts::PI / 2.0).sqrt() * (-1.0f64).exp()).ln()).abs() < 1e-14);
    assert!((half.exp() - 0.461_068_504_447_894_4).abs() < 1e-14);
    assert_eq!(log_bessel_k(-3.0, 2.0).unwrap(), log_bessel_k(3.0, 2.0).unwrap());
    let v = log_bessel_k(75.5, 0.01).unwrap();
    let q = quad::log_bessel_k(75.5, 0.01);
    assert!((v - q).abs() <= 1e-10 * q.abs(), "{v} vs {q}");
}

#[test]
fn log_ratio_examples() {
    assert_eq!(bessel_k_log_ratio(3.7, 1.2, 0.0).unwrap(), 0.0);
    assert!(bessel_k_log_ratio(-0.5, 3.0, 1.0).unwrap().abs() < 1e-14);
    let got = bessel_k_log_ratio(10.0, 0.5, -1.0).unwrap();
    let want = quad::log_bessel_k(9.0, 0.5) - quad::log_bessel_k(10.0, 0.5);
    assert!((got - want).abs() <= 1e-9 * want.abs(), "{got} vs {want}");
}

#[test]
fn symmetry_and_recurrence_on_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..400 {
        let x = log_uniform(&mut rng, 1e-6, 1e4);
        let nu = rng.random_range(-199.0..199.0);
        let a = log_bessel_k(nu, x).unwrap();
        let b = log_bessel_k(-nu, x).unwrap();
        assert!((a - b).abs() <= 1e-12, "symmetry nu={nu} x={x}");
        // K_{ν+1} = K_{ν−1} + (2ν/x) K_ν, arranged so both right-hand terms
        // are positive and compared relative to the largest order.
        let up = log_bessel_k(nu + 1.0, x).unwrap();
        let down = log_bessel_k(nu - 1.0, x).unwrap();
        let rhs = if nu >= 0.0 {
            (down - up).exp() + 2.0 * nu / x * (a - up).exp()
        } else {
            (up - down).exp() - 2.0 * nu / x * (a - down).exp()
        };
        assert!((rhs - 1.0).abs() <= 1e-9, "recurrence nu={nu} x={x}: {rhs}");
    }
}

fn rel_close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs().max(1.0)
}

#[test]
fn gig_moments_match_quadrature_on_random_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..100 {
        let lambda = rng.random_range(-80.0..10.0);
        let omega = log_uniform(&mut rng, 1e-3, 1e3);
        let ratio = log_uniform(&mut rng, 1e-2, 1e2);
        // a·b = ω², b/a = ratio²
        let (a, b) = (omega / ratio, omega * ratio);
        let m = gig_moments(&GigParams::new(a, b, lambda).unwrap()).unwrap();
        let (mean, mean_inv, mean_log) = quad::gig_moments(a, b, lambda);
        assert!(rel_close(m.mean, mean, 1e-8), "E[z] at ({a},{b},{lambda}): {} vs {mean}", m.mean);
        assert!(rel_close(m.mean_inv, mean_inv, 1e-8), "E[1/z] at ({a},{b},{lambda}): {} vs {mean_inv}", m.mean_inv);
        assert!(rel_close(m.mean_log, mean_log, 1e-8), "E[ln z] at ({a},{b},{lambda}): {} vs {mean_log}", m.mean_log);
        assert!(m.mean * m.mean_inv >= 1.0);
    }
}

#[test]
fn gig_moment_examples() {
    let ig = gig_moments(&GigParams::new(4.0, 1.0, -0.5).unwrap()).unwrap();
    assert!((ig.mean_inv - 3.0).abs() < 1e-13);
    let m = gig_moments(&GigParams::new(0.7, 5.1, 2.3).unwrap()).unwrap();
    let (mean, mean_inv, mean_log) = quad::gig_moments(0.7, 5.1, 2.3);
    assert!(rel_close(m.mean, mean, 1e-8));
    assert!(rel_close(m.mean_inv, mean_inv, 1e-8));
    assert!(rel_close(m.mean_log, mean_log, 1e-8));
}

#[test]
fn entropies_match_quadrature() {
    for &(e, f) in &[(1.0, 1.0), (13500.0, 4000.0), (0.3, 2.0), (45.0, 1e-3)] {
        let got = gamma_entropy(e, f).unwrap();
        let want = quad::entropy_positive(&|z: f64| (e - 1.0) * z.ln() - f * z);
        assert!(rel_close(got, want, 1e-8), "gamma({e},{f}): {got} vs {want}");
    }
    for &(a, b, l) in &[(1.0, 1.0, 0.0), (0.3, 40.0, -75.0), (2.0, 0.01, 3.5)] {
        let p = GigParams::new(a, b, l).unwrap();
        let got = gig_entropy(&p, &gig_moments(&p).unwrap()).unwrap();
        let want = quad::entropy_positive(&|z: f64| (l - 1.0) * z.ln() - 0.5 * (a * z + b / z));
        assert!(rel_close(got, want, 1e-8), "GIG({a},{b},{l}): {got} vs {want}");
    }
}

#[test]
fn digamma_and_log_gamma_reference() {
    // Euler–Mascheroni constant from its defining limit H_n − ln n − 1/(2n) + 1/(12n²).
    let n = 1.0e6f64;
    let harmonic: f64 = (1..=1_000_000u32).rev().map(|k| 1.0 / k as f64).sum();
    let gamma = harmonic - n.ln() - 1.0 / (2.0 * n) + 1.0 / (12.0 * n * n);
    assert!((digamma(1.0).unwrap() + gamma).abs() < 1e-12);
    assert_eq!(log_gamma(1.0).unwrap(), 0.0);
    assert!((log_gamma(5.0).unwrap() - 24f64.ln()).abs() < 1e-14);
    assert!(digamma(0.0).is_err() && log_gamma(-1.0).is_err());
}

proptest! {
    #[test]
    fn digamma_and_log_gamma_agree_with_statrs(x in 1e-3f64..1e3) {
        let d = digamma(x).unwrap();
        let want = statrs::function::gamma::digamma(x);
        prop_assert!((d - want).abs() <= 1e-12 * want.abs().max(1.0));
        let g = log_gamma(x).unwrap();
        let want = statrs::function::gamma::ln_gamma(x);
        prop_assert!((g - want).abs() <= 1e-12 * want.abs().max(1.0));
    }

    #[test]
    fn mean_times_inverse_mean_at_least_one(
        lambda in -100.0f64..20.0,
        log_a in -8.0f64..8.0,
        log_b in -8.0f64..8.0,
    ) {
        let p = GigParams::new(log_a.exp(), log_b.exp(), lambda).unwrap();
        let m = gig_moments(&p).unwrap();
        prop_assert!(m.mean * m.mean_inv >= 1.0 - 1e-12);
    }
}
