use pcpd_core::priors::{
    gh_logpdf, gh_logpdf_closed_form, gh_student_t_limit_logpdf, gig_logpdf, laplacian_logpdf,
    student_t_marginal_logpdf, GgHyper, GhHyper,
};
use pcpd_core::special::GigParams;
use pcpd_oracle::quad;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `ln ∫₀^∞ N(v | 0, z I) GIG(z | a, b, λ) dz` with the oracle rule.
fn gh_by_oracle(v: &[f64], h: &GhHyper) -> f64 {
    let z = v.len() as f64;
    let r2: f64 = v.iter().map(|x| x * x).sum();
    let log_norm = GigParams::new(h.a0, h.b0, h.lambda0).unwrap().log_normalizer().unwrap();
    let order = h.lambda0 - z / 2.0;
    log_norm - 0.5 * z * LN_2PI
        + quad::log_integral_positive(&|s: f64| (order - 1.0) * s.ln() - 0.5 * (h.a0 * s + (h.b0 + r2) / s))
}

#[test]
fn gig_density_is_normalized() {
    for &(a, b, l) in &[(1.0, 1.0, 0.0), (0.01, 30.0, -75.0), (5.0, 0.2, 4.5)] {
        let p = GigParams::new(a, b, l).unwrap();
        let mass = quad::log_integral_positive(&|z: f64| gig_logpdf(z, &p).unwrap());
        assert!(mass.abs() < 1e-8, "GIG({a},{b},{l}) log-mass {mass}");
    }
}

#[test]
fn gig_mode_is_a_maximum() {
    let (a, b, l) = (1.0, 1.0, -0.5);
    let p = GigParams::new(a, b, l).unwrap();
    let mode = ((l - 1.0) + ((l - 1.0f64).powi(2) + a * b).sqrt()) / a;
    let h = 1e-5;
    let at = |z| gig_logpdf(z, &p).unwrap();
    let slope = (at(mode + h) - at(mode - h)) / (2.0 * h);
    assert!(slope.abs() < 1e-8, "slope {slope}");
    assert!(at(mode) > at(mode * 1.01) && at(mode) > at(mode * 0.99));
}

#[test]
fn gh_quadrature_matches_oracle_and_closed_form_on_random_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..60 {
        let z_dim = rng.random_range(1..=12);
        let v: Vec<f64> = (0..z_dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let h = GhHyper::new(
            rng.random_range(-4.0f64..3.0).exp(),
            rng.random_range(-4.0f64..3.0).exp(),
            rng.random_range(-20.0..10.0),
        )
        .unwrap();
        let q = gh_logpdf(&v, &h).unwrap();
        let c = gh_logpdf_closed_form(&v, &h).unwrap();
        let o = gh_by_oracle(&v, &h);
        assert!((q - c).abs() <= 1e-6, "{h:?} {v:?}: quadrature {q} vs closed {c}");
        assert!((q - o).abs() <= 1e-6, "{h:?} {v:?}: quadrature {q} vs oracle {o}");
    }
}

#[test]
fn closed_form_at_b0_zero_matches_small_b0() {
    let v = [0.5, -1.0, 0.25];
    let exact = gh_logpdf_closed_form(&v, &GhHyper { a0: 0.8, b0: 0.0, lambda0: 2.5 }).unwrap();
    let near = gh_logpdf(&v, &GhHyper::new(0.8, 1e-12, 2.5).unwrap()).unwrap();
    assert!((exact - near).abs() < 1e-6, "{exact} vs {near}");
}

#[test]
fn student_t_limit_at_origin() {
    let v = [0.0; 3];
    let gh = gh_logpdf(&v, &GhHyper::new(1e-10, 1.0, -2.0).unwrap()).unwrap();
    let st = gh_student_t_limit_logpdf(&v, 1.0, -2.0).unwrap();
    assert!((gh - st).abs() <= 1e-6, "{gh} vs {st}");
}

#[test]
fn student_t_limit_away_from_origin() {
    for v in [[0.3, -1.2, 2.0], [4.0, 0.0, 0.0]] {
        let gh = gh_logpdf(&v, &GhHyper::new(1e-12, 1.5, -3.0).unwrap()).unwrap();
        let st = gh_student_t_limit_logpdf(&v, 1.5, -3.0).unwrap();
        assert!((gh - st).abs() <= 1e-6, "{gh} vs {st}");
    }
}

#[test]
fn laplacian_limit_has_linear_log_slope() {
    let a0 = 1.7;
    for z_dim in [1usize, 3, 10] {
        let h = GhHyper::new(a0, 1e-12, z_dim as f64 / 2.0 + 0.5).unwrap();
        let mut base = vec![0.0; z_dim];
        base[0] = 0.4;
        let d1 = gh_logpdf(&base, &h).unwrap();
        let d1_lap = laplacian_logpdf(&base, a0).unwrap();
        assert!((d1 - d1_lap).abs() < 1e-5, "Z={z_dim}: {d1} vs {d1_lap}");
        for r in [0.8, 1.5, 3.0] {
            let mut far = vec![0.0; z_dim];
            far[z_dim - 1] = r;
            let d2 = gh_logpdf(&far, &h).unwrap();
            let want = -a0.sqrt() * (r - 0.4);
            assert!(((d2 - d1) - want).abs() < 1e-5, "Z={z_dim} r={r}: {} vs {want}", d2 - d1);
        }
    }
}

#[test]
fn order_one_above_half_dimension_is_not_laplacian() {
    // One unit of order above Z/2 leaves an r·K_1(√a r) profile.
    let (a0, z_dim) = (1.0, 3usize);
    let h = GhHyper::new(a0, 1e-12, z_dim as f64 / 2.0 + 1.0).unwrap();
    let d1 = gh_logpdf(&[0.4, 0.0, 0.0], &h).unwrap();
    let d2 = gh_logpdf(&[3.0, 0.0, 0.0], &h).unwrap();
    assert!(((d2 - d1) + 2.6).abs() > 1e-2);
}

#[test]
fn student_t_marginal_matches_oracle() {
    for (v, c0, d0) in [(vec![0.0, 0.0], 1.0, 1.0), (vec![0.5, -2.0, 1.0], 3.2, 0.7), (vec![10.0], 0.5, 2.0)] {
        let r2: f64 = v.iter().map(|x: &f64| x * x).sum();
        let z = v.len() as f64;
        let log_norm = c0 * f64::ln(d0) - statrs::function::gamma::ln_gamma(c0) - 0.5 * z * LN_2PI;
        let want = log_norm
            + quad::log_integral_positive(&|g: f64| (c0 - 1.0 + 0.5 * z) * g.ln() - g * (d0 + 0.5 * r2));
        let got = student_t_marginal_logpdf(&v, &GgHyper::new(c0, d0).unwrap()).unwrap();
        assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0), "{got} vs {want}");
    }
}

proptest! {
    #[test]
    fn kl_between_gig_densities_is_nonnegative(
        q in (-3.0f64..3.0, -3.0f64..3.0, -40.0f64..10.0),
        p in (-3.0f64..3.0, -3.0f64..3.0, -40.0f64..10.0),
    ) {
        let qp = GigParams::new(q.0.exp(), q.1.exp(), q.2).unwrap();
        let pp = GigParams::new(p.0.exp(), p.1.exp(), p.2).unwrap();
        let m = pcpd_core::special::gig_moments(&qp).unwrap();
        let cross = pp.log_normalizer().unwrap() + (pp.lambda - 1.0) * m.mean_log
            - 0.5 * (pp.a * m.mean + pp.b * m.mean_inv);
        let kl = -pcpd_core::special::gig_entropy(&qp, &m).unwrap() - cross;
        prop_assert!(kl >= -1e-9 * cross.abs().max(1.0), "KL {}", kl);
    }

    #[test]
    fn gig_density_rescales_with_its_argument(
        z in 1e-3f64..1e3,
        log_c in -5.0f64..5.0,
        a in 0.01f64..10.0,
        b in 0.01f64..10.0,
        lambda in -30.0f64..10.0,
    ) {
        let c = log_c.exp();
        let base = gig_logpdf(z, &GigParams::new(a, b, lambda).unwrap()).unwrap();
        let moved = gig_logpdf(c * z, &GigParams::new(a / c, b * c, lambda).unwrap()).unwrap() + c.ln();
        prop_assert!((base - moved).abs() <= 1e-10 * base.abs().max(1.0));
    }

    #[test]
    fn gh_density_is_even_and_radial(
        v in proptest::collection::vec(-3.0f64..3.0, 1..6),
        log_a in -2.0f64..2.0,
        log_b in -2.0f64..2.0,
        lambda in -10.0f64..5.0,
    ) {
        let h = GhHyper::new(log_a.exp(), log_b.exp(), lambda).unwrap();
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        prop_assert_eq!(gh_logpdf(&v, &h).unwrap(), gh_logpdf(&neg, &h).unwrap());
        let mut rev = v.clone();
        rev.reverse();
        prop_assert!((gh_logpdf(&v, &h).unwrap() - gh_logpdf(&rev, &h).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn student_t_marginal_decreases_with_radius(
        r in 0.0f64..10.0,
        dr in 1e-3f64..5.0,
        c0 in 0.1f64..10.0,
        d0 in 0.1f64..10.0,
    ) {
        let h = GgHyper::new(c0, d0).unwrap();
        let near = student_t_marginal_logpdf(&[r, 0.0], &h).unwrap();
        let far = student_t_marginal_logpdf(&[r + dr, 0.0], &h).unwrap();
        prop_assert!(far < near);
    }
}
