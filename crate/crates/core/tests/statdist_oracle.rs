use gwascombine_core::statdist::ks::ks_one_sample;
use gwascombine_core::statdist::{
    central_sf, chisq_isf, chisq_quantile, f_isf, f_quantile, normal_cdf, normal_isf, normal_quantile, normal_sf,
    stream_id, ChiSquareNoncentral, FNoncentral, GaussHermiteRule, RngStream,
};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF, Discrete, FisherSnedecor, Normal, Poisson};

/// Noncentral χ² survival as a Poisson mixture of central χ² tails.
fn ncx2_sf_series(df: u32, delta: f64, x: f64) -> f64 {
    if delta == 0.0 {
        return ChiSquared::new(df as f64).unwrap().sf(x);
    }
    let pois = Poisson::new(delta / 2.0).unwrap();
    (0..2000u64).map(|j| pois.pmf(j) * ChiSquared::new(df as f64 + 2.0 * j as f64).unwrap().sf(x)).sum()
}

fn ncx1_normal_form(delta: f64, x: f64) -> f64 {
    let std = Normal::standard();
    let (rx, rd) = (x.sqrt(), delta.sqrt());
    std.cdf(rx - rd) - std.cdf(-rx - rd)
}

#[test]
fn one_df_matches_normal_form() {
    for delta in [0.0, 0.5, 2.0, 10.0, 50.0] {
        for x in [0.01, 0.5, 1.0, 3.84, 10.0, 30.0, 80.0] {
            let got = ChiSquareNoncentral::new(1, delta).unwrap().cdf(x).unwrap();
            let want = ncx1_normal_form(delta, x);
            assert!((got - want).abs() < 1e-10, "delta={delta} x={x}: {got} vs {want}");
        }
    }
}

#[test]
fn central_chi_square_matches_statrs() {
    for df in [1u32, 2, 5, 10, 20] {
        let d = ChiSquared::new(df as f64).unwrap();
        for x in [0.05, 0.7, 2.0, 6.0, 15.0, 40.0] {
            let ours = ChiSquareNoncentral::new(df, 0.0).unwrap();
            assert!((ours.cdf(x).unwrap() - d.cdf(x)).abs() < 1e-12, "df={df} x={x}");
            let rel = (ours.sf(x).unwrap() - d.sf(x)).abs() / d.sf(x);
            assert!(rel < 1e-10, "df={df} x={x} rel={rel}");
        }
    }
}

#[test]
fn noncentral_chi_square_matches_series() {
    for df in [1u32, 5, 10] {
        for delta in [0.3, 4.0, 25.0, 80.0] {
            for x in [1.0, 8.0, 30.0, 60.0] {
                let got = ChiSquareNoncentral::new(df, delta).unwrap().sf(x).unwrap();
                let want = ncx2_sf_series(df, delta, x);
                assert!(
                    (got - want).abs() <= 1e-9 * want.max(1e-300) + 1e-14,
                    "df={df} delta={delta} x={x}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn far_tail_relative_accuracy() {
    let points = [
        (1, 0.0, 50.0),
        (1, 0.0, 45.0),
        (1, 2.0, 60.0),
        (1, 10.0, 90.0),
        (1, 30.0, 150.0),
        (2, 0.0, 55.0),
        (3, 1.0, 65.0),
        (5, 0.0, 60.0),
        (5, 5.0, 80.0),
        (5, 20.0, 130.0),
        (5, 40.0, 180.0),
        (10, 0.0, 75.0),
        (10, 10.0, 100.0),
        (10, 30.0, 160.0),
        (10, 60.0, 220.0),
        (20, 0.0, 95.0),
        (20, 15.0, 130.0),
        (20, 50.0, 220.0),
        (2, 8.0, 90.0),
        (3, 25.0, 140.0),
    ];
    for (df, delta, x) in points {
        let want = ncx2_sf_series(df, delta, x);
        assert!(want < 1e-9 && want > 1e-30, "spot point not in the far tail: {want}");
        let got = ChiSquareNoncentral::new(df, delta).unwrap().sf(x).unwrap();
        let rel = (got - want).abs() / want;
        assert!(rel <= 1e-6, "df={df} delta={delta} x={x}: rel {rel}");
    }
}

#[test]
fn quantiles_invert_cdfs() {
    for df in [1u32, 5, 10] {
        for p in [0.001, 0.05, 0.5, 0.95, 0.999] {
            let x = chisq_quantile(p, df).unwrap();
            let back = ChiSquared::new(df as f64).unwrap().cdf(x);
            assert!((back - p).abs() < 1e-10, "df={df} p={p}");
        }
        for q in [1e-7, 1e-12] {
            let x = chisq_isf(q, df).unwrap();
            let rel = (ChiSquared::new(df as f64).unwrap().sf(x) - q).abs() / q;
            assert!(rel < 1e-8, "df={df} q={q}");
        }
    }
    for p in [0.001, 0.2, 0.5, 0.9, 0.999] {
        let z: f64 = normal_quantile(p).unwrap();
        assert!((normal_cdf(z) - p).abs() < 1e-14);
    }
    let z = normal_isf(1e-7_f64).unwrap();
    assert!((normal_sf(z) / 1e-7 - 1.0).abs() < 1e-10);
    for (d1, d2) in [(1u32, 4u32), (1, 9), (3, 12)] {
        let f = FisherSnedecor::new(d1 as f64, d2 as f64).unwrap();
        for p in [0.01, 0.5, 0.99] {
            let x = f_quantile(p, d1, d2).unwrap();
            assert!((f.cdf(x) - p).abs() < 1e-9, "F({d1},{d2}) p={p}");
        }
        let x = f_isf(1e-7, d1, d2).unwrap();
        assert!((f.sf(x) / 1e-7 - 1.0).abs() < 1e-6, "F({d1},{d2}) isf");
    }
}

#[test]
fn noncentral_f_matches_mixture() {
    // P(F > x) with noncentrality δ = Σ_j Pois(j; δ/2) P(Beta(d1/2 + j, d2/2) > d1x/(d1x + d2)).
    use statrs::distribution::Beta;
    for (d1, d2, delta, x) in [(1u32, 4u32, 3.0, 2.0), (1, 9, 20.0, 15.0), (2, 6, 0.5, 1.0), (1, 4, 60.0, 500.0)] {
        let pois = Poisson::new(delta / 2.0).unwrap();
        let y = d1 as f64 * x / (d1 as f64 * x + d2 as f64);
        let want: f64 = (0..1000u64)
            .map(|j| pois.pmf(j) * Beta::new(d1 as f64 / 2.0 + j as f64, d2 as f64 / 2.0).unwrap().sf(y))
            .sum();
        let got = FNoncentral::new(d1, d2, delta).unwrap().sf(x).unwrap();
        assert!((got - want).abs() < 1e-9 * want.max(1e-3), "F({d1},{d2},{delta}) at {x}: {got} vs {want}");
    }
}

#[test]
fn gauss_hermite_expectations() {
    let rule = GaussHermiteRule::new(64).unwrap();
    let m4 = rule.expect_normal(0.3, 0.7, |x: f64| x.powi(4));
    let (mu, s2) = (0.3f64, 0.49f64);
    assert!((m4 - (mu.powi(4) + 6.0 * mu * mu * s2 + 3.0 * s2 * s2)).abs() < 1e-13);
    let e = rule.expect_normal(0.1, 0.5, f64::exp);
    assert!((e - (0.1f64 + 0.125).exp()).abs() < 1e-13);
    // E[Φ(a + bZ)] = Φ(a / √(1 + b²)).
    let got = rule.expect_normal(0.4, 1.3, normal_cdf);
    assert!((got - normal_cdf(0.4 / (1.0f64 + 1.69).sqrt())).abs() < 1e-10);
}

#[test]
fn sums_of_noncentral_one_df_draws_are_additive() {
    let deltas = [0.5, 2.0, 0.0, 4.5];
    let total: f64 = deltas.iter().sum();
    let dist = ChiSquareNoncentral::new(deltas.len() as u32, total).unwrap();
    let mut rng = RngStream::new(11, stream_id(0, 0));
    let draws: Vec<f64> =
        (0..1_000_000).map(|_| deltas.iter().map(|d| (rng.normal() + f64::sqrt(*d)).powi(2)).sum()).collect();
    let ks = ks_one_sample(&draws, |x| dist.cdf(x).unwrap());
    assert!(ks.p_value > 0.001, "KS p = {}", ks.p_value);
}

proptest! {
    #[test]
    fn chi_square_cdf_is_monotone_and_bounded(df in 1u32..30, delta in 0.0f64..100.0, x in 0.0f64..200.0, dx in 0.0f64..5.0) {
        let d = ChiSquareNoncentral::new(df, delta).unwrap();
        let (a, b) = (d.cdf(x).unwrap(), d.cdf(x + dx).unwrap());
        prop_assert!((0.0..=1.0).contains(&a) && b >= a - 1e-15);
        prop_assert!((a + d.sf(x).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi_square_quantile_round_trip(df in 1u32..30, p in 0.001f64..0.999) {
        let x = chisq_quantile(p, df).unwrap();
        prop_assert!((ChiSquareNoncentral::new(df, 0.0).unwrap().cdf(x).unwrap() - p).abs() < 1e-10);
        let back = chisq_quantile(ChiSquareNoncentral::new(df, 0.0).unwrap().cdf(x).unwrap(), df).unwrap();
        prop_assert!((back - x).abs() < 1e-8 * x.max(1.0));
    }

    #[test]
    fn f_cdf_is_monotone(d1 in 1u32..6, d2 in 1u32..20, delta in 0.0f64..50.0, x in 0.0f64..100.0, dx in 0.0f64..5.0) {
        let d = FNoncentral::new(d1, d2, delta).unwrap();
        let (a, b) = (d.cdf(x).unwrap(), d.cdf(x + dx).unwrap());
        prop_assert!((0.0..=1.0).contains(&a) && b >= a - 1e-12);
    }

    #[test]
    fn normal_quantile_round_trip(p in 0.001f64..0.999) {
        prop_assert!((normal_cdf(normal_quantile(p).unwrap()) - p).abs() < 1e-14);
    }

    #[test]
    fn central_sf_matches_noncentral_at_zero(df in 1u32..40, x in 0.0f64..150.0) {
        let a: f64 = central_sf(x, df);
        let b = ChiSquareNoncentral::new(df, 0.0).unwrap().sf(x).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.max(1e-300) + 1e-300);
    }
}
