//! Heat and Riesz kernels against high-precision reference values, closed
//! forms and structural identities.

use std::f64::consts::PI;

use approx::assert_relative_eq;
use invsq_core::grids::make_log_grid;
use invsq_core::kernels::{
    diff_envelope, diff_regimes, euclidean_heat, euclidean_riesz, fit_heat_envelope, heat_full, heat_sector,
    heat_weight, kernel_diff, large_time_constant, riesz_envelope, riesz_kernel, EnvelopeShape, KernelEnvelope,
    PointPair, DEFAULT_L_MAX,
};
use invsq_core::operator::{endpoint_coupling, make_params, SectorOrder};
use invsq_core::Error;
use proptest::prelude::*;

fn pair(rx: f64, ry: f64, cos: f64, t: f64) -> PointPair {
    PointPair::new(rx, ry, cos).unwrap().with_time(t)
}

#[test]
fn sector_kernels_match_reference_values() {
    // (ν, d, t, r, r′, value) with the value from 40-digit arithmetic.
    let cases = [
        (0.5, 3, 1.0, 1.0, 1.0, 0.178_317_917_418_729_47),
        (0.0, 3, 0.5, 0.3, 2.0, 0.182_403_362_046_006_19),
        (1.5, 5, 2.0, 0.1, 0.7, 0.007_807_980_562_982_622_6),
        (2.5, 4, 0.1, 1.0, 1.2, 0.358_181_624_509_524_79),
    ];
    for (nu, d, t, r, rp, want) in cases {
        let got = heat_sector(SectorOrder { ell: 0, nu }, d, t, r, rp);
        assert_relative_eq!(got, want, max_relative = 1e-12);
    }
}

#[test]
fn full_kernels_match_reference_values() {
    // (d, a, t, |x|, |y|, cos θ, value) from a 40-digit sector sum.
    let cases = [
        (3, 0.0, 1.0, 1.0, 1.0, 0.5, 0.017_482_823_917_577_467),
        (3, -0.25, 1.0, 0.5, 1.5, -0.3, 0.023_565_007_035_888_822),
        (4, 1.0, 0.5, 0.2, 0.4, 0.9, 0.005_456_496_774_794_959_5),
        (5, -2.25, 2.0, 1.0, 2.0, 0.0, 0.001_900_963_716_085_251_7),
        (3, 2.0, 1.0, 0.7, 0.7, 1.0, 0.002_390_070_723_629_668_8),
    ];
    for (d, a, t, rx, ry, cos, want) in cases {
        let k = heat_full(&make_params(d, a).unwrap(), &pair(rx, ry, cos, t), DEFAULT_L_MAX);
        assert!(!k.truncated && !k.cancellation);
        assert_relative_eq!(k.value, want, max_relative = 1e-10);
    }
}

#[test]
fn large_time_constants_match_reference_values() {
    let cases = [
        (3, -0.25, 0.039_788_735_772_973_834),
        (3, 0.0, 0.022_448_390_265_645_820),
        (4, 1.0, 0.002_844_233_389_707_172_1),
        (5, 2.0, 0.000_514_639_125_633_345_10),
    ];
    for (d, a, want) in cases {
        assert_relative_eq!(large_time_constant(&make_params(d, a).unwrap()), want, max_relative = 1e-12);
    }
}

#[test]
fn large_time_limit_is_reached() {
    let p = make_params(3, 1.0).unwrap();
    let (rx, ry) = (0.5, 0.8);
    let t = 1e8;
    let k = heat_full(&p, &pair(rx, ry, 0.3, t), DEFAULT_L_MAX);
    let scaled = k.value * t.powf(1.5 - p.sigma) * (rx * ry).powf(p.sigma);
    assert_relative_eq!(scaled, large_time_constant(&p), max_relative = 1e-6);
}

#[test]
fn riesz_potentials_match_reference_values() {
    // (d, a, s, |x|, |y|, cos θ, value) from quadrature of the sector sum in t.
    let cases = [
        (3, 2.0, 1.0, 1.0, 0.5, 0.2, 0.012_085_931_992_911_9),
        (4, -0.5, 1.5, 0.8, 1.1, 0.6, 0.045_563_651_255_397_2),
    ];
    for (d, a, s, rx, ry, cos, want) in cases {
        let v = riesz_kernel(&make_params(d, a).unwrap(), s, &pair(rx, ry, cos, 1.0), DEFAULT_L_MAX).unwrap();
        assert!(!v.diverged && !v.truncated, "{v:?}");
        assert_relative_eq!(v.value, want, max_relative = 1e-6);
    }
}

#[test]
fn newtonian_potential_in_three_dimensions() {
    let p = make_params(3, 0.0).unwrap();
    for (rx, ry, cos) in [(1.0, 2.0, 0.3), (0.1, 0.4, -0.9), (3.0, 3.5, 0.99)] {
        let pp = pair(rx, ry, cos, 1.0);
        let v = riesz_kernel(&p, 2.0, &pp, 4096).unwrap();
        assert!(!v.diverged && !v.truncated, "{v:?}");
        assert_relative_eq!(v.value, 1.0 / (4.0 * PI * pp.dist()), max_relative = 1e-6);
        assert_relative_eq!(euclidean_riesz(3, 2.0, pp.dist()), 1.0 / (4.0 * PI * pp.dist()), max_relative = 1e-13);
    }
    // Nearby points far from the origin need more sectors than the default.
    let close = pair(3.0, 3.5, 0.99, 1.0);
    assert!(riesz_kernel(&p, 2.0, &close, DEFAULT_L_MAX).unwrap().truncated);
}

#[test]
fn riesz_rejects_inadmissible_orders() {
    let p = make_params(3, -0.25).unwrap();
    let pp = pair(1.0, 2.0, 0.0, 1.0);
    for s in [0.0, 2.0, 3.0, -1.0] {
        assert!(matches!(riesz_kernel(&p, s, &pp, DEFAULT_L_MAX), Err(Error::Parameter(_))));
    }
    assert!(riesz_kernel(&p, 1.5, &pp, DEFAULT_L_MAX).is_ok());
}

#[test]
fn point_pairs_validate() {
    assert!(matches!(PointPair::new(0.0, 1.0, 0.0), Err(Error::Parameter(_))));
    assert!(matches!(PointPair::new(1.0, -1.0, 0.0), Err(Error::Parameter(_))));
    assert!(matches!(PointPair::new(1.0, 1.0, 1.5), Err(Error::Parameter(_))));
    let pp = pair(1.0, 1.0, 1.0, 1.0);
    assert_eq!(pp.dist_sq(), 0.0);
}

#[test]
fn kernel_difference_vanishes_for_the_free_operator() {
    let p = make_params(4, 0.0).unwrap();
    let k = kernel_diff(&p, 3.0, &pair(0.2, 0.5, 0.1, 1.0), DEFAULT_L_MAX);
    assert_eq!(k.value, 0.0);
}

#[test]
fn kernel_difference_scales_with_frequency() {
    for (d, a) in [(3, -0.25), (4, 1.0), (5, 2.0)] {
        let p = make_params(d, a).unwrap();
        let base = pair(0.7, 1.3, 0.4, 1.0);
        let k1 = kernel_diff(&p, 1.0, &base, DEFAULT_L_MAX).value;
        for n in [0.25, 4.0, 32.0] {
            let scaled = base.dilated(1.0 / n);
            let pp = pair(scaled.rx, scaled.ry, scaled.cos, 1.0);
            let kn = kernel_diff(&p, n, &pp, DEFAULT_L_MAX).value;
            assert_relative_eq!(kn, n.powi(d as i32) * k1, max_relative = 1e-9);
        }
    }
}

#[test]
fn sector_kernels_satisfy_chapman_kolmogorov() {
    let g = make_log_grid(1e-4, 40.0, 1536, 3).unwrap();
    for nu in [0.0, 0.5, 1.7] {
        let order = SectorOrder { ell: 0, nu };
        let (t, s, r, rp) = (0.3, 0.8, 0.6, 1.4);
        let values: Vec<f64> =
            g.nodes().iter().map(|&z| heat_sector(order, 3, t, r, z) * heat_sector(order, 3, s, z, rp)).collect();
        assert_relative_eq!(g.integrate(&values), heat_sector(order, 3, t + s, r, rp), max_relative = 1e-8);
    }
}

#[test]
fn heat_mass_is_at_most_one_for_nonnegative_coupling() {
    for d in [3usize, 5] {
        let g = make_log_grid(1e-5, 60.0, 2048, d).unwrap();
        for a in [0.0, 0.5, 3.0] {
            let p = make_params(d, a).unwrap();
            let order = p.sector_order(0);
            let values: Vec<f64> = g.nodes().iter().map(|&z| heat_sector(order, d, 1.0, 0.8, z)).collect();
            let mass = g.integrate(&values);
            if a == 0.0 {
                assert_relative_eq!(mass, 1.0, max_relative = 1e-9);
            } else {
                assert!(mass < 1.0, "d = {d}, a = {a}: {mass}");
            }
        }
        let p = make_params(d, endpoint_coupling(d)).unwrap();
        let values: Vec<f64> = g.nodes().iter().map(|&z| heat_sector(p.sector_order(0), d, 1.0, 0.8, z)).collect();
        assert!(g.integrate(&values) > 1.0);
    }
}

#[test]
fn free_envelope_fit_is_exact() {
    let p = make_params(3, 0.0).unwrap();
    let samples: Vec<(PointPair, f64)> = [(0.3, 0.5, 0.2, 1.0), (1.0, 2.0, -0.5, 0.3), (0.1, 0.1, 1.0, 4.0)]
        .iter()
        .map(|&(rx, ry, c, t)| {
            let pp = pair(rx, ry, c, t);
            (pp, euclidean_heat(3, t, pp.dist_sq()))
        })
        .collect();
    let fit = fit_heat_envelope(&p, &samples);
    assert_relative_eq!(fit.lower.amplitude, (4.0 * PI).powf(-1.5), max_relative = 1e-12);
    assert_relative_eq!(fit.ratio, 1.0, max_relative = 1e-12);
    assert_relative_eq!(fit.upper.amplitude, (4.0 * PI).powf(-1.5), max_relative = 1e-12);
}

#[test]
fn envelope_shapes() {
    let free = make_params(3, 0.0).unwrap();
    let neg = make_params(3, -0.25).unwrap();
    let far = pair(2.0, 3.0, 0.1, 0.5);
    assert_eq!(heat_weight(&neg, &far), 1.0);
    let near = pair(0.01, 3.0, 0.1, 1.0);
    assert_relative_eq!(heat_weight(&neg, &near), 100f64.powf(0.5), max_relative = 1e-12);
    let pp = pair(1.0, 2.0, 0.0, 1.0);
    assert_relative_eq!(riesz_envelope(&free, 1.0, &pp), pp.dist().powf(-2.0), max_relative = 1e-14);
    let env = KernelEnvelope::new(EnvelopeShape::DiffAPos, 2.0, 0.5);
    let expected = 2.0 * 8.0 * (2.0f64 * 3.0).powi(-2) * (-0.5 * 4.0 * pp.dist_sq()).exp();
    assert_relative_eq!(diff_envelope(&free, 2.0, &pp, &env), expected, max_relative = 1e-14);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn free_kernel_is_the_gaussian(rx in 0.05f64..3.0, ry in 0.05f64..3.0, cos in -1.0f64..1.0, t in 0.05f64..4.0, d in 3usize..=5) {
        let pp = pair(rx, ry, cos, t);
        let k = heat_full(&make_params(d, 0.0).unwrap(), &pp, DEFAULT_L_MAX);
        prop_assume!(!k.cancellation && !k.truncated);
        let want = euclidean_heat(d, t, pp.dist_sq());
        prop_assert!((k.value - want).abs() <= 1e-9 * want);
    }

    #[test]
    fn heat_kernel_is_symmetric(rx in 0.05f64..3.0, ry in 0.05f64..3.0, cos in -1.0f64..1.0, t in 0.05f64..4.0, a in -0.25f64..4.0) {
        let p = make_params(3, a).unwrap();
        let pp = pair(rx, ry, cos, t);
        let (k, ks) = (heat_full(&p, &pp, DEFAULT_L_MAX), heat_full(&p, &pp.swapped(), DEFAULT_L_MAX));
        prop_assert!((k.value - ks.value).abs() <= 1e-13 * k.value.abs());
    }

    #[test]
    fn heat_kernel_scales(rx in 0.05f64..2.0, ry in 0.05f64..2.0, cos in -1.0f64..1.0, lambda in 0.1f64..10.0, a in -1.0f64..4.0) {
        let p = make_params(4, a).unwrap();
        let pp = pair(rx, ry, cos, 0.5);
        let k = heat_full(&p, &pp, DEFAULT_L_MAX);
        let kl = heat_full(&p, &pp.dilated(lambda), DEFAULT_L_MAX);
        prop_assume!(!k.cancellation && !kl.cancellation);
        prop_assert!((kl.value - lambda.powi(-4) * k.value).abs() <= 1e-10 * k.value.abs());
    }

    #[test]
    fn every_pair_lies_in_a_regime(n in 0.01f64..100.0, rx in 1e-4f64..100.0, ry in 1e-4f64..100.0) {
        prop_assert!(!diff_regimes(n, rx, ry).is_empty());
    }
}
