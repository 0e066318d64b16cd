//! Hankel transform, functional calculus and Littlewood–Paley projections.

use std::sync::Arc;

use approx::assert_relative_eq;
use invsq_core::grids::{lp_norm, make_log_grid, make_uniform_log_grid, RadialFunction};
use invsq_core::operator::{endpoint_coupling, make_params};
use invsq_core::spectral::{
    apply_multiplier, dyadic, dyadic_range, frac_power, identity_check, lp_proj, make_plan, smooth_cutoffs,
    square_function, HankelPlan, Multiplier, ProjKind, Sign, Symbol,
};
use invsq_core::verify::default_grid;
use invsq_core::verify::littlewood::band_limited;
use invsq_core::Error;
use proptest::prelude::*;

fn plan(d: usize, a: f64) -> HankelPlan {
    make_plan(&make_params(d, a).unwrap(), 0, default_grid(d).unwrap()).unwrap()
}

/// [1e−3, 1e2] with 4096 nodes, for checks at the level of rounding error.
fn fine_plan(d: usize, a: f64) -> HankelPlan {
    let grid = Arc::new(make_log_grid(1e-3, 1e2, 4096, d).unwrap());
    make_plan(&make_params(d, a).unwrap(), 0, grid).unwrap()
}

/// The default range with 8192 nodes.
fn wide_plan(d: usize, a: f64) -> HankelPlan {
    let grid = Arc::new(make_log_grid(1e-4, 1e3, 8192, d).unwrap());
    make_plan(&make_params(d, a).unwrap(), 0, grid).unwrap()
}

fn sample(plan: &HankelPlan, f: impl Fn(f64) -> f64) -> RadialFunction {
    RadialFunction::from_fn(plan.grid().clone(), 0, f).unwrap()
}

fn rel_l2(a: &RadialFunction, b: &RadialFunction) -> f64 {
    lp_norm(&a.combine(1.0, b, -1.0), 2.0) / lp_norm(b, 2.0)
}

fn bump(r: f64) -> f64 {
    if r < 1.0 {
        (-1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

#[test]
fn plans_calibrate_across_the_test_matrix() {
    for d in 3..=5 {
        let e = endpoint_coupling(d);
        for a in [e, 0.5 * e, 0.1 * e, 0.0, 1.0, 4.0] {
            let p = plan(d, a);
            assert!(p.calibration_error() < 1e-6, "d = {d}, a = {a}: {}", p.calibration_error());
        }
    }
}

#[test]
fn plan_rejects_mismatched_grids() {
    let params = make_params(3, 0.0).unwrap();
    assert!(matches!(make_plan(&params, 0, default_grid(4).unwrap()), Err(Error::Parameter(_))));
    let uniform = Arc::new(make_uniform_log_grid(1e-3, 1e3, 1024, 3).unwrap());
    assert!(matches!(make_plan(&params, 0, uniform), Err(Error::Parameter(_))));
}

#[test]
fn gaussian_round_trip_and_transform() {
    let p = plan(3, 0.0);
    let f = sample(&p, |r| (-0.5 * r * r).exp());
    let spec = p.forward(&f).unwrap();
    for (k, v) in spec.k.iter().zip(&spec.values) {
        if (1e-2..=6.0).contains(k) {
            assert!((v - (-0.5 * k * k).exp()).abs() < 1e-8, "k = {k}");
        }
    }
    let back = p.inverse(&spec).unwrap();
    assert!(rel_l2(&back, &f) < 1e-6);
    assert_relative_eq!(spec.l2_norm(), lp_norm(&f, 2.0), max_relative = 1e-6);
}

#[test]
fn zero_maps_to_zero() {
    let p = plan(4, -0.5);
    let zero = RadialFunction::zeros(p.grid().clone(), 0);
    let spec = p.forward(&zero).unwrap();
    assert!(spec.values.iter().all(|v| *v == 0.0));
    for m in [Multiplier::heat(1.0), Multiplier::identity(), Multiplier::heat_diff(2.0)] {
        let out = apply_multiplier(&p, &m, &zero).unwrap();
        assert!(out.values().iter().all(|v| *v == 0.0));
    }
    let out = frac_power(&p, 0.7, Sign::Plus, &zero).unwrap();
    assert!(out.values().iter().all(|v| *v == 0.0));
}

#[test]
fn plancherel_for_perturbed_operators() {
    for (d, a) in [(3, -0.25), (4, 1.0), (5, -1.0)] {
        let p = plan(d, a);
        let f = sample(&p, |r| r * r * (-r * r).exp());
        assert_relative_eq!(p.forward(&f).unwrap().l2_norm(), lp_norm(&f, 2.0), max_relative = 1e-6);
    }
}

#[test]
fn identity_multiplier_round_trip() {
    let p = plan(3, -0.125);
    let f = sample(&p, bump);
    let out = apply_multiplier(&p, &Multiplier::identity(), &f).unwrap();
    assert!(rel_l2(&out, &f) < 1e-6);
}

#[test]
fn laplacian_of_a_gaussian() {
    for d in 3..=5 {
        let p = plan(d, 0.0);
        let f = sample(&p, |r| (-r * r).exp());
        let exact = sample(&p, |r| (2.0 * d as f64 - 4.0 * r * r) * (-r * r).exp());
        let out = frac_power(&p, 2.0, Sign::Plus, &f).unwrap();
        assert!(rel_l2(&out, &exact) < 1e-4, "d = {d}");
    }
}

#[test]
fn power_pairs_invert() {
    for (d, a) in [(3, -0.25), (3, 0.0), (4, 1.0), (5, -2.25)] {
        let p = wide_plan(d, a);
        let f = band_limited(&p, 1e-1, 1e1).unwrap();
        for s in [0.5, 1.0, 1.5] {
            let up = frac_power(&p, s, Sign::Plus, &f).unwrap();
            let back = frac_power(&p, s, Sign::Minus, &up).unwrap();
            assert!(rel_l2(&back, &f) < 1e-5, "d = {d}, a = {a}, s = {s}: {}", rel_l2(&back, &f));
            let m_up = apply_multiplier(&p, &Multiplier::power(s), &f).unwrap();
            let m_back = apply_multiplier(&p, &Multiplier::power(-s), &m_up).unwrap();
            assert!(rel_l2(&m_back, &f) < 1e-5, "d = {d}, a = {a}, s = {s}: {}", rel_l2(&m_back, &f));
        }
    }
}

#[test]
fn smooth_cutoffs_partition_unity() {
    let ns: Vec<f64> = (-20..=20).map(|k| 2f64.powi(k)).collect();
    let mut lambda = 1e-3;
    while lambda <= 1e3 {
        let total: f64 = ns.iter().map(|&n| smooth_cutoffs(n).unwrap().1.eval(lambda)).sum();
        assert!((total - 1.0).abs() < 1e-12, "λ = {lambda}");
        lambda *= 1.07;
    }
    for n in [0.25, 1.0, 8.0] {
        let (phi, psi) = smooth_cutoffs(n).unwrap();
        for t in [0.0, 0.3, 0.99, 1.0] {
            assert_eq!(phi.eval(t * n), 1.0);
        }
        for t in [2.0, 2.5, 100.0] {
            assert_eq!(psi.eval(t * n), 0.0);
        }
        for t in [0.01, 0.25] {
            assert_eq!(psi.eval(t * n), 0.0);
        }
    }
    assert!(matches!(smooth_cutoffs(3.0), Err(Error::Parameter(_))));
    assert!(matches!(dyadic(2f64.powi(21)), Err(Error::Parameter(_))));
    assert!(dyadic(2f64.powi(-20)).is_ok());
}

#[test]
fn heat_projection_is_the_gaussian_difference() {
    let p = plan(3, -0.25);
    let f = sample(&p, bump);
    for n in [0.5, 1.0, 4.0] {
        let a = lp_proj(&p, &f, n, ProjKind::Heat).unwrap();
        let explicit = Multiplier::new(Symbol::HeatDiff { n });
        let b = apply_multiplier(&p, &explicit, &f).unwrap();
        assert_eq!(a.values(), b.values());
    }
}

#[test]
fn heat_projection_on_a_single_block() {
    let p = plan(3, 0.0);
    for n in [0.5, 1.0, 2.0] {
        let f = band_limited(&p, n, 2.0 * n).unwrap();
        let m = Multiplier::heat_diff(n);
        let samples: Vec<f64> = (0..=200).map(|i| m.eval(n * (1.0 + i as f64 / 200.0))).collect();
        let (lo, hi) = samples.iter().fold((f64::INFINITY, 0.0f64), |(l, h), v| (l.min(*v), h.max(*v)));
        let ratio = lp_norm(&lp_proj(&p, &f, n, ProjKind::Heat).unwrap(), 2.0) / lp_norm(&f, 2.0);
        assert!(ratio >= lo * (1.0 - 1e-6) && ratio <= hi * (1.0 + 1e-6), "N = {n}: {ratio} ∉ [{lo}, {hi}]");
    }
}

#[test]
fn smooth_projection_vanishes_on_disjoint_spectrum() {
    let p = fine_plan(3, 0.0);
    let n = 1.0;
    let f = band_limited(&p, 4.0 * n, 16.0 * n).unwrap();
    let out = lp_proj(&p, &f, n, ProjKind::Smooth).unwrap();
    assert!(lp_norm(&out, 2.0) < 1e-10 * lp_norm(&f, 2.0));
}

#[test]
fn square_function_bounds() {
    let p = plan(3, 0.0);
    let zero = RadialFunction::zeros(p.grid().clone(), 0);
    let ns = dyadic_range(2f64.powi(-8), 2f64.powi(8)).unwrap();
    let sq = square_function(&p, &zero, 0.5, &ns, ProjKind::Heat).unwrap();
    assert!(sq.values().iter().all(|v| *v == 0.0));

    // A spectrum inside [N, 2N] meets at most the blocks N and 2N.
    let n = 1.0;
    let f = band_limited(&p, n, 2.0 * n).unwrap();
    let sq = square_function(&p, &f, 0.0, &ns, ProjKind::Smooth).unwrap();
    let psi_sq_min = (0..=400)
        .map(|i| {
            let lambda = n * (1.0 + i as f64 / 400.0);
            ns.iter().map(|&m| smooth_cutoffs(m).unwrap().1.eval(lambda).powi(2)).sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min);
    let ratio = lp_norm(&sq, 2.0) / lp_norm(&f, 2.0);
    assert!(ratio >= psi_sq_min.sqrt() * (1.0 - 1e-6) && ratio <= 1.0 + 1e-6, "{ratio}");

    let g = sample(&p, bump);
    let full = dyadic_range(2f64.powi(-12), 2f64.powi(12)).unwrap();
    let sq = square_function(&p, &g, 0.0, &full, ProjKind::Smooth).unwrap();
    let ratio = lp_norm(&sq, 2.0) / lp_norm(&g, 2.0);
    assert!((0.5..=1.5).contains(&ratio), "{ratio}");
}

#[test]
fn expansion_of_the_identity() {
    let full = dyadic_range(2f64.powi(-10), 2f64.powi(10)).unwrap();
    for (d, a) in [(3, -0.25), (3, 0.0), (4, 1.0), (5, endpoint_coupling(5))] {
        let p = plan(d, a);
        let f = band_limited(&p, 1e-1, 1e1).unwrap();
        let norm = lp_norm(&f, 2.0);
        let smooth = identity_check(&p, &f, &full, 2.0, ProjKind::Smooth).unwrap();
        assert!(smooth < 1e-6 * norm, "d = {d}, a = {a}: {}", smooth / norm);
        assert_relative_eq!(identity_check(&p, &f, &[], 2.0, ProjKind::Smooth).unwrap(), norm, max_relative = 1e-15);

        // Heat blocks telescope to e^{−k²/N_max²} − e^{−4k²/N_min²}.
        let p = wide_plan(d, a);
        let h = band_limited(&p, 0.1, 0.5).unwrap();
        let (n_min, n_max) = (full[0], full[full.len() - 1]);
        let tail = |k: f64| 1.0 - (-(k * k) / (n_max * n_max)).exp() + (-4.0 * k * k / (n_min * n_min)).exp();
        let bound = (0..=100).map(|i| tail(0.1 + 0.4 * i as f64 / 100.0)).fold(0.0, f64::max);
        let heat = identity_check(&p, &h, &full, 2.0, ProjKind::Heat).unwrap() / lp_norm(&h, 2.0);
        assert!(heat <= bound + 1e-9, "d = {d}, a = {a}: {heat} > {bound}");
    }
}

#[test]
fn semigroup_and_commutativity() {
    for (d, a) in [(3, -0.25), (4, 0.0), (5, 4.0)] {
        let p = fine_plan(d, a);
        let f = sample(&p, bump);
        let (t, s) = (0.3, 1.7);
        let ts = apply_multiplier(&p, &Multiplier::heat(t), &apply_multiplier(&p, &Multiplier::heat(s), &f).unwrap()).unwrap();
        let st = apply_multiplier(&p, &Multiplier::heat(s), &apply_multiplier(&p, &Multiplier::heat(t), &f).unwrap()).unwrap();
        let joint = apply_multiplier(&p, &Multiplier::heat(t + s), &f).unwrap();
        assert!(rel_l2(&ts, &joint) < 1e-6, "d = {d}, a = {a}: {}", rel_l2(&ts, &joint));
        assert!(rel_l2(&ts, &st) < 1e-10, "d = {d}, a = {a}: {}", rel_l2(&ts, &st));
    }
}

#[test]
fn bernstein_l2_scaling() {
    let p = plan(3, -0.25);
    let f = sample(&p, bump);
    for n in [0.25, 1.0, 4.0] {
        let proj = lp_proj(&p, &f, n, ProjKind::Smooth).unwrap();
        for s in [0.5, 1.0] {
            let up = frac_power(&p, s, Sign::Plus, &proj).unwrap();
            let scaled = lp_norm(&up, 2.0) / lp_norm(&proj, 2.0) / n.powf(s);
            assert!(scaled >= 4f64.powf(-s) && scaled <= 2f64.powf(s), "N = {n}, s = {s}: {scaled}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn multipliers_are_linear(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, w in 0.2f64..5.0, t in 0.01f64..10.0) {
        let p = plan(3, -0.125);
        let f = sample(&p, bump);
        let g = sample(&p, |r| (-(r / w).powi(2)).exp());
        let m = Multiplier::heat(t);
        let lhs = apply_multiplier(&p, &m, &f.combine(alpha, &g, beta)).unwrap();
        let rhs = apply_multiplier(&p, &m, &f).unwrap().combine(alpha, &apply_multiplier(&p, &m, &g).unwrap(), beta);
        let scale = lp_norm(&rhs, 2.0).max(lp_norm(&f, 2.0) * 1e-3);
        prop_assert!(lp_norm(&lhs.combine(1.0, &rhs, -1.0), 2.0) <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn multipliers_are_symmetric(w1 in 0.1f64..5.0, w2 in 0.1f64..5.0, t in 0.01f64..10.0, a in -0.25f64..2.0) {
        let p = plan(3, a);
        let f = sample(&p, |r| (-(r / w1).powi(2)).exp());
        let g = sample(&p, |r| r * (-(r / w2).powi(2)).exp());
        let m = Multiplier::heat(t);
        let lhs = apply_multiplier(&p, &m, &f).unwrap().inner(&g);
        let rhs = f.inner(&apply_multiplier(&p, &m, &g).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-8 * lhs.abs().max(rhs.abs()));
    }
}
