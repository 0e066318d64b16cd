//! Operator parameters, exponent windows and the Liouville-form radial operator.

use std::sync::Arc;

use approx::assert_relative_eq;
use invsq_core::grids::{make_log_grid, make_uniform_log_grid, RadialFunction, RadialGrid};
use invsq_core::operator::{
    endpoint_coupling, endpoint_log_profile, equiv_ranges, half_dim, hardy_range, liouville_apply,
    make_params, sector_order, zero_energy_pair, SectorOrder,
};
use invsq_core::Error;
use proptest::prelude::*;

fn uniform_grid(n: usize) -> Arc<RadialGrid> {
    Arc::new(make_uniform_log_grid(0.1, 10.0, n, 3).unwrap())
}

/// Largest interior |residual| relative to the largest interior |g|/r².
fn relative_residual(g: &RadialFunction, out: &RadialFunction) -> f64 {
    let r = g.grid().nodes();
    let n = r.len();
    let interior = 3..n - 3;
    let scale = interior.clone().map(|i| (g.values()[i] / (r[i] * r[i])).abs()).fold(0.0, f64::max);
    interior.map(|i| out.values()[i].abs()).fold(0.0, f64::max) / scale
}

#[test]
fn free_laplacian_parameters() {
    let p = make_params(3, 0.0).unwrap();
    assert_eq!(p.sigma, 0.0);
    assert_eq!(p.r0, 1.0);
    assert!(p.r0_prime.is_infinite());
    assert!(p.in_multiplier_window(1.01) && p.in_multiplier_window(1e6));
}

#[test]
fn endpoint_parameters() {
    for d in 3..=7 {
        let p = make_params(d, endpoint_coupling(d)).unwrap();
        assert_relative_eq!(p.sigma, half_dim(d), max_relative = 1e-15);
        assert!(p.is_endpoint());
        assert_eq!(sector_order(&p, 0).nu, 0.0);
    }
}

#[test]
fn three_dimensional_quarter_coupling() {
    let p = make_params(3, -0.25).unwrap();
    assert_relative_eq!(p.sigma, 0.5, max_relative = 1e-15);
    assert_relative_eq!(p.r0, 1.2, max_relative = 1e-15);
    assert_relative_eq!(p.r0_prime, 6.0, max_relative = 1e-15);
    assert!(!p.in_multiplier_window(1.2) && p.in_multiplier_window(1.21));
    assert!(p.in_multiplier_window(5.99) && !p.in_multiplier_window(6.0));
}

#[test]
fn subcritical_coupling_is_rejected() {
    assert!(matches!(make_params(3, -0.2501), Err(Error::Parameter(_))));
    assert!(matches!(make_params(2, 0.0), Err(Error::Parameter(_))));
    assert!(matches!(make_params(3, f64::NAN), Err(Error::Parameter(_))));
}

#[test]
fn sector_orders() {
    let endpoint = make_params(3, -0.25).unwrap();
    assert_eq!(sector_order(&endpoint, 0), SectorOrder { ell: 0, nu: 0.0 });
    let free = make_params(3, 0.0).unwrap();
    assert_relative_eq!(sector_order(&free, 0).nu, 0.5, max_relative = 1e-15);
    assert_relative_eq!(sector_order(&free, 1).nu, 1.5, max_relative = 1e-15);
    assert_relative_eq!(free.sector_order(2).nu, 2.5, max_relative = 1e-15);
}

#[test]
fn hardy_windows() {
    let free = hardy_range(&make_params(3, 0.0).unwrap(), 1.0);
    assert!(free.valid);
    assert_relative_eq!(free.interval.lo, 1.0 / 3.0, max_relative = 1e-15);
    assert_relative_eq!(free.interval.hi, 1.0, max_relative = 1e-15);
    let neg = hardy_range(&make_params(3, -0.25).unwrap(), 1.0);
    assert!(neg.valid);
    assert_relative_eq!(neg.interval.lo, 0.5, max_relative = 1e-15);
    assert_relative_eq!(neg.interval.hi, 5.0 / 6.0, max_relative = 1e-15);
    assert!(!neg.interval.contains_p(2.0) && neg.interval.contains_p(1.5));
    assert!(!hardy_range(&make_params(3, 0.0).unwrap(), 3.0).valid);
}

#[test]
fn equivalence_windows() {
    let free = equiv_ranges(&make_params(3, 0.0).unwrap(), 1.0).unwrap();
    for w in [free.forward, free.reverse] {
        assert_relative_eq!(w.lo, 1.0 / 3.0, max_relative = 1e-15);
        assert_relative_eq!(w.hi, 1.0, max_relative = 1e-15);
    }
    let neg = equiv_ranges(&make_params(3, -0.25).unwrap(), 1.0).unwrap();
    assert_relative_eq!(neg.forward.lo, 0.5, max_relative = 1e-15);
    assert_relative_eq!(neg.forward.hi, 5.0 / 6.0, max_relative = 1e-15);
    assert_relative_eq!(neg.reverse.lo, 1.0 / 3.0, max_relative = 1e-15);
    assert_relative_eq!(neg.reverse.hi, 5.0 / 6.0, max_relative = 1e-15);
    for d in 3..=5 {
        let ends = equiv_ranges(&make_params(d, endpoint_coupling(d)).unwrap(), 1.0).unwrap();
        assert!(!ends.forward.contains_p(2.0));
    }
    assert!(matches!(equiv_ranges(&make_params(3, 0.0).unwrap(), 2.0), Err(Error::Parameter(_))));
}

#[test]
fn liouville_annihilates_zero_energy_solutions() {
    let g = uniform_grid(1024);
    for nu in [0.0, 0.3, 0.5, 1.0, 1.5] {
        let order = SectorOrder { ell: 0, nu };
        let (g1, g2) = zero_energy_pair(nu);
        for branch in [RadialFunction::from_fn(g.clone(), 0, g1).unwrap(), RadialFunction::from_fn(g.clone(), 0, g2).unwrap()] {
            let out = liouville_apply(&branch, order).unwrap();
            assert!(relative_residual(&branch, &out) < 1e-6, "nu = {nu}");
        }
    }
}

#[test]
fn liouville_on_a_power() {
    let g = uniform_grid(1024);
    let f = RadialFunction::from_fn(g.clone(), 0, |r| r.powf(2.5)).unwrap();
    let out = liouville_apply(&f, SectorOrder { ell: 0, nu: 0.5 }).unwrap();
    let r = g.nodes();
    for i in 3..r.len() - 3 {
        assert_relative_eq!(out.values()[i], -3.75 * r[i].sqrt(), max_relative = 1e-8);
    }
}

#[test]
fn liouville_rejects_coarse_or_nonuniform_grids() {
    let coarse = Arc::new(make_uniform_log_grid(0.1, 10.0, 256, 3).unwrap());
    let f = RadialFunction::from_fn(coarse, 0, |r| r).unwrap();
    assert!(matches!(liouville_apply(&f, SectorOrder { ell: 0, nu: 0.5 }), Err(Error::Parameter(_))));
    let gl = Arc::new(make_log_grid(0.1, 10.0, 1024, 3).unwrap());
    let f = RadialFunction::from_fn(gl, 0, |r| r).unwrap();
    assert!(matches!(liouville_apply(&f, SectorOrder { ell: 0, nu: 0.5 }), Err(Error::Parameter(_))));
}

#[test]
fn endpoint_profile_shape() {
    assert_eq!(endpoint_log_profile(3, 1.0), 0.0);
    assert_eq!(endpoint_log_profile(3, 2.0), 0.0);
    let r: f64 = 1e-3;
    assert_relative_eq!(endpoint_log_profile(3, r), r.powf(-0.5) / (-r.ln()).sqrt(), max_relative = 1e-15);
}

proptest! {
    #[test]
    fn factorization_identity(d in 3usize..=9, t in 0.0f64..1.0, up in 0.0f64..50.0) {
        let a = endpoint_coupling(d) * (1.0 - t) + up * t;
        let p = make_params(d, a).unwrap();
        let df = d as f64;
        prop_assert!((p.sigma * (df - 2.0 - p.sigma) + a).abs() <= 1e-12 * (1.0 + a.abs()));
        prop_assert!(p.sigma <= half_dim(d));
        if a > 1e-12 {
            prop_assert!(p.sigma < 0.0);
        } else if a < -1e-12 {
            prop_assert!(p.sigma > 0.0);
        }
        let h = half_dim(d);
        let nu0 = sector_order(&p, 0).nu;
        prop_assert!((nu0 * nu0 - (h * h + a)).abs() <= 1e-10 * (1.0 + a.abs()));
    }

    #[test]
    fn orders_increase_in_ell_and_a(d in 3usize..=6, a1 in -2.0f64..10.0, da in 1e-3f64..5.0, ell in 0usize..20) {
        let a1 = a1.max(endpoint_coupling(d));
        let p1 = make_params(d, a1).unwrap();
        let p2 = make_params(d, a1 + da).unwrap();
        prop_assert!(sector_order(&p1, ell + 1).nu > sector_order(&p1, ell).nu);
        prop_assert!(sector_order(&p2, ell).nu > sector_order(&p1, ell).nu);
        prop_assert!(sector_order(&p1, ell).nu >= 0.0);
    }

    #[test]
    fn windows_widen_with_a(d in 3usize..=6, a1 in -2.0f64..10.0, da in 0.0f64..5.0, s in 0.05f64..1.95) {
        let a1 = a1.max(endpoint_coupling(d));
        let p1 = make_params(d, a1).unwrap();
        let p2 = make_params(d, a1 + da).unwrap();
        prop_assert!(hardy_range(&p1, s).interval.is_subset_of(&hardy_range(&p2, s).interval));
        let (e1, e2) = (equiv_ranges(&p1, s).unwrap(), equiv_ranges(&p2, s).unwrap());
        prop_assert!(e1.forward.is_subset_of(&e2.forward));
        prop_assert!(e1.reverse.is_subset_of(&e2.reverse));
    }
}
