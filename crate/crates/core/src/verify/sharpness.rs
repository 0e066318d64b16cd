//! Failure of multiplier bounds outside (r₀, r₀′): e^{−L_a}φ behaves like
//! |x|^{−σ} at the origin, so it leaves L^p once p ≥ d/σ.

use std::sync::Arc;

use crate::error::Result;
use crate::grids::{make_log_grid, range_lp_norm, RadialFunction, RadialGrid};
use crate::spectral::{apply_multiplier, HankelPlan, Multiplier};

use super::hardy::{power_slope, GROWTH_THRESHOLD};
use super::{is_monotone, GrowthRow, PlotData, Verdict, VerificationReport};

/// Grid of the demonstration: [1e−6, 1e3], 3072 nodes.
pub fn sharpness_grid(d: usize) -> Result<Arc<RadialGrid>> {
    Ok(Arc::new(make_log_grid(1e-6, 1e3, 3072, d)?))
}

/// Inner cutoffs of the annulus norms.
pub const SHARPNESS_CUTOFFS: [f64; 5] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5];
/// Relative tolerance of the fitted slope against −σ.
pub const SHARPNESS_SLOPE_TOLERANCE: f64 = 0.05;
/// Largest relative change over the last cutoff decade of a convergent norm.
pub const CONVERGED_CHANGE: f64 = 0.01;

/// Annulus norms ‖e^{−L_a}φ‖_{L^p(ε ≤ |x| ≤ 1)} for ε = 1e−1 … 1e−5 and the
/// log-log slope of e^{−L_a}φ on [1e−4, 1e−1], with φ the cutoff equal to 1
/// on B(0, 1/2) and supported in B(0, 1).
///
/// For p ≥ d/σ the verdict is diverges-as-designed when the norms grow
/// monotonically by at least 10× and the slope matches −σ within 5%. For
/// p < d/σ it is pass when the last decade changes the norm by under 1%.
pub fn sharpness_demo(plan: &HankelPlan, p: f64) -> Result<VerificationReport> {
    let params = *plan.params();
    let d = params.d as f64;
    let (phi, _) = super::families::cutoff(0.5);
    let f = RadialFunction::from_fn(plan.grid().clone(), plan.order().ell, phi)?;
    let u = apply_multiplier(plan, &Multiplier::heat(1.0), &f)?;
    let norms: Vec<f64> = SHARPNESS_CUTOFFS.iter().map(|&e| range_lp_norm(&u, p, 0.0, e, 1.0)).collect();
    let slope = power_slope(&u, 1e-4, 1e-1);
    let theory = -params.sigma;
    let slope_ok = (slope - theory).abs() <= SHARPNESS_SLOPE_TOLERANCE * theory.abs().max(1e-2);
    let growth = norms[norms.len() - 1] / norms[0];
    let last_change = norms[norms.len() - 1] / norms[norms.len() - 2] - 1.0;
    let critical = if params.sigma > 0.0 { d / params.sigma } else { f64::INFINITY };
    let mut report = VerificationReport::new("sharpness").operator(&params).param("p", p);
    report.slope = Some(slope);
    report.observe(norms.iter().copied());
    report.constant("growth", growth);
    report.constant("theory_slope", theory);
    report.constant("last_decade_change", last_change);
    report.constant("critical_p", critical);
    report.plot = Some(PlotData::GrowthCurve(
        SHARPNESS_CUTOFFS.iter().zip(&norms).map(|(&e, &n)| GrowthRow { eps: e, annulus_norm: n }).collect(),
    ));
    let verdict = if critical.is_finite() && p >= critical {
        if is_monotone(&norms) && growth >= GROWTH_THRESHOLD && slope_ok {
            Verdict::DivergesAsDesigned
        } else {
            Verdict::Fail
        }
    } else if last_change.abs() < CONVERGED_CHANGE && slope_ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report.with_verdict(verdict))
}
