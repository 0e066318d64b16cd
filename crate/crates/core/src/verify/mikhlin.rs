//! Symbol conditions λ^j|∂^j m(λ)| ≲ 1 and the operational multiplier bound
//! ‖m(√L_a)f‖_p/‖f‖_p over dilated bumps.

use crate::error::{Error, Result};
use crate::grids::{weighted_lp_norm, RadialFunction};
use crate::spectral::{apply_multiplier, HankelPlan, Multiplier};

use super::{log_space, min_max, TestFamily, Verdict, VerificationReport};

/// Number of derivatives required in dimension d: 3⌊d/4⌋ + 3.
pub fn mikhlin_order(d: usize) -> usize {
    3 * (d / 4) + 3
}

/// Settings of [`mikhlin_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct MikhlinOptions {
    /// Highest derivative checked.
    pub order: usize,
    /// Largest admissible supremum.
    pub cap: f64,
    /// Largest admissible ratio between the suprema over the full λ grid and
    /// over its inner part (one decade in from each end).
    pub growth_limit: f64,
}

impl MikhlinOptions {
    pub fn for_dim(d: usize) -> Self {
        Self {
            order: mikhlin_order(d),
            cap: 1e8,
            growth_limit: 1.1,
        }
    }
}

/// The default λ grid: 100 points per decade on [1e−3, 1e3].
pub fn default_lambda_grid() -> Vec<f64> {
    log_space(1e-3, 1e3, 601)
}

/// Central difference of order j with step h: error O(h²).
fn central_difference(m: &Multiplier, j: usize, lambda: f64, h: f64) -> f64 {
    let mut binom = 1.0;
    let mut acc = 0.0;
    for i in 0..=j {
        let x = lambda + (0.5 * j as f64 - i as f64) * h;
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * binom * m.eval(x);
        binom = binom * (j - i) as f64 / (i + 1) as f64;
    }
    acc / h.powi(j as i32)
}

/// j-th derivative by central differences with two Richardson steps, and
/// whether the two highest-order estimates disagree.
pub fn richardson_derivative(m: &Multiplier, j: usize, lambda: f64) -> (f64, bool) {
    let h = lambda / (j as f64 + 2.0);
    let d1 = central_difference(m, j, lambda, h);
    let d2 = central_difference(m, j, lambda, 0.5 * h);
    let d3 = central_difference(m, j, lambda, 0.25 * h);
    let r1 = (4.0 * d2 - d1) / 3.0;
    let r2 = (4.0 * d3 - d2) / 3.0;
    let value = (16.0 * r2 - r1) / 15.0;
    let scaled_gap = (r2 - r1).abs() * lambda.powi(j as i32);
    (value, scaled_gap > 1e-4 * (1.0 + (value * lambda.powi(j as i32)).abs()))
}

/// sup_λ λ^j|∂^j m(λ)| for j = 0..=order over `lambda_grid`.
///
/// Passes when every supremum is finite, at most `cap`, reliable, and grows
/// by at most `growth_limit` between the inner part of the grid and the full
/// grid (so the supremum is not still climbing at the window edge).
pub fn mikhlin_check(m: &Multiplier, d: usize, lambda_grid: &[f64], opts: &MikhlinOptions) -> Result<VerificationReport> {
    if lambda_grid.len() < 3 || lambda_grid.iter().any(|l| *l <= 0.0) {
        return Err(Error::Parameter("λ grid needs at least three positive points".into()));
    }
    let (lo, hi) = min_max(lambda_grid.iter().copied());
    let inner = |l: f64| l >= 10.0 * lo && l <= hi / 10.0;
    let mut report = VerificationReport::new("mikhlin")
        .param("d", d as f64)
        .param("order", opts.order as f64)
        .param("lambda_min", lo)
        .param("lambda_max", hi);
    report.note(format!("symbol: {:?}", m.symbol));
    let mut pass = true;
    let mut sups = Vec::new();
    for j in 0..=opts.order {
        let mut full = 0.0f64;
        let mut inside = 0.0f64;
        let mut unreliable = false;
        for &l in lambda_grid {
            let (deriv, bad) = match m.derivative(j, l) {
                Some(v) => (v, false),
                None => richardson_derivative(m, j, l),
            };
            unreliable |= bad;
            let v = l.powi(j as i32) * deriv.abs();
            full = full.max(v);
            if inner(l) {
                inside = inside.max(v);
            }
        }
        let growth = if inside > 0.0 { full / inside } else if full > 0.0 { f64::INFINITY } else { 1.0 };
        report.constant(&format!("sup_j{j}"), full);
        report.constant(&format!("growth_j{j}"), growth);
        if unreliable {
            report.note(format!("derivative {j} unreliable"));
        }
        pass &= full.is_finite() && full <= opts.cap && !unreliable && growth <= opts.growth_limit;
        sups.push(full);
    }
    report.observe(sups);
    Ok(report.with_verdict(if pass { Verdict::Pass } else { Verdict::Fail }))
}

/// ‖m(√L_a)f‖_p/‖f‖_p over dilated bumps.
///
/// Passes when no norm is flagged divergent and the largest ratio over the
/// whole family exceeds the largest ratio over the members one decade in from
/// each end by at most 10%.
pub fn multiplier_bound_check(plan: &HankelPlan, m: &Multiplier, p: f64, scales: &[f64]) -> Result<VerificationReport> {
    let params = *plan.params();
    let mut report = VerificationReport::new("multiplier-bound").operator(&params).param("p", p);
    report.note(format!("symbol: {:?}", m.symbol));
    let (lo, hi) = min_max(scales.iter().copied());
    let mut ratios = Vec::new();
    let mut diverged = false;
    for fam in TestFamily::dilations(scales) {
        let f: RadialFunction = fam.realize(plan)?;
        let out = apply_multiplier(plan, m, &f)?;
        let num = weighted_lp_norm(&out, p, 0.0);
        let den = weighted_lp_norm(&f, p, 0.0);
        diverged |= num.diverged || den.diverged;
        ratios.push((fam.parameter, num.value / den.value));
    }
    let full = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let inside = ratios
        .iter()
        .filter(|r| r.0 >= 10.0 * lo && r.0 <= hi / 10.0)
        .map(|r| r.1)
        .fold(0.0, f64::max);
    let growth = full / inside;
    report.observe(ratios.iter().map(|r| r.1));
    report.constant("growth", growth);
    if diverged {
        report.note("a norm was flagged divergent at the origin");
    }
    let pass = !diverged && full.is_finite() && growth <= 1.1;
    Ok(report.with_verdict(if pass { Verdict::Pass } else { Verdict::Fail }))
}
