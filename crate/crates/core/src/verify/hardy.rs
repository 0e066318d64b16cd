//! Hardy inequalities: ‖|x|^{−s}f‖_p ≲ ‖L_a^{s/2}f‖_p inside its window and
//! the two counterexample families outside it, the classical case a = 0, and
//! the sharp L² constant ((d−2)/2)².

use std::sync::Arc;

use crate::error::{ensure, Error, Result};
use crate::grids::{lp_norm, make_log_grid, range_lp_norm, weighted_lp_norm, RadialFunction, RadialGrid};
use crate::operator::{half_dim, hardy_range};
use crate::spectral::{frac_power, HankelPlan, Sign};

use super::families::bump;
use super::{fit_line, is_monotone, log_space, min_max, FamilyKind, GrowthRow, PlotData, TestFamily, Verdict, VerificationReport};

/// Growth over the family at which a norm counts as unbounded.
pub const GROWTH_THRESHOLD: f64 = 10.0;
/// Relative tolerance on a fitted divergence exponent.
pub const SLOPE_TOLERANCE: f64 = 0.1;

/// Fits ln|f| against ln r over nodes in [lo, hi].
pub fn power_slope(f: &RadialFunction, lo: f64, hi: f64) -> f64 {
    let (xs, ys): (Vec<f64>, Vec<f64>) = f
        .grid()
        .nodes()
        .iter()
        .zip(f.values())
        .filter(|(r, v)| **r >= lo && **r <= hi && **v != 0.0)
        .map(|(r, v)| (r.ln(), v.abs().ln()))
        .unzip();
    fit_line(&xs, &ys).0
}

/// Largest ratio over the family compared with the largest ratio over the
/// members whose parameter lies a decade inside the family's range.
fn refinement_growth(ratios: &[(f64, f64)]) -> f64 {
    let (lo, hi) = min_max(ratios.iter().map(|r| r.0));
    let full = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let inside = ratios
        .iter()
        .filter(|r| r.0 >= 10.0 * lo && r.0 <= hi / 10.0)
        .map(|r| r.1)
        .fold(0.0, f64::max);
    if inside > 0.0 {
        full / inside
    } else {
        1.0
    }
}

/// ‖|x|^{−s}f‖_p/‖L_a^{s/2}f‖_p over a test family.
///
/// Inside the window the family is expected to give bounded, refinement-stable
/// ratios. Outside it every member must be a Riesz potential of a bump whose
/// parameter is an annulus cutoff ε: shells probe the inner annulus [ε, 1]
/// (failure when (s+σ)p ≥ d), origin bumps the outer annulus [10, 10/ε]
/// (failure when p ≤ d/(d−σ)).
pub fn hardy_sweep(plan: &HankelPlan, s: f64, p: f64, family: &[TestFamily]) -> Result<VerificationReport> {
    let params = *plan.params();
    let d = params.d as f64;
    let sigma = params.sigma;
    ensure(s > 0.0 && s < d && d - s - 2.0 * sigma > 0.0, || {
        format!("Hardy sweep needs 0 < s < d and d - s - 2σ > 0 (s = {s}, σ = {sigma})")
    })?;
    ensure(!family.is_empty(), || "empty test family".to_string())?;
    let range = hardy_range(&params, s);
    let in_range = range.valid && range.interval.contains_p(p);
    let mut report = VerificationReport::new("hardy").operator(&params).param("s", s).param("p", p);
    report.constant("inv_p_lo", range.interval.lo);
    report.constant("inv_p_hi", range.interval.hi);
    if in_range {
        let mut ratios = Vec::new();
        let mut diverged = false;
        for member in family {
            let f = member.realize(plan)?;
            let lhs = weighted_lp_norm(&f, p, s);
            let rhs_fn = frac_power(plan, s, Sign::Plus, &f)?;
            let rhs = weighted_lp_norm(&rhs_fn, p, 0.0);
            diverged |= lhs.diverged || rhs.diverged;
            ratios.push((member.parameter, lhs.value / rhs.value));
        }
        let growth = refinement_growth(&ratios);
        report.observe(ratios.iter().map(|r| r.1));
        report.constant("refinement_growth", growth);
        let pass = !diverged && report.observed_max.is_finite() && growth <= 1.1;
        return Ok(report.with_verdict(if pass { Verdict::Pass } else { Verdict::Fail }));
    }
    let mut members: Vec<(f64, f64, f64)> = Vec::new();
    for m in family {
        match m.kind {
            FamilyKind::RieszOfBump { s: fs, offset } if fs == s => members.push((offset, m.parameter, fs)),
            _ => {
                return Err(Error::Parameter(
                    "outside the Hardy window the family must be Riesz potentials of bumps at the same s".into(),
                ))
            }
        }
    }
    let offset = members[0].0;
    ensure(members.iter().all(|m| m.0 == offset), || "mixed bump offsets in one sweep".to_string())?;
    let inner = offset > 0.0;
    let expected_failure = if inner { (s + sigma) * p >= d } else { p <= d / (d - sigma) };
    let base = RadialFunction::from_fn(plan.grid().clone(), 0, |r| if inner { bump(r - offset) } else { bump(r) })?;
    let f = frac_power(plan, s, Sign::Minus, &base)?;
    // L_a^{s/2}f is the bump itself.
    let rhs = lp_norm(&base, p);
    let mut eps: Vec<f64> = members.iter().map(|m| m.1).collect();
    eps.sort_by(|a, b| b.total_cmp(a));
    let curve: Vec<GrowthRow> = eps
        .iter()
        .map(|&e| {
            let (lo, hi) = if inner { (e, 1.0) } else { (10.0, 10.0 / e) };
            GrowthRow { eps: e, annulus_norm: range_lp_norm(&f, p, s, lo, hi) / rhs }
        })
        .collect();
    let norms: Vec<f64> = curve.iter().map(|c| c.annulus_norm).collect();
    let growth = norms[norms.len() - 1] / norms[0];
    let r_min = plan.grid().r_min();
    let r_max = plan.grid().r_max();
    let (slope, theory) = if inner {
        (power_slope(&f, 10.0 * r_min, 1e-2), -sigma)
    } else {
        (power_slope(&f, 1e2, r_max / 10.0), s + sigma - d)
    };
    let slope_ok = (slope - theory).abs() <= SLOPE_TOLERANCE * theory.abs();
    report.slope = Some(slope);
    report.observe(norms.iter().copied());
    report.constant("growth", growth);
    report.constant("theory_slope", theory);
    report.note(if inner {
        "shell bump, inner annulus [eps, 1]"
    } else {
        "origin bump, outer annulus [10, 10/eps]"
    });
    report.plot = Some(PlotData::GrowthCurve(curve));
    let diverges = expected_failure && is_monotone(&norms) && (growth >= GROWTH_THRESHOLD || slope_ok);
    Ok(report.with_verdict(if diverges { Verdict::DivergesAsDesigned } else { Verdict::Fail }))
}

/// The two counterexample families at annulus cutoffs 1e−1 … 1e−4.
pub fn counterexample_family(s: f64, inner: bool) -> Vec<TestFamily> {
    let offset = if inner { 5.0 } else { 0.0 };
    [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&e| TestFamily::new(FamilyKind::RieszOfBump { s, offset }, e))
        .collect()
}

/// Hardy inequality for −Δ: bounded ratios for 0 ≤ s < d/p, and for s ≥ d/p
/// divergence of ‖|x|^{−s}f‖_p for the Gaussian, which does not vanish at 0.
pub fn classical_hardy_check(plan0: &HankelPlan, s: f64, p: f64, family: &[TestFamily]) -> Result<VerificationReport> {
    let params = *plan0.params();
    ensure(params.a == 0.0, || "classical Hardy check needs the free plan".to_string())?;
    ensure(p > 1.0 && p.is_finite(), || format!("need 1 < p < ∞, got {p}"))?;
    let d = params.d as f64;
    let mut report = VerificationReport::new("classical-hardy").operator(&params).param("s", s).param("p", p);
    if s >= d / p {
        let g = RadialFunction::from_fn(plan0.grid().clone(), 0, |r| (-r * r).exp())?;
        let est = weighted_lp_norm(&g, p, s);
        report.observe([est.value]);
        report.constant("inner_change", est.inner_change);
        return Ok(report.with_verdict(if est.diverged { Verdict::DivergesAsDesigned } else { Verdict::Fail }));
    }
    let mut ratios = Vec::new();
    let mut diverged = false;
    for member in family {
        let f = member.realize(plan0)?;
        let lhs = weighted_lp_norm(&f, p, s);
        let rhs = if s == 0.0 { f.clone() } else { frac_power(plan0, s, Sign::Plus, &f)? };
        let rhs = weighted_lp_norm(&rhs, p, 0.0);
        diverged |= lhs.diverged || rhs.diverged;
        ratios.push((member.parameter, lhs.value / rhs.value));
    }
    let growth = refinement_growth(&ratios);
    report.observe(ratios.iter().map(|r| r.1));
    report.constant("refinement_growth", growth);
    let pass = !diverged && report.observed_max.is_finite() && growth <= 1.1;
    Ok(report.with_verdict(if pass { Verdict::Pass } else { Verdict::Fail }))
}

/// A grid symmetric about r = 1 on which truncated power profiles lose the
/// same fraction of mass at both ends.
pub fn symmetric_grid(d: usize) -> Result<Arc<RadialGrid>> {
    Ok(Arc::new(make_log_grid(1e-12, 1e12, 6144, d)?))
}

/// ‖∇f‖₂²/‖f/|x|‖₂² for a closed-form member.
pub fn dirichlet_hardy_ratio(grid: &RadialGrid, member: &TestFamily) -> Result<f64> {
    let prof = member.profile(grid.dim())?;
    let (num, den): (Vec<f64>, Vec<f64>) = grid
        .nodes()
        .iter()
        .map(|&r| {
            let v = (prof.value)(r);
            let dv = (prof.derivative)(r);
            (dv * dv, v * v / (r * r))
        })
        .unzip();
    Ok(grid.integrate(&num) / grid.integrate(&den))
}

/// Fifty members: fifteen dilated bumps, fifteen shells and twenty truncated
/// power profiles.
pub fn sharp_hardy_family() -> Vec<TestFamily> {
    let mut out = TestFamily::dilations(&log_space(1e-2, 1e2, 15));
    out.extend(log_space(1.0, 30.0, 15).into_iter().map(|r| TestFamily::new(FamilyKind::ShiftedBump, r)));
    out.extend(log_space(1e-2, 2.0, 20).into_iter().map(|e| TestFamily::new(FamilyKind::InnerCutoffPower, e)));
    out
}

/// min over the family of ‖∇f‖₂²/‖f/|x|‖₂², which must not fall below
/// ((d−2)/2)² by more than `rel_tol`.
pub fn sharp_hardy_check(d: usize, family: &[TestFamily], rel_tol: f64) -> Result<VerificationReport> {
    let grid = symmetric_grid(d)?;
    let ratios = family.iter().map(|m| dirichlet_hardy_ratio(&grid, m)).collect::<Result<Vec<_>>>()?;
    let h2 = half_dim(d).powi(2);
    let mut report = VerificationReport::new("sharp-hardy").param("d", d as f64).param("rel_tol", rel_tol);
    report.observe(ratios.iter().copied());
    report.constant("sharp_constant", h2);
    report.constant("members", family.len() as f64);
    let pass = report.observed_min >= h2 * (1.0 - rel_tol);
    Ok(report.with_verdict(if pass { Verdict::Pass } else { Verdict::Fail }))
}

/// Ratios of the truncated power profiles |x|^{−(d−2)/2}min(|x|^δ, |x|^{−δ})
/// as δ decreases; the last must be within `rel_tol` of ((d−2)/2)².
pub fn near_optimizer_check(d: usize, deltas: &[f64], rel_tol: f64) -> Result<VerificationReport> {
    let grid = symmetric_grid(d)?;
    let h2 = half_dim(d).powi(2);
    let ratios = deltas
        .iter()
        .map(|&e| dirichlet_hardy_ratio(&grid, &TestFamily::new(FamilyKind::InnerCutoffPower, e)))
        .collect::<Result<Vec<_>>>()?;
    let mut report = VerificationReport::new("hardy-near-optimizer").param("d", d as f64).param("rel_tol", rel_tol);
    report.observe(ratios.iter().copied());
    report.constant("sharp_constant", h2);
    let last = *ratios.last().ok_or_else(|| Error::Parameter("no δ values".into()))?;
    report.constant("last_ratio", last);
    let pass = ((last - h2) / h2).abs() <= rel_tol;
    Ok(report.with_verdict(if pass { Verdict::Pass } else { Verdict::Fail }))
}
