//! Littlewood–Paley checks: Bernstein slopes, expansion of the identity and
//! the difference of square functions for a and for coupling zero.

use crate::error::{ensure, Error, Result};
use crate::grids::{lp_norm, range_lp_norm, weighted_lp_norm, NormEstimate, RadialFunction};
use crate::operator::OperatorParams;
use crate::spectral::{dyadic_range, identity_check, lp_low, square_function, HankelPlan, ProjKind};

use super::families::bump;
use super::{fit_line, min_max, PlotData, SlopeRow, TestFamily, Verdict, VerificationReport};

/// Whether 1/p ≥ 1/q lie in the window where low-pass projections are
/// bounded: r₀ < p ≤ q < r₀′ for a < 0, 1 < p ≤ q ≤ ∞ otherwise.
pub fn bernstein_window(params: &OperatorParams, p: f64, q: f64) -> bool {
    if !(p > 1.0 && q >= p) {
        return false;
    }
    if params.a < 0.0 {
        params.r0 < p && q < params.r0_prime
    } else {
        true
    }
}

/// Low-pass frequencies used for the growth fit and the saturation check.
#[derive(Debug, Clone, PartialEq)]
pub struct BernsteinRange {
    pub growth: Vec<f64>,
    pub saturation: Vec<f64>,
}

impl Default for BernsteinRange {
    fn default() -> Self {
        Self {
            growth: dyadic_range(2f64.powi(-6), 2f64.powi(-2)).expect("dyadic bounds"),
            saturation: vec![16.0, 32.0, 64.0],
        }
    }
}

/// Largest |slope| of the saturated regime.
pub const SATURATION_SLOPE: f64 = 0.05;

/// Slope of ln(‖P̃_{≤N}f‖_q/‖P̃_{≤N}f‖_p) against ln N for the heat low-pass.
///
/// Below the spectral scale of f the projection is a rescaled profile of
/// width 1/N, so the ratio grows exactly like N^{d/p−d/q}; above it the
/// projection is f itself and the ratio saturates.
pub fn bernstein_fit(
    plan: &HankelPlan,
    p: f64,
    q: f64,
    f: &RadialFunction,
    range: &BernsteinRange,
) -> Result<VerificationReport> {
    let params = *plan.params();
    if !bernstein_window(&params, p, q) {
        return Err(Error::Parameter(format!(
            "(p, q) = ({p}, {q}) lies outside the Bernstein window for a = {}",
            params.a
        )));
    }
    ensure(range.growth.len() >= 2, || "need at least two growth frequencies".to_string())?;
    let d = params.d as f64;
    let target = d / p - if q.is_infinite() { 0.0 } else { d / q };
    let ratio = |n: f64| -> Result<f64> {
        let low = lp_low(plan, f, n, ProjKind::Heat)?;
        Ok(lp_norm(&low, q) / lp_norm(&low, p))
    };
    let growth: Vec<f64> = range.growth.iter().map(|&n| ratio(n)).collect::<Result<_>>()?;
    let xs: Vec<f64> = range.growth.iter().map(|n| n.ln()).collect();
    let ys: Vec<f64> = growth.iter().map(|r| r.ln()).collect();
    let (slope, intercept) = fit_line(&xs, &ys);
    let sat: Vec<f64> = range.saturation.iter().map(|&n| ratio(n)).collect::<Result<_>>()?;
    let sat_slope = if sat.len() >= 2 {
        let sx: Vec<f64> = range.saturation.iter().map(|n| n.ln()).collect();
        let sy: Vec<f64> = sat.iter().map(|r| r.ln()).collect();
        fit_line(&sx, &sy).0
    } else {
        0.0
    };
    let mut report = VerificationReport::new("bernstein").operator(&params).param("p", p).param("q", q);
    report.slope = Some(slope);
    report.observe(growth.iter().copied());
    report.constant("intercept", intercept);
    report.constant("target_slope", target);
    report.constant("saturation_slope", sat_slope);
    report.plot = Some(PlotData::SlopeFit(
        range
            .growth
            .iter()
            .zip(&growth)
            .map(|(&n, &r)| SlopeRow {
                n,
                norm_ratio: r,
                fitted_line: (intercept + slope * n.ln()).exp(),
            })
            .collect(),
    ));
    let pass = slope <= target + 0.05 * target.abs() + 0.05 && sat_slope.abs() <= SATURATION_SLOPE;
    Ok(report.with_verdict(if pass { Verdict::Pass } else { Verdict::Fail }))
}

/// A function whose spectrum is the smooth bump on [lo, hi] in ln k.
pub fn band_limited(plan: &HankelPlan, lo: f64, hi: f64) -> Result<RadialFunction> {
    ensure(lo > 0.0 && hi > lo, || format!("invalid band [{lo}, {hi}]"))?;
    let (a, b) = (lo.ln(), hi.ln());
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    plan.synthesize(|k| bump((k.ln() - mid) / half))
}

/// ‖f − Σ_{N∈n_set} P_N f‖_p relative to ‖f‖_p, passing below `tol`.
pub fn identity_report(
    plan: &HankelPlan,
    f: &RadialFunction,
    n_set: &[f64],
    p: f64,
    kind: ProjKind,
    tol: f64,
) -> Result<VerificationReport> {
    let params = *plan.params();
    let residual = identity_check(plan, f, n_set, p, kind)?;
    let norm = lp_norm(f, p);
    let rel = residual / norm;
    let (n_min, n_max) = min_max(n_set.iter().copied());
    let mut report = VerificationReport::new("identity")
        .operator(&params)
        .param("p", p)
        .param("n_min", n_min)
        .param("n_max", n_max);
    report.note(match kind {
        ProjKind::Smooth => "smooth projections",
        ProjKind::Heat => "heat projections",
    });
    report.observe([rel]);
    report.constant("residual", residual);
    report.constant("f_norm", norm);
    Ok(report.with_verdict(if rel < tol { Verdict::Pass } else { Verdict::Fail }))
}

/// Open window of p for the square-function difference:
/// max(1, d/(d+s−σ)) < p < d/σ for a < 0, 1 < p < ∞ otherwise.
pub fn sqfn_window(params: &OperatorParams, s: f64) -> (f64, f64) {
    if params.a < 0.0 {
        let d = params.d as f64;
        ((d / (d + s - params.sigma)).max(1.0), d / params.sigma)
    } else {
        (1.0, f64::INFINITY)
    }
}

/// ‖S_a f − S_0 f‖_p/‖|x|^{−s}f‖_p over dilated bumps, where S is the heat
/// square function (Σ_N N^{2s}|P̃_N f|²)^{1/2}.
///
/// `log2_scales` lists the dilation exponents k, with f = φ(|x|/2^k). The
/// frequency set [2^{−octaves}, 2^{octaves}] is divided by 2^k along with the
/// bump, so every member is the exact rescaling of the first and the ratio
/// must agree across the family up to quadrature error. The right-hand side
/// is finite only for sp < d, which is required.
pub fn sqfn_diff_check(
    plan: &HankelPlan,
    plan0: &HankelPlan,
    s: f64,
    p: f64,
    octaves: i32,
    log2_scales: &[i32],
) -> Result<VerificationReport> {
    let params = *plan.params();
    ensure(s > 0.0 && s < 2.0, || format!("need 0 < s < 2, got {s}"))?;
    ensure(s * p < params.d as f64, || format!("‖|x|^(-s) f‖_p is infinite for s p = {} ≥ d", s * p))?;
    ensure(plan0.params().a == 0.0 && plan0.params().d == params.d, || {
        "the comparison plan must be the free plan in the same dimension".to_string()
    })?;
    let (lo, hi) = sqfn_window(&params, s);
    if !(p > lo && p < hi) {
        return Err(Error::Parameter(format!(
            "p = {p} lies outside the square-function window ({lo:.4}, {hi:.4})"
        )));
    }
    ensure(!log2_scales.is_empty(), || "no dilations given".to_string())?;
    let mut report = VerificationReport::new("sqfn-diff")
        .operator(&params)
        .param("s", s)
        .param("p", p)
        .param("octaves", octaves as f64);
    let mut ratios = Vec::new();
    let mut diverged = false;
    for &k in log2_scales {
        let lambda = 2f64.powi(k);
        let f = TestFamily::dilations(&[lambda])[0].realize(plan)?;
        let n_set = dyadic_range(2f64.powi(-octaves - k), 2f64.powi(octaves - k))?;
        let sa = square_function(plan, &f, s, &n_set, ProjKind::Heat)?;
        let s0 = square_function(plan0, &f, s, &n_set, ProjKind::Heat)?;
        let diff = sa.combine(1.0, &s0, -1.0);
        let outer = SUPPORT_RADIUS / n_set[0];
        let lhs = weighted_lp_norm(&diff, p, 0.0);
        let lhs = NormEstimate { value: range_lp_norm(&diff, p, 0.0, 0.0, outer), ..lhs };
        let rhs = weighted_lp_norm(&f, p, s);
        diverged |= lhs.diverged || rhs.diverged;
        ratios.push(lhs.value / rhs.value);
    }
    let (rmin, rmax) = min_max(ratios.iter().copied());
    let variation = if rmax > 0.0 { rmax / rmin - 1.0 } else { 0.0 };
    report.observe(ratios.iter().copied());
    report.constant("ratio", rmax);
    report.constant("variation", variation);
    if diverged {
        report.note("a norm was flagged divergent at the origin");
    }
    let pass = !diverged && rmax.is_finite() && variation < SQFN_TOLERANCE;
    Ok(report.with_verdict(if pass { Verdict::Pass } else { Verdict::Fail }))
}

/// Largest relative spread of the square-function ratios across dilations.
pub const SQFN_TOLERANCE: f64 = 1e-3;

/// Radius, in units of 1/N_min, beyond which the heat square functions are
/// below e^{−36} of their peak and the computed values are transform noise.
pub const SUPPORT_RADIUS: f64 = 8.0;
