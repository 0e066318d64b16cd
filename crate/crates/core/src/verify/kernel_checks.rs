//! Lattice checks of the heat, Riesz and Littlewood–Paley difference kernels
//! against closed forms and envelopes, and the two-path heat cross-check.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::Result;
use crate::grids::{RadialFunction, RadialGrid};
use crate::kernels::{
    diff_envelope, diff_regimes, euclidean_heat, fit_heat_envelope, heat_envelope, heat_full, heat_sector, kernel_diff,
    riesz_envelope, riesz_kernel, DiffRegime, EnvelopeShape, KernelEnvelope, PointPair,
};
use crate::operator::{make_params, OperatorParams};
use crate::spectral::{apply_multiplier, make_plan, Multiplier};

use super::{log_space, min_max, LatticeRow, PlotData, Verdict, VerificationReport};

/// Default sector cap for the lattice sweeps; the sums stop adaptively well before.
pub const LATTICE_L_MAX: usize = 20_000;

/// Largest |x−y|²/t kept on heat lattices. Beyond it the true kernel is below
/// e^{−16} of its diagonal value and the sector sum only resolves cancellation
/// noise.
pub const MAX_SPREAD: f64 = 64.0;

/// Cosines sampled on every lattice.
const COSINES: [f64; 7] = [-1.0, -0.5, 0.0, 0.5, 0.9, 0.99, 1.0];

/// 10⁴ pairs with |x|, |y| ∈ [0.1, 10], ten angles and ten times per pair,
/// t = |x||y|·τ with τ log-spaced in [0.05, 100].
pub fn gaussian_lattice() -> Vec<PointPair> {
    let radii = log_space(0.1, 10.0, 10);
    let cosines: Vec<f64> = (0..10).map(|i| -1.0 + 2.0 * i as f64 / 9.0).collect();
    let taus = log_space(0.05, 100.0, 10);
    let mut out = Vec::with_capacity(10_000);
    for &rx in &radii {
        for &ry in &radii {
            for &c in &cosines {
                for &tau in &taus {
                    out.push(PointPair { rx, ry, cos: c, t: rx * ry * tau });
                }
            }
        }
    }
    out
}

/// Compares the a = 0 sector sum with the Gaussian on [`gaussian_lattice`].
pub fn gaussian_calibration(d: usize, tol: f64) -> Result<VerificationReport> {
    let params = make_params(d, 0.0)?;
    let lattice = gaussian_lattice();
    let results: Vec<(f64, bool)> = lattice
        .par_iter()
        .map(|pp| {
            let k = heat_full(&params, pp, LATTICE_L_MAX);
            let e = euclidean_heat(d, pp.t, pp.dist_sq());
            ((k.value - e).abs() / e, k.truncated)
        })
        .collect();
    let mut report = VerificationReport::new("gaussian-calibration").operator(&params).param("tol", tol);
    report.observe(results.iter().map(|r| r.0));
    let truncated = results.iter().filter(|r| r.1).count();
    report.constant("lattice_points", lattice.len() as f64);
    report.constant("truncated_points", truncated as f64);
    let pass = report.observed_max <= tol && truncated == 0;
    Ok(report.with_verdict(if pass { Verdict::Pass } else { Verdict::Fail }))
}

/// Pairs with √t/|x|, √t/|y| ∈ [1e−2, 1e2] at t ∈ {1e−2, 1, 1e2}, restricted
/// to |x−y|²/t ≤ [`MAX_SPREAD`].
pub fn heat_lattice() -> Vec<PointPair> {
    let rhos = log_space(1e-2, 1e2, 9);
    let mut out = Vec::new();
    for &t in &[1e-2, 1.0, 1e2] {
        let st: f64 = f64::sqrt(t);
        for &rho_x in &rhos {
            for &rho_y in &rhos {
                for &c in &COSINES {
                    let pp = PointPair { rx: st / rho_x, ry: st / rho_y, cos: c, t };
                    if pp.dist_sq() / t <= MAX_SPREAD {
                        out.push(pp);
                    }
                }
            }
        }
    }
    out
}

/// Largest C₂/C₁ accepted by [`heat_envelope_check`].
pub const HEAT_RATIO_LIMIT: f64 = 1e3;

/// Fits the two-sided heat envelope on [`heat_lattice`].
pub fn heat_envelope_check(params: &OperatorParams, l_max: usize) -> Result<VerificationReport> {
    let lattice = heat_lattice();
    let values: Vec<(PointPair, f64, bool)> = lattice
        .par_iter()
        .map(|pp| {
            let k = heat_full(params, pp, l_max);
            (*pp, k.value, k.truncated)
        })
        .collect();
    let samples: Vec<(PointPair, f64)> = values.iter().map(|(p, k, _)| (*p, *k)).collect();
    let positive = samples.iter().all(|(_, k)| *k > 0.0);
    let truncated = values.iter().filter(|v| v.2).count();
    let fit = fit_heat_envelope(params, &samples);
    let mut rows = Vec::with_capacity(samples.len());
    let mut sandwiched = true;
    for (pp, k) in &samples {
        let lower = heat_envelope(params, pp, &fit.lower);
        let upper = heat_envelope(params, pp, &fit.upper);
        let slack = 1e-12 * k.abs();
        sandwiched &= lower <= k + slack && *k <= upper + slack;
        let unit = heat_envelope(params, pp, &KernelEnvelope::new(EnvelopeShape::Heat, 1.0, fit.upper.rate));
        rows.push(LatticeRow { t: pp.t, rx: pp.rx, ry: pp.ry, cos: pp.cos, kernel: *k, lower, upper, ratio: k / unit });
    }
    let mut report = VerificationReport::new("heat-envelope").operator(params);
    report.observe(rows.iter().map(|r| r.kernel / r.upper));
    report.constant("C1", fit.lower.amplitude);
    report.constant("c1", fit.lower.rate);
    report.constant("C2", fit.upper.amplitude);
    report.constant("c2", fit.upper.rate);
    report.constant("C2_over_C1", fit.ratio);
    report.constant("lattice_points", samples.len() as f64);
    report.constant("truncated_points", truncated as f64);
    if !positive {
        report.note("kernel not positive at every lattice point");
    }
    report.plot = Some(PlotData::RatioLattice(rows));
    let pass = positive && sandwiched && truncated == 0 && fit.ratio.is_finite() && fit.ratio <= HEAT_RATIO_LIMIT;
    Ok(report.with_verdict(if pass { Verdict::Pass } else { Verdict::Fail }))
}

/// Pairs with |x|, |y| on a 7-point log lattice of [1e−2, 1e2] and five
/// angles, excluding x = y.
pub fn riesz_lattice() -> Vec<PointPair> {
    let radii = log_space(1e-2, 1e2, 7);
    let mut out = Vec::new();
    for &rx in &radii {
        for &ry in &radii {
            for &c in &[-1.0, 0.0, 0.5, 0.9, 0.99] {
                out.push(PointPair { rx, ry, cos: c, t: 1.0 });
            }
        }
    }
    out
}

/// Oscillation of log(riesz_kernel/riesz_envelope) over [`riesz_lattice`].
pub fn riesz_envelope_check(params: &OperatorParams, s: f64, l_max: usize) -> Result<VerificationReport> {
    let lattice = riesz_lattice();
    let values = lattice
        .par_iter()
        .map(|pp| riesz_kernel(params, s, pp, l_max).map(|k| (*pp, k)))
        .collect::<Result<Vec<_>>>()?;
    let flagged = values.iter().filter(|(_, k)| k.diverged || k.truncated).count();
    let logs: Vec<f64> = values.iter().map(|(pp, k)| (k.value / riesz_envelope(params, s, pp)).ln()).collect();
    let (lo, hi) = min_max(logs.iter().copied());
    let rows = values
        .iter()
        .zip(&logs)
        .map(|((pp, k), l)| {
            let env = riesz_envelope(params, s, pp);
            LatticeRow {
                t: 0.0,
                rx: pp.rx,
                ry: pp.ry,
                cos: pp.cos,
                kernel: k.value,
                lower: env * lo.exp(),
                upper: env * hi.exp(),
                ratio: l.exp(),
            }
        })
        .collect();
    let mut report = VerificationReport::new("riesz-envelope").operator(params).param("s", s);
    report.observe(logs.iter().map(|l| l.exp()));
    let oscillation = hi - lo;
    report.constant("log_oscillation", oscillation);
    report.constant("flagged_points", flagged as f64);
    report.plot = Some(PlotData::RatioLattice(rows));
    let pass = flagged == 0 && oscillation.is_finite() && oscillation < 1e3f64.ln();
    Ok(report.with_verdict(if pass { Verdict::Pass } else { Verdict::Fail }))
}

/// Gaussian rates tried by the difference-kernel fit, as multipliers of N²|x−y|².
const DIFF_RATES: [f64; 5] = [0.5, 0.25, 0.125, 0.0625, 0.03125];

/// Pairs with N|x|, N|y| on a log lattice of [lo, hi] (five points per
/// decade), eight angles, restricted to N²|x−y|² ≤ [`MAX_SPREAD`].
pub fn diff_lattice(n: f64, lo: f64, hi: f64) -> Vec<PointPair> {
    let count = (5.0 * (hi / lo).log10()).round() as usize + 1;
    let radii = log_space(lo / n, hi / n, count);
    let mut out = Vec::new();
    for &rx in &radii {
        for &ry in &radii {
            for &c in &[-1.0, -0.5, 0.0, 0.5, 0.9, 0.99, 0.999, 1.0] {
                let pp = PointPair { rx, ry, cos: c, t: 1.0 };
                if n * n * pp.dist_sq() <= MAX_SPREAD {
                    out.push(pp);
                }
            }
        }
    }
    out
}

/// Envelope shape for the sign of the coupling, with decay order M = d + 2.
pub fn diff_shape(params: &OperatorParams) -> EnvelopeShape {
    if params.a < 0.0 {
        EnvelopeShape::DiffANeg
    } else {
        EnvelopeShape::DiffAPos
    }
}

/// Fits the amplitude of the difference envelope on a lattice: for each rate,
/// C = max |K|/shape; returns the rate with the smallest C.
fn fit_diff(params: &OperatorParams, n: f64, samples: &[(PointPair, f64)]) -> KernelEnvelope {
    let shape = diff_shape(params);
    let m = params.d as f64 + 2.0;
    DIFF_RATES
        .iter()
        .map(|&c| {
            let unit = KernelEnvelope::new(shape, 1.0, c).with_decay(m);
            let amp = samples
                .iter()
                .map(|(pp, k)| k.abs() / diff_envelope(params, n, pp, &unit))
                .fold(0.0, f64::max);
            KernelEnvelope::new(shape, amp, c).with_decay(m)
        })
        .min_by(|a, b| a.amplitude.total_cmp(&b.amplitude))
        .expect("rate grid is nonempty")
}

fn diff_samples(params: &OperatorParams, n: f64, lattice: &[PointPair], l_max: usize) -> (Vec<(PointPair, f64)>, usize) {
    let vals: Vec<(PointPair, f64, bool)> = lattice
        .par_iter()
        .map(|pp| {
            let k = kernel_diff(params, n, pp, l_max);
            (*pp, k.value, k.truncated)
        })
        .collect();
    let truncated = vals.iter().filter(|v| v.2).count();
    (vals.into_iter().map(|(p, k, _)| (p, k)).collect(), truncated)
}

/// Largest growth of the fitted amplitude when the lattice is widened by a
/// decade at each end.
pub const DIFF_GROWTH_LIMIT: f64 = 2.0;

/// Fits the difference envelope on N|x|, N|y| ∈ [1e−2, 1e2] and checks that
/// the amplitude stays put on [1e−3, 1e3] and that every regime is sampled.
pub fn diff_envelope_check(params: &OperatorParams, n: f64, l_max: usize) -> Result<VerificationReport> {
    let mut report = VerificationReport::new("kernel-diff").operator(params).param("N", n);
    if params.a == 0.0 {
        report.observe([0.0]);
        report.note("zero coupling: the difference vanishes identically");
        return Ok(report.with_verdict(Verdict::Pass));
    }
    let base = diff_lattice(n, 1e-2, 1e2);
    let wide = diff_lattice(n, 1e-3, 1e3);
    let (base_samples, t1) = diff_samples(params, n, &base, l_max);
    let (wide_samples, t2) = diff_samples(params, n, &wide, l_max);
    let env = fit_diff(params, n, &base_samples);
    let wide_amp = wide_samples
        .iter()
        .map(|(pp, k)| k.abs() / diff_envelope(params, n, pp, &KernelEnvelope { amplitude: 1.0, ..env }))
        .fold(0.0, f64::max);
    let growth = wide_amp / env.amplitude;
    report.constant("C", env.amplitude);
    report.constant("c", env.rate);
    report.constant("M", env.decay);
    report.constant("C_wide", wide_amp);
    report.constant("amplitude_growth", growth);
    report.constant("truncated_points", (t1 + t2) as f64);
    let mut regimes_ok = true;
    if env.shape == EnvelopeShape::DiffANeg {
        for regime in [DiffRegime::BothInner, DiffRegime::XInner, DiffRegime::YInner, DiffRegime::BothOuter] {
            let worst = base_samples
                .iter()
                .filter(|(pp, _)| diff_regimes(n, pp.rx, pp.ry).contains(&regime))
                .map(|(pp, k)| k.abs() / diff_envelope(params, n, pp, &env))
                .fold(f64::NAN, f64::max);
            regimes_ok &= worst.is_finite();
            report.constant(&format!("max_ratio_{regime:?}"), worst);
        }
    }
    let rows = base_samples
        .iter()
        .map(|(pp, k)| {
            let e = diff_envelope(params, n, pp, &env);
            LatticeRow { t: 1.0 / (n * n), rx: pp.rx, ry: pp.ry, cos: pp.cos, kernel: *k, lower: -e, upper: e, ratio: k / e }
        })
        .collect::<Vec<_>>();
    report.observe(rows.iter().map(|r| r.ratio));
    report.plot = Some(PlotData::RatioLattice(rows));
    let pass = env.amplitude.is_finite() && t1 + t2 == 0 && regimes_ok && growth <= DIFF_GROWTH_LIMIT;
    Ok(report.with_verdict(if pass { Verdict::Pass } else { Verdict::Fail }))
}

/// Applies e^{−tL} to a radial function by quadrature against the ℓ = 0 kernel.
pub fn heat_by_quadrature(params: &OperatorParams, t: f64, f: &RadialFunction) -> Result<RadialFunction> {
    let grid = f.grid();
    let order = params.sector_order(0);
    let support: Vec<(f64, f64)> = grid
        .nodes()
        .iter()
        .zip(grid.weights())
        .zip(f.values())
        .filter(|(_, v)| **v != 0.0)
        .map(|((r, w), v)| (*r, w * v))
        .collect();
    let out: Vec<f64> = grid
        .nodes()
        .par_iter()
        .map(|&r| support.iter().map(|&(rp, wv)| heat_sector(order, params.d, t, r, rp) * wv).sum())
        .collect();
    f.with_values(out)
}

/// Relative L² distance between the spectral and the kernel-quadrature heat
/// flow of e^{−|x|²}.
pub fn cross_path_check(params: &OperatorParams, t: f64, grid: Arc<RadialGrid>, tol: f64) -> Result<VerificationReport> {
    let plan = make_plan(params, 0, grid.clone())?;
    let f = RadialFunction::from_fn(grid, 0, |r| (-r * r).exp())?;
    let spectral = apply_multiplier(&plan, &Multiplier::heat(t), &f)?;
    let quad = heat_by_quadrature(params, t, &f)?;
    let diff = spectral.combine(1.0, &quad, -1.0);
    let err = crate::grids::lp_norm(&diff, 2.0) / crate::grids::lp_norm(&quad, 2.0);
    let mut report = VerificationReport::new("cross-path").operator(params).param("t", t).param("tol", tol);
    report.observe([err]);
    report.constant("relative_l2_error", err);
    report.constant("calibration_error", plan.calibration_error());
    Ok(report.with_verdict(if err <= tol { Verdict::Pass } else { Verdict::Fail }))
}
