//! Heat kernels (per sector and summed over sectors), Riesz potentials by
//! time integration, Littlewood–Paley kernel differences, and the two-sided
//! envelope shapes they are compared against.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{ensure, Result};
use crate::grids::{time_quadrature, TimeHint};
use crate::operator::{half_dim, OperatorParams, SectorOrder};
use crate::specfun::{bessel_i_scaled, gamma_fn, gegenbauer_at_one, ln_gamma, sphere_area, GegenbauerSeq};

/// Default truncation of the sector sum.
pub const DEFAULT_L_MAX: usize = 64;

/// Two points of ℝ^d given by their radii and the cosine of the angle between
/// them, with an optional time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointPair {
    pub rx: f64,
    pub ry: f64,
    pub cos: f64,
    pub t: f64,
}

impl PointPair {
    /// Validates positive radii and |cos| ≤ 1; the time defaults to 1.
    pub fn new(rx: f64, ry: f64, cos: f64) -> Result<Self> {
        ensure(rx > 0.0 && ry > 0.0 && rx.is_finite() && ry.is_finite(), || {
            format!("radii must be positive, got {rx} and {ry}")
        })?;
        ensure(cos.abs() <= 1.0, || format!("cosine must lie in [-1, 1], got {cos}"))?;
        Ok(Self { rx, ry, cos, t: 1.0 })
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.t = t;
        self
    }

    /// |x − y|², written to avoid cancellation when x ≈ y.
    pub fn dist_sq(&self) -> f64 {
        let dr = self.rx - self.ry;
        dr * dr + 2.0 * self.rx * self.ry * (1.0 - self.cos)
    }

    pub fn dist(&self) -> f64 {
        self.dist_sq().sqrt()
    }

    /// The pair with x and y exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            rx: self.ry,
            ry: self.rx,
            ..*self
        }
    }

    /// The pair dilated by λ in space and λ² in time.
    pub fn dilated(&self, lambda: f64) -> Self {
        Self {
            rx: lambda * self.rx,
            ry: lambda * self.ry,
            cos: self.cos,
            t: lambda * lambda * self.t,
        }
    }
}

/// Heat kernel of sector ℓ with respect to r′^{d−1}dr′:
/// (2t)^{−1}(r r′)^{−(d−2)/2} e^{−(r²+r′²)/4t} I_ν(r r′/2t).
pub fn heat_sector(order: SectorOrder, d: usize, t: f64, r: f64, rp: f64) -> f64 {
    let x = r * rp / (2.0 * t);
    let ln_pref = -(r - rp).powi(2) / (4.0 * t) - half_dim(d) * (r * rp).ln() - (2.0 * t).ln();
    ln_pref.exp() * bessel_i_scaled(order.nu, x)
}

/// Result of a truncated sector sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub value: f64,
    /// Number of sectors summed.
    pub terms: usize,
    /// The bound on the first omitted term exceeded 1e−8 of the sum.
    pub truncated: bool,
    /// The sum lost more than six digits to cancellation between sectors.
    pub cancellation: bool,
}

/// Relative size of the omitted tail at which the sector sum stops.
const TAIL_TOL: f64 = 1e-15;

/// Σ_ℓ heat_sector(ν_ℓ)·Z_ℓ(cos θ) with Z_ℓ = (2ℓ+d−2)/(d−2)·C_ℓ^{(d−2)/2}(cos θ)/ω_{d−1}.
pub fn heat_full(params: &OperatorParams, pp: &PointPair, l_max: usize) -> KernelValue {
    let d = params.d;
    let h = half_dim(d);
    let t = pp.t;
    let x = pp.rx * pp.ry / (2.0 * t);
    let ln_base = -(pp.rx - pp.ry).powi(2) / (4.0 * t) - h * (pp.rx * pp.ry).ln() - (2.0 * t).ln();
    let omega = sphere_area(d);
    let mut geg = GegenbauerSeq::new(h, pp.cos);
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let mut terms = 0;
    let mut truncated = false;
    for ell in 0..=l_max {
        let nu = params.sector_order(ell).nu;
        let weight = (2.0 * ell as f64 + d as f64 - 2.0) / (d as f64 - 2.0) / omega;
        let i_nu = bessel_i_scaled(nu, x);
        let term = i_nu * weight * geg.next_value();
        sum += term;
        abs_sum += term.abs();
        terms = ell + 1;
        let bound = i_nu * weight * gegenbauer_at_one(ell, h);
        let past_peak = nu * nu > 2.0 * x;
        if past_peak && bound <= TAIL_TOL * sum.abs() {
            break;
        }
        if ell == l_max && bound > 1e-8 * sum.abs() {
            truncated = true;
        }
        if i_nu == 0.0 && past_peak {
            break;
        }
    }
    KernelValue {
        value: ln_base.exp() * sum,
        terms,
        truncated,
        cancellation: sum.abs() < 1e-6 * abs_sum,
    }
}

/// (4πt)^{−d/2} e^{−|x−y|²/4t}.
pub fn euclidean_heat(d: usize, t: f64, dist_sq: f64) -> f64 {
    (4.0 * PI * t).powf(-0.5 * d as f64) * (-dist_sq / (4.0 * t)).exp()
}

/// Envelope families compared against computed kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EnvelopeShape {
    /// C(1∨√t/|x|)^σ(1∨√t/|y|)^σ t^{−d/2} e^{−|x−y|²/ct}.
    Heat,
    /// |x−y|^{s−d}(|x|/|x−y| ∧ |y|/|x−y| ∧ 1)^{−σ}.
    Riesz,
    /// C N^d max{1, N(|x|+|y|)}^{−2} e^{−cN²|x−y|²}.
    DiffAPos,
    /// Four-regime bound for negative coupling.
    DiffANeg,
}

/// An envelope shape with its constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelEnvelope {
    pub shape: EnvelopeShape,
    /// Amplitude C.
    pub amplitude: f64,
    /// Gaussian rate c.
    pub rate: f64,
    /// Polynomial decay order M of the off-diagonal regimes.
    pub decay: f64,
}

impl KernelEnvelope {
    pub fn new(shape: EnvelopeShape, amplitude: f64, rate: f64) -> Self {
        Self {
            shape,
            amplitude,
            rate,
            decay: 0.0,
        }
    }

    pub fn with_decay(mut self, m: f64) -> Self {
        self.decay = m;
        self
    }
}

/// C(1∨√t/|x|)^σ(1∨√t/|y|)^σ t^{−d/2} e^{−|x−y|²/ct}.
pub fn heat_envelope(params: &OperatorParams, pp: &PointPair, env: &KernelEnvelope) -> f64 {
    env.amplitude * heat_weight(params, pp) * pp.t.powf(-0.5 * params.d as f64)
        * (-pp.dist_sq() / (env.rate * pp.t)).exp()
}

/// (1∨√t/|x|)^σ(1∨√t/|y|)^σ.
pub fn heat_weight(params: &OperatorParams, pp: &PointPair) -> f64 {
    let st = pp.t.sqrt();
    (1f64.max(st / pp.rx) * 1f64.max(st / pp.ry)).powf(params.sigma)
}

/// Riesz kernel with its quadrature diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RieszValue {
    pub value: f64,
    pub diverged: bool,
    /// A truncated sector sum carried more than 1e−8 of the integral.
    pub truncated: bool,
}

/// L_a^{−s/2}(x,y) = Γ(s/2)^{−1}∫₀^∞ e^{−tL_a}(x,y) t^{s/2} dt/t.
pub fn riesz_kernel(params: &OperatorParams, s: f64, pp: &PointPair, l_max: usize) -> Result<RieszValue> {
    let d = params.d as f64;
    ensure(s > 0.0 && s < d && d - s - 2.0 * params.sigma > 0.0, || {
        format!("Riesz potential needs 0 < s < d and d - s - 2σ > 0 (s = {s}, σ = {})", params.sigma)
    })?;
    let d2 = pp.dist_sq();
    let inv_gamma = 1.0 / gamma_fn(0.5 * s)?;
    // Largest contribution t·g(t) of a truncated sector sum to the integral.
    let truncated_weight = std::cell::Cell::new(0.0f64);
    let quad = time_quadrature(
        |t| {
            if d2 / (4.0 * t) > 60.0 {
                return 0.0;
            }
            let k = heat_full(params, &pp.with_time(t), l_max);
            let g = k.value * t.powf(0.5 * s - 1.0) * inv_gamma;
            if k.truncated {
                truncated_weight.set(truncated_weight.get().max((g * t).abs()));
            }
            g
        },
        TimeHint { center: d2 },
    );
    Ok(RieszValue {
        value: quad.value,
        diverged: quad.diverged,
        truncated: truncated_weight.get() > 1e-8 * quad.value.abs(),
    })
}

/// Γ((d−s)/2)/(2^s π^{d/2} Γ(s/2))·|x−y|^{s−d}, the free Riesz kernel.
pub fn euclidean_riesz(d: usize, s: f64, dist: f64) -> f64 {
    let df = d as f64;
    let ln_c = ln_gamma(0.5 * (df - s)) - s * 2f64.ln() - 0.5 * df * PI.ln() - ln_gamma(0.5 * s);
    ln_c.exp() * dist.powf(s - df)
}

/// |x−y|^{s−d}(|x|/|x−y| ∧ |y|/|x−y| ∧ 1)^{−σ}.
pub fn riesz_envelope(params: &OperatorParams, s: f64, pp: &PointPair) -> f64 {
    let dist = pp.dist();
    let m = (pp.rx / dist).min(pp.ry / dist).min(1.0);
    dist.powf(s - params.d as f64) * m.powf(-params.sigma)
}

/// K_N(x,y) = (P̃_N − P̃_N^a)(x,y) with P̃_N = e^{−L/N²} − e^{−4L/N²}.
pub fn kernel_diff(params: &OperatorParams, n: f64, pp: &PointPair, l_max: usize) -> KernelValue {
    if params.a == 0.0 {
        return KernelValue {
            value: 0.0,
            terms: 0,
            truncated: false,
            cancellation: false,
        };
    }
    let d = params.d;
    let (t1, t4) = (1.0 / (n * n), 4.0 / (n * n));
    let d2 = pp.dist_sq();
    let free = euclidean_heat(d, t1, d2) - euclidean_heat(d, t4, d2);
    let k1 = heat_full(params, &pp.with_time(t1), l_max);
    let k4 = heat_full(params, &pp.with_time(t4), l_max);
    KernelValue {
        value: free - (k1.value - k4.value),
        terms: k1.terms.max(k4.terms),
        truncated: k1.truncated || k4.truncated,
        cancellation: k1.cancellation || k4.cancellation,
    }
}

/// Regimes of the negative-coupling difference bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiffRegime {
    /// |x|, |y| ≤ 1/N.
    BothInner,
    /// 2|x| ≤ 1/N ≤ |y|.
    XInner,
    /// 2|y| ≤ 1/N ≤ |x|.
    YInner,
    /// |x|, |y| ≥ 1/(2N).
    BothOuter,
}

/// All regimes containing the pair at frequency N.
pub fn diff_regimes(n: f64, rx: f64, ry: f64) -> Vec<DiffRegime> {
    let inv = 1.0 / n;
    let mut out = Vec::new();
    if rx <= inv && ry <= inv {
        out.push(DiffRegime::BothInner);
    }
    if 2.0 * rx <= inv && inv <= ry {
        out.push(DiffRegime::XInner);
    }
    if 2.0 * ry <= inv && inv <= rx {
        out.push(DiffRegime::YInner);
    }
    if rx >= 0.5 * inv && ry >= 0.5 * inv {
        out.push(DiffRegime::BothOuter);
    }
    out
}

/// Value of one regime's bound.
pub fn diff_regime_bound(params: &OperatorParams, n: f64, pp: &PointPair, env: &KernelEnvelope, regime: DiffRegime) -> f64 {
    let d = params.d as f64;
    let sigma = params.sigma;
    let (nx, ny) = (n * pp.rx, n * pp.ry);
    let c = env.amplitude;
    match regime {
        DiffRegime::BothInner => c * n.powf(d - 2.0 * sigma) * (pp.rx * pp.ry).powf(-sigma),
        DiffRegime::XInner => c * n.powf(d) * nx.powf(-sigma) * ny.powf(-env.decay),
        DiffRegime::YInner => c * n.powf(d) * ny.powf(-sigma) * nx.powf(-env.decay),
        DiffRegime::BothOuter => {
            c * n.powf(d - 2.0) * (pp.rx + pp.ry).powi(-2) * (-env.rate * n * n * pp.dist_sq()).exp()
        }
    }
}

/// The difference bound at (x, y): the positive-coupling form, or the minimum
/// over the applicable regimes of the negative-coupling form.
pub fn diff_envelope(params: &OperatorParams, n: f64, pp: &PointPair, env: &KernelEnvelope) -> f64 {
    match env.shape {
        EnvelopeShape::DiffANeg => diff_regimes(n, pp.rx, pp.ry)
            .into_iter()
            .map(|r| diff_regime_bound(params, n, pp, env, r))
            .fold(f64::INFINITY, f64::min),
        _ => {
            let d = params.d as f64;
            let spread = 1f64.max(n * (pp.rx + pp.ry));
            env.amplitude * n.powf(d) * spread.powi(-2) * (-env.rate * n * n * pp.dist_sq()).exp()
        }
    }
}

/// Limit of heat_full·t^{d/2−σ}(|x||y|)^σ as t → ∞.
pub fn large_time_constant(params: &OperatorParams) -> f64 {
    let nu0 = params.sector_order(0).nu;
    (-(1.0 + 2.0 * nu0) * 2f64.ln() - ln_gamma(nu0 + 1.0)).exp() / sphere_area(params.d)
}

/// Gaussian rates c tried by the envelope fits.
pub const RATE_GRID: [f64; 5] = [2.0, 4.0, 8.0, 16.0, 32.0];

/// Two-sided heat envelope fitted to kernel samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HeatEnvelopeFit {
    pub lower: KernelEnvelope,
    pub upper: KernelEnvelope,
    /// C₂/C₁.
    pub ratio: f64,
}

/// Fits lower and upper heat envelopes to (pair, kernel) samples.
///
/// For each rate c the tightest amplitudes are the extreme values of
/// kernel/shape; the rates are chosen independently to minimize C₂/C₁.
pub fn fit_heat_envelope(params: &OperatorParams, samples: &[(PointPair, f64)]) -> HeatEnvelopeFit {
    let unit = |c: f64| KernelEnvelope::new(EnvelopeShape::Heat, 1.0, c);
    let mut best_lower = (0.0, RATE_GRID[0]);
    let mut best_upper = (f64::INFINITY, RATE_GRID[0]);
    for &c in &RATE_GRID {
        let env = unit(c);
        let (lo, hi) = samples.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), (pp, k)| {
            let q = k / heat_envelope(params, pp, &env);
            (lo.min(q), hi.max(q))
        });
        if lo > best_lower.0 {
            best_lower = (lo, c);
        }
        if hi < best_upper.0 {
            best_upper = (hi, c);
        }
    }
    HeatEnvelopeFit {
        lower: KernelEnvelope::new(EnvelopeShape::Heat, best_lower.0, best_lower.1),
        upper: KernelEnvelope::new(EnvelopeShape::Heat, best_upper.0, best_upper.1),
        ratio: best_upper.0 / best_lower.0,
    }
}
