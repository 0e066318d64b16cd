//! Parameterization of L_a = −Δ + a/|x|²: σ, per-sector Bessel orders,
//! exponent windows and the Liouville-form radial operator.

use serde::Serialize;

use crate::error::{ensure, Result};
use crate::grids::{GridKind, RadialFunction};

/// Coupling data for L_a on ℝ^d.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorParams {
    pub d: usize,
    pub a: f64,
    /// σ = (d−2)/2 − ½√((d−2)² + 4a).
    pub sigma: f64,
    /// Lower multiplier exponent d/(d−σ).
    pub r0: f64,
    /// Upper multiplier exponent d/σ, infinite when σ ≤ 0.
    pub r0_prime: f64,
}

/// Half of d − 2.
pub fn half_dim(d: usize) -> f64 {
    0.5 * (d as f64 - 2.0)
}

/// The critical coupling a = −((d−2)/2)².
pub fn endpoint_coupling(d: usize) -> f64 {
    let h = half_dim(d);
    -h * h
}

/// Builds [`OperatorParams`] for d ≥ 3 and a ≥ −((d−2)/2)².
pub fn make_params(d: usize, a: f64) -> Result<OperatorParams> {
    ensure(d >= 3, || format!("dimension must be at least 3, got {d}"))?;
    ensure(a.is_finite() && a >= endpoint_coupling(d), || {
        format!(
            "coupling {a} is below the critical value {} for d = {d}",
            endpoint_coupling(d)
        )
    })?;
    let h = half_dim(d);
    let disc = ((d as f64 - 2.0).powi(2) + 4.0 * a).max(0.0);
    let sigma = h - 0.5 * disc.sqrt();
    let df = d as f64;
    Ok(OperatorParams {
        d,
        a,
        sigma,
        r0: df / (df - sigma),
        r0_prime: if sigma > 0.0 { df / sigma } else { f64::INFINITY },
    })
}

/// Angular momentum ℓ with its Bessel order ν.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorOrder {
    pub ell: usize,
    pub nu: f64,
}

impl OperatorParams {
    pub fn is_endpoint(&self) -> bool {
        self.a == endpoint_coupling(self.d)
    }

    /// Bessel order of sector ℓ.
    pub fn sector_order(&self, ell: usize) -> SectorOrder {
        sector_order(self, ell)
    }

    /// Whether 1 < p < ∞ lies in the multiplier window (r₀, r₀′).
    pub fn in_multiplier_window(&self, p: f64) -> bool {
        p > self.r0.max(1.0) && p < self.r0_prime
    }
}

/// ν_ℓ = √(((d−2)/2)² + a + ℓ(ℓ+d−2)).
pub fn sector_order(params: &OperatorParams, ell: usize) -> SectorOrder {
    let h = half_dim(params.d);
    let nu = if ell == 0 {
        h - params.sigma
    } else {
        let l = ell as f64;
        (h * h + params.a + l * (l + params.d as f64 - 2.0)).max(0.0).sqrt()
    };
    SectorOrder { ell, nu }
}

/// An open interval of reciprocal exponents 1/p.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvInterval {
    pub lo: f64,
    pub hi: f64,
}

impl InvInterval {
    pub fn is_empty(&self) -> bool {
        self.lo >= self.hi
    }

    /// Whether 1/p lies strictly inside.
    pub fn contains_p(&self, p: f64) -> bool {
        let inv = 1.0 / p;
        inv > self.lo && inv < self.hi
    }

    /// Whether `self ⊆ other`.
    pub fn is_subset_of(&self, other: &InvInterval) -> bool {
        self.is_empty() || (self.lo >= other.lo - 1e-15 && self.hi <= other.hi + 1e-15)
    }
}

/// 1/p window of the weighted Hardy inequality and whether its hypotheses hold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardyRange {
    pub interval: InvInterval,
    pub valid: bool,
}

/// ((s+σ)/d, (d−σ)/d) ∩ (0, 1), valid when 0 < s < d and d − s − 2σ > 0.
pub fn hardy_range(params: &OperatorParams, s: f64) -> HardyRange {
    let d = params.d as f64;
    let valid = s > 0.0 && s < d && d - s - 2.0 * params.sigma > 0.0;
    let interval = InvInterval {
        lo: ((s + params.sigma) / d).max(0.0),
        hi: ((d - params.sigma) / d).min(1.0),
    };
    HardyRange {
        interval,
        valid: valid && !interval.is_empty(),
    }
}

/// Forward and reverse 1/p windows of the Sobolev norm equivalence.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquivRanges {
    pub forward: InvInterval,
    pub reverse: InvInterval,
}

/// Windows for ‖(−Δ)^{s/2}f‖_p ≲ ‖L_a^{s/2}f‖_p and its reverse, 0 < s < 2.
pub fn equiv_ranges(params: &OperatorParams, s: f64) -> Result<EquivRanges> {
    ensure(s > 0.0 && s < 2.0, || format!("smoothness must lie in (0, 2), got {s}"))?;
    let d = params.d as f64;
    let sigma = params.sigma;
    let hi = ((d - sigma) / d).min(1.0);
    Ok(EquivRanges {
        forward: InvInterval {
            lo: (s + sigma) / d,
            hi,
        },
        reverse: InvInterval {
            lo: (s / d).max(sigma / d),
            hi,
        },
    })
}

/// Zero-energy solutions of the Liouville-form operator at order ν:
/// r^{1/2+ν} (regular branch) and r^{1/2−ν}, or r^{1/2}·ln r when ν = 0.
pub fn zero_energy_pair(nu: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let g1 = move |r: f64| r.powf(0.5 + nu);
    let g2 = move |r: f64| {
        if nu == 0.0 {
            r.sqrt() * r.ln()
        } else {
            r.powf(0.5 - nu)
        }
    };
    (g1, g2)
}

/// Log-corrected profile |x|^{−(d−2)/2}(ln 1/|x|)^{−1/2} for |x| < 1, zero otherwise.
pub fn endpoint_log_profile(d: usize, r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        r.powf(-half_dim(d)) / (-r.ln()).sqrt()
    }
}

const FD_HALF_WIDTH: usize = 3;
// Sixth-order central stencils for the first and second derivative.
const D1: [f64; 7] = [-1.0 / 60.0, 3.0 / 20.0, -3.0 / 4.0, 0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
const D2: [f64; 7] = [
    1.0 / 90.0,
    -3.0 / 20.0,
    3.0 / 2.0,
    -49.0 / 18.0,
    3.0 / 2.0,
    -3.0 / 20.0,
    1.0 / 90.0,
];

/// Applies −g″ + (4ν²−1)/(4r²)·g by finite differences in u = ln r.
///
/// With g(r) = G(u), g″ = e^{−2u}(G_uu − G_u). The three outermost nodes at
/// each end carry no full stencil and are set to zero.
pub fn liouville_apply(g: &RadialFunction, order: SectorOrder) -> Result<RadialFunction> {
    let grid = g.grid();
    ensure(grid.kind() == GridKind::LogUniform, || {
        "finite differences need a log-uniform grid".to_string()
    })?;
    ensure(grid.len() >= 512, || {
        format!("grid too coarse for finite differences: {} nodes", grid.len())
    })?;
    let r = grid.nodes();
    let du = (r[1] / r[0]).ln();
    let v = g.values();
    let coupling = (4.0 * order.nu * order.nu - 1.0) / 4.0;
    let mut out = vec![0.0; v.len()];
    for i in FD_HALF_WIDTH..v.len() - FD_HALF_WIDTH {
        let window = &v[i - FD_HALF_WIDTH..=i + FD_HALF_WIDTH];
        let gu: f64 = window.iter().zip(&D1).map(|(a, c)| a * c).sum::<f64>() / du;
        let guu: f64 = window.iter().zip(&D2).map(|(a, c)| a * c).sum::<f64>() / (du * du);
        let inv_r2 = 1.0 / (r[i] * r[i]);
        out[i] = -inv_r2 * (guu - gu) + coupling * inv_r2 * v[i];
    }
    g.with_values(out)
}
