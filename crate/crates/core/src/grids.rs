//! Radial grids, quadrature in the measure r^{d−1}dr, L^p norms and the
//! double-exponential time quadrature used by Riesz potentials.

use std::f64::consts::{FRAC_PI_2, LN_10};
use std::sync::Arc;

use crate::error::{ensure, Error, Result};
use crate::specfun::sphere_area;

/// Nodes per Gauss–Legendre panel.
pub const PANEL_NODES: usize = 8;

/// How the nodes of a [`RadialGrid`] were laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridKind {
    /// Composite Gauss–Legendre panels in u = ln r.
    GaussLegendre,
    /// Exactly uniform spacing in u = ln r with trapezoid weights.
    LogUniform,
}

/// Radial nodes with weights for ∫₀^∞ · r^{d−1} dr.
#[derive(Debug, Clone)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    dim: usize,
    kind: GridKind,
    /// Panel endpoints in u = ln r (Gauss–Legendre grids only).
    panel_edges: Vec<f64>,
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite Gauss–Legendre grid in u = ln r on [r_min, r_max].
///
/// `n` is rounded up to a multiple of [`PANEL_NODES`]. Every integer power of
/// ten inside the interval is a panel breakpoint, so integrands with a kink at
/// such a radius (indicators of the unit ball, annuli at decades) are
/// integrated at full order.
pub fn make_log_grid(r_min: f64, r_max: f64, n: usize, d: usize) -> Result<RadialGrid> {
    validate_bounds(r_min, r_max, n, d)?;
    let (u0, u1) = (r_min.ln(), r_max.ln());
    let mut breaks = vec![u0];
    let first_decade = (r_min.log10()).floor() as i64 + 1;
    let last_decade = (r_max.log10()).ceil() as i64 - 1;
    for k in first_decade..=last_decade {
        let u = k as f64 * LN_10;
        if u > u0 + 1e-12 && u < u1 - 1e-12 {
            breaks.push(u);
        }
    }
    breaks.push(u1);

    let panels = n.div_ceil(PANEL_NODES);
    let segments = breaks.len() - 1;
    if panels < segments {
        return Err(Error::Parameter(format!(
            "{n} nodes cannot cover {segments} decades with {PANEL_NODES}-point panels"
        )));
    }
    let span = u1 - u0;
    let ideal: Vec<f64> = breaks
        .windows(2)
        .map(|w| (w[1] - w[0]) / span * panels as f64)
        .collect();
    let mut counts: Vec<usize> = ideal.iter().map(|x| (x.floor() as usize).max(1)).collect();
    // Largest-remainder allocation of the leftover panels.
    while counts.iter().sum::<usize>() < panels {
        let (idx, _) = ideal
            .iter()
            .zip(&counts)
            .enumerate()
            .map(|(i, (x, &c))| (i, x - c as f64))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        counts[idx] += 1;
    }
    while counts.iter().sum::<usize>() > panels {
        let (idx, _) = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 1)
            .map(|(i, &c)| (i, c as f64 - ideal[i]))
            .fold((0, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
        counts[idx] -= 1;
    }

    let mut edges = vec![u0];
    for (seg, &count) in breaks.windows(2).zip(&counts) {
        let width = (seg[1] - seg[0]) / count as f64;
        for j in 1..=count {
            edges.push(if j == count { seg[1] } else { seg[0] + j as f64 * width });
        }
    }

    let (gx, gw) = gauss_legendre(PANEL_NODES);
    let mut nodes = Vec::with_capacity(panels * PANEL_NODES);
    let mut weights = Vec::with_capacity(panels * PANEL_NODES);
    for e in edges.windows(2) {
        let half = 0.5 * (e[1] - e[0]);
        let mid = 0.5 * (e[1] + e[0]);
        for (x, w) in gx.iter().zip(&gw) {
            let u = mid + half * x;
            let r = u.exp();
            nodes.push(r);
            weights.push(half * w * r.powi(d as i32));
        }
    }
    Ok(RadialGrid {
        nodes,
        weights,
        dim: d,
        kind: GridKind::GaussLegendre,
        panel_edges: edges,
    })
}

/// Exactly log-uniform grid with trapezoid weights, as needed by finite
/// differences in u = ln r.
pub fn make_uniform_log_grid(r_min: f64, r_max: f64, n: usize, d: usize) -> Result<RadialGrid> {
    validate_bounds(r_min, r_max, n, d)?;
    let (u0, u1) = (r_min.ln(), r_max.ln());
    let du = (u1 - u0) / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|i| (u0 + i as f64 * du).exp()).collect();
    let weights = nodes
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let end = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            end * du * r.powi(d as i32)
        })
        .collect();
    Ok(RadialGrid {
        nodes,
        weights,
        dim: d,
        kind: GridKind::LogUniform,
        panel_edges: Vec::new(),
    })
}

fn validate_bounds(r_min: f64, r_max: f64, n: usize, d: usize) -> Result<()> {
    ensure(r_min.is_finite() && r_max.is_finite() && r_min > 0.0 && r_min < r_max, || {
        format!("radial bounds must satisfy 0 < r_min < r_max, got [{r_min}, {r_max}]")
    })?;
    ensure(n >= 16, || format!("grid needs at least 16 nodes, got {n}"))?;
    ensure(d >= 3, || format!("dimension must be at least 3, got {d}"))
}

impl RadialGrid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Weights for ∫ · r^{d−1} dr (no sphere-area factor).
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn r_min(&self) -> f64 {
        match self.kind {
            GridKind::GaussLegendre => self.panel_edges[0].exp(),
            GridKind::LogUniform => self.nodes[0],
        }
    }

    pub fn r_max(&self) -> f64 {
        match self.kind {
            GridKind::GaussLegendre => self.panel_edges[self.panel_edges.len() - 1].exp(),
            GridKind::LogUniform => self.nodes[self.nodes.len() - 1],
        }
    }

    /// Panel endpoints in u = ln r; empty for log-uniform grids.
    pub fn panel_edges(&self) -> &[f64] {
        &self.panel_edges
    }

    /// ∫ v(r) r^{d−1} dr from sampled values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// ∫ v(r) r^{d−1} dr restricted to nodes with lo ≤ r ≤ hi.
    pub fn integrate_range(&self, values: &[f64], lo: f64, hi: f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .zip(values)
            .filter(|((r, _), _)| **r >= lo && **r <= hi)
            .map(|((_, w), v)| w * v)
            .sum()
    }
}

/// Samples f(r_i) of one angular sector on a shared grid.
#[derive(Debug, Clone)]
pub struct RadialFunction {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
    sector: usize,
}

impl RadialFunction {
    /// Wraps samples, rejecting a length mismatch or non-finite values.
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>, sector: usize) -> Result<Self> {
        ensure(values.len() == grid.len(), || {
            format!("{} samples for a grid of {} nodes", values.len(), grid.len())
        })?;
        ensure(values.iter().all(|v| v.is_finite()), || {
            "radial samples must be finite".to_string()
        })?;
        Ok(Self {
            grid,
            values,
            sector,
        })
    }

    /// Samples `f` at every node.
    pub fn from_fn(grid: Arc<RadialGrid>, sector: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values, sector)
    }

    pub fn zeros(grid: Arc<RadialGrid>, sector: usize) -> Self {
        let values = vec![0.0; grid.len()];
        Self {
            grid,
            values,
            sector,
        }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sector(&self) -> usize {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// Same grid and sector, new samples.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), values, self.sector)
    }

    pub fn scale(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            sector: self.sector,
        }
    }

    /// α·self + β·other on a shared grid.
    pub fn combine(&self, alpha: f64, other: &Self, beta: f64) -> Self {
        debug_assert_eq!(self.values.len(), other.values.len());
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| alpha * a + beta * b)
                .collect(),
            sector: self.sector,
        }
    }

    /// ⟨f, g⟩ = ω_{d−1}∫ f g r^{d−1} dr.
    pub fn inner(&self, other: &Self) -> f64 {
        let prod: Vec<f64> = self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect();
        sphere_area(self.dim()) * self.grid.integrate(&prod)
    }
}

/// (ω_{d−1}∫|f|^p r^{d−1}dr)^{1/p}, or max|f| for p = ∞.
pub fn lp_norm(f: &RadialFunction, p: f64) -> f64 {
    range_lp_norm(f, p, 0.0, 0.0, f64::INFINITY)
}

/// L^p norm of |x|^{−s}f restricted to the annulus lo ≤ |x| ≤ hi.
pub fn range_lp_norm(f: &RadialFunction, p: f64, s: f64, lo: f64, hi: f64) -> f64 {
    let grid = f.grid();
    let weighted = f
        .values()
        .iter()
        .zip(grid.nodes())
        .map(|(v, r)| if s == 0.0 { v.abs() } else { v.abs() * r.powf(-s) });
    if p.is_infinite() {
        return weighted
            .zip(grid.nodes())
            .filter(|(_, r)| **r >= lo && **r <= hi)
            .map(|(v, _)| v)
            .fold(0.0, f64::max);
    }
    let integrand: Vec<f64> = weighted.map(|v| v.powf(p)).collect();
    let integral = grid.integrate_range(&integrand, lo, hi);
    (sphere_area(f.dim()) * integral).powf(1.0 / p)
}

/// A norm together with the numerical divergence diagnosis.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct NormEstimate {
    pub value: f64,
    /// Relative change when the inner decade of the grid is dropped.
    pub inner_change: f64,
    pub diverged: bool,
}

/// Relative change above which a norm is considered divergent.
pub const DIVERGENCE_THRESHOLD: f64 = 0.1;

/// ‖|x|^{−s}f‖_p with a divergence flag.
///
/// The mass below r_min is added in closed form from the power law that the
/// integrand follows across the inner decade of the grid. The norm is then
/// compared with the same norm over [10·r_min, r_max]; a relative change above
/// [`DIVERGENCE_THRESHOLD`] marks the integrand as not integrable at the
/// origin.
pub fn weighted_lp_norm(f: &RadialFunction, p: f64, s: f64) -> NormEstimate {
    weighted_lp_norm_within(f, p, s, f64::INFINITY)
}

/// [`weighted_lp_norm`] with the integral cut at `r_cut` and the mass beyond
/// it added in closed form from the power law across the octave below `r_cut`.
///
/// Far from its support a transformed function sinks into the transform's
/// noise floor, which the volume factor r^{d−1} inflates; for p near 1 this
/// can outweigh the true tail. Cutting at a fixed multiple of the input's
/// scale keeps the measurement dilation-invariant. A tail that does not decay
/// marks the norm divergent.
pub fn weighted_lp_norm_within(f: &RadialFunction, p: f64, s: f64, r_cut: f64) -> NormEstimate {
    let r_min = f.grid().r_min();
    let mut full = range_lp_norm(f, p, s, 0.0, r_cut);
    let mut outer_diverged = false;
    if p.is_finite() && full > 0.0 {
        let mut tail = origin_tail(f, p, s);
        if r_cut < f.grid().r_max() {
            match outer_tail(f, p, s, r_cut) {
                Some(t) => tail += t,
                None => outer_diverged = true,
            }
        }
        full = (full.powf(p) + sphere_area(f.dim()) * tail).powf(1.0 / p);
    }
    let trimmed = range_lp_norm(f, p, s, 10.0 * r_min, r_cut);
    let inner_change = if full > 0.0 { (full - trimmed).abs() / full } else { 0.0 };
    NormEstimate {
        value: full,
        inner_change,
        diverged: outer_diverged || inner_change > DIVERGENCE_THRESHOLD,
    }
}

/// ∫_{r_cut}^∞ |r^{−s}f|^p r^{d−1} dr for an integrand that behaves like a
/// power r^{β−1} across the octave below r_cut, or None when β ≥ 0.
fn outer_tail(f: &RadialFunction, p: f64, s: f64, r_cut: f64) -> Option<f64> {
    let nodes = f.grid().nodes();
    let b = nodes.partition_point(|&r| r <= r_cut).checked_sub(1)?;
    let a = nodes.partition_point(|&r| r < 0.5 * nodes[b]);
    if a >= b {
        return Some(0.0);
    }
    let mass = |i: usize| (f.values()[i].abs() * nodes[i].powf(-s)).powf(p) * nodes[i].powi(f.dim() as i32);
    let (ma, mb) = (mass(a), mass(b));
    if !(ma > 0.0 && mb > 0.0) {
        return Some(0.0);
    }
    let beta = (mb / ma).ln() / (nodes[b] / nodes[a]).ln();
    (beta < 0.0).then(|| mb * (r_cut / nodes[b]).powf(beta) / -beta)
}

/// ∫₀^{r_min} |r^{−s}f|^p r^{d−1} dr for an integrand that behaves like a
/// power r^{β−1} across the first decade, or zero when β ≤ 0.
fn origin_tail(f: &RadialFunction, p: f64, s: f64) -> f64 {
    let grid = f.grid();
    let nodes = grid.nodes();
    let r0 = nodes[0];
    let Some(k) = nodes.iter().position(|&r| r >= 10.0 * r0) else {
        return 0.0;
    };
    let mass = |i: usize| (f.values()[i].abs() * nodes[i].powf(-s)).powf(p) * nodes[i].powi(f.dim() as i32);
    let (m0, mk) = (mass(0), mass(k));
    if !(m0 > 0.0 && mk > 0.0) {
        return 0.0;
    }
    let beta = (mk / m0).ln() / (nodes[k] / r0).ln();
    if beta > 0.0 {
        m0 * (grid.r_min() / r0).powf(beta) / beta
    } else {
        0.0
    }
}

/// Scale hint for [`time_quadrature`]: the time around which the integrand
/// carries its mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeHint {
    pub center: f64,
}

impl Default for TimeHint {
    fn default() -> Self {
        Self { center: 1.0 }
    }
}

/// Result of [`time_quadrature`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct TimeQuad {
    pub value: f64,
    /// Relative change between the last two refinement levels.
    pub change: f64,
    pub diverged: bool,
}

const TAU_MAX: f64 = 6.5;

/// ∫₀^∞ g(t) dt by the exp-sinh substitution t = t_c·exp(½π·sinh τ).
///
/// The step is halved from 0.5 until successive values agree to 1e−9
/// relative. An integrand whose transformed terms do not vanish at the ends
/// of the τ range is reported as divergent.
pub fn time_quadrature(g: impl Fn(f64) -> f64, hint: TimeHint) -> TimeQuad {
    let tc = hint.center;
    let term = |tau: f64| -> f64 {
        let e = FRAC_PI_2 * tau.sinh();
        let t = tc * e.exp();
        if t == 0.0 || !t.is_finite() {
            return 0.0;
        }
        g(t) * t * FRAC_PI_2 * tau.cosh()
    };

    let mut h = 0.5;
    let k_max = (TAU_MAX / h).round() as i64;
    let mut sum = 0.0;
    let mut end_term = 0.0_f64;
    for k in -k_max..=k_max {
        let v = term(k as f64 * h);
        if k.abs() >= k_max - 1 {
            end_term = end_term.max(v.abs());
        }
        sum += v;
    }
    let mut value = h * sum;
    let mut change = f64::INFINITY;
    for _ in 0..9 {
        h *= 0.5;
        let k_max = (TAU_MAX / h).round() as i64;
        let mut k = -k_max + 1;
        while k < k_max {
            sum += term(k as f64 * h);
            k += 2;
        }
        let next = h * sum;
        change = if next == 0.0 && value == 0.0 {
            0.0
        } else {
            (next - value).abs() / next.abs().max(value.abs())
        };
        value = next;
        if change < 1e-9 {
            break;
        }
    }
    let diverged = !value.is_finite() || end_term > 1e-8 * value.abs().max(f64::MIN_POSITIVE);
    let diverged = diverged && !(value == 0.0 && end_term == 0.0);
    TimeQuad {
        value,
        change,
        diverged,
    }
}
