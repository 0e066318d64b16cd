//! Numerical checks of kernel bounds, multiplier theorems, Hardy and Sobolev
//! inequalities, Littlewood–Paley estimates and the Calderón–Zygmund
//! decomposition. Every check returns a [`VerificationReport`].

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::Result;
use crate::grids::{make_log_grid, RadialGrid};
use crate::operator::{endpoint_coupling, make_params, OperatorParams};
use crate::spectral::{make_plan, HankelPlan};

pub mod cz;
pub mod equiv;
pub mod families;
pub mod hardy;
pub mod kernel_checks;
pub mod littlewood;
pub mod mikhlin;
pub mod schur;
pub mod sharpness;

pub use families::{FamilyKind, Profile, TestFamily};

/// Outcome of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    /// A counterexample family diverged in the predicted way.
    DivergesAsDesigned,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::DivergesAsDesigned => "diverges-as-designed",
        }
    }

    pub fn is_failure(&self) -> bool {
        *self == Verdict::Fail
    }
}

/// One row of a kernel-versus-envelope lattice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeRow {
    pub t: f64,
    pub rx: f64,
    pub ry: f64,
    pub cos: f64,
    pub kernel: f64,
    pub lower: f64,
    pub upper: f64,
    pub ratio: f64,
}

/// One point of a log-log slope fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeRow {
    pub n: f64,
    pub norm_ratio: f64,
    pub fitted_line: f64,
}

/// One point of a growth curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrowthRow {
    pub eps: f64,
    pub annulus_norm: f64,
}

/// Tabular data behind a report, for external plotting.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PlotData {
    RatioLattice(Vec<LatticeRow>),
    SlopeFit(Vec<SlopeRow>),
    GrowthCurve(Vec<GrowthRow>),
}

/// Result of one check on one parameter cell.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub check_name: String,
    pub params: BTreeMap<String, f64>,
    pub observed_min: f64,
    pub observed_max: f64,
    pub fitted_constants: BTreeMap<String, f64>,
    pub slope: Option<f64>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
    #[serde(skip)]
    pub plot: Option<PlotData>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl VerificationReport {
    pub fn new(check_name: &str) -> Self {
        Self {
            check_name: check_name.to_string(),
            params: BTreeMap::new(),
            observed_min: f64::NAN,
            observed_max: f64::NAN,
            fitted_constants: BTreeMap::new(),
            slope: None,
            verdict: Verdict::Fail,
            notes: Vec::new(),
            plot: None,
            runtime: Duration::ZERO,
        }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn operator(self, params: &OperatorParams) -> Self {
        self.param("d", params.d as f64).param("a", params.a).param("sigma", params.sigma)
    }

    pub fn constant(&mut self, key: &str, value: f64) {
        self.fitted_constants.insert(key.to_string(), value);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// Sets observed_min/observed_max from a sample set.
    pub fn observe(&mut self, values: impl IntoIterator<Item = f64>) {
        let (lo, hi) = min_max(values);
        self.observed_min = lo;
        self.observed_max = hi;
    }

    pub fn with_verdict(mut self, verdict: Verdict) -> Self {
        self.verdict = verdict;
        self
    }
}

/// Runs `f` and stores its wall time in the returned report.
pub fn timed(f: impl FnOnce() -> Result<VerificationReport>) -> Result<VerificationReport> {
    let start = Instant::now();
    let mut report = f()?;
    report.runtime = start.elapsed();
    Ok(report)
}

/// Minimum and maximum, NaN for an empty set.
pub fn min_max(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    values.into_iter().fold((f64::NAN, f64::NAN), |(lo, hi), v| {
        (if lo.is_nan() { v } else { lo.min(v) }, if hi.is_nan() { v } else { hi.max(v) })
    })
}

/// Least-squares line y = slope·x + intercept.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `count` points spaced evenly in log between `lo` and `hi`.
pub fn log_space(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let step = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (step * i as f64).exp()).collect()
}

/// Whether a sequence is nondecreasing.
pub fn is_monotone(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] >= w[0])
}

/// The default radial grid: [1e−4, 1e3] with 2048 nodes.
pub fn default_grid(d: usize) -> Result<Arc<RadialGrid>> {
    Ok(Arc::new(make_log_grid(1e-4, 1e3, 2048, d)?))
}

/// A radial-sector plan on a log grid.
pub fn radial_plan(params: &OperatorParams, r_min: f64, r_max: f64, n: usize) -> Result<HankelPlan> {
    let grid = Arc::new(make_log_grid(r_min, r_max, n, params.d)?);
    make_plan(params, 0, grid)
}

/// The plan for coupling zero on the grid of `plan`.
pub fn free_plan(plan: &HankelPlan) -> Result<HankelPlan> {
    make_plan(&make_params(plan.params().d, 0.0)?, 0, plan.grid().clone())
}

/// Parameter sets swept by default.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestMatrix {
    pub dims: Vec<usize>,
    pub smoothness: Vec<f64>,
}

impl Default for TestMatrix {
    fn default() -> Self {
        Self {
            dims: vec![3, 4, 5],
            smoothness: vec![0.25, 0.5, 1.0, 1.5, 1.75],
        }
    }
}

impl TestMatrix {
    /// Couplings for dimension d: the endpoint, half of it, a tenth of it,
    /// zero, one and four.
    pub fn couplings(d: usize) -> Vec<f64> {
        let e = endpoint_coupling(d);
        vec![e, 0.5 * e, 0.1 * e, 0.0, 1.0, 4.0]
    }

    /// Every (d, a) pair.
    pub fn operators(&self) -> Result<Vec<OperatorParams>> {
        let mut out = Vec::new();
        for &d in &self.dims {
            for a in Self::couplings(d) {
                out.push(make_params(d, a)?);
            }
        }
        Ok(out)
    }
}

/// Exponents p whose reciprocals sit at the quarter points of (lo, hi).
pub fn interior_exponents(lo: f64, hi: f64) -> Vec<f64> {
    if lo >= hi {
        return Vec::new();
    }
    [0.25, 0.5, 0.75]
        .iter()
        .map(|w| lo + w * (hi - lo))
        .filter(|inv| *inv > 0.0)
        .map(|inv| 1.0 / inv)
        .collect()
}
