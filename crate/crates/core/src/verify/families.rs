//! Radial test functions: bumps, shells, Riesz potentials of bumps, the
//! log-corrected endpoint profile and truncated power profiles.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grids::RadialFunction;
use crate::operator::half_dim;
use crate::spectral::{frac_power, HankelPlan, Multiplier, Sign, Symbol};

/// Kind of a test family, with any data fixed across the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// φ(|x|/λ); parameter λ.
    DilatedBump,
    /// φ(|x| − R), the radial shell around radius R; parameter R ≥ 1.
    ShiftedBump,
    /// L_a^{−s/2} applied to the unit bump (offset 0) or to the shell at the
    /// given offset. The parameter is the annulus cutoff ε used when the
    /// member is measured.
    RieszOfBump { s: f64, offset: f64 },
    /// |x|^{−(d−2)/2}(log 1/|x|)^{−1/2}, switched off smoothly below ε and
    /// above 1/4; parameter ε.
    LogEndpoint,
    /// |x|^{−(d−2)/2}·min(|x|^δ, |x|^{−δ}); parameter δ > 0.
    InnerCutoffPower,
}

/// One member of a test family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TestFamily {
    pub kind: FamilyKind,
    pub parameter: f64,
}

/// A radial profile with its derivative.
#[derive(Clone)]
pub struct Profile {
    pub value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub derivative: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
}

/// The unit bump exp(1 − 1/(1 − r²)) on [0, 1).
pub fn bump(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// Derivative of [`bump`].
pub fn bump_derivative(r: f64) -> f64 {
    if r.abs() >= 1.0 {
        0.0
    } else {
        let q = 1.0 - r * r;
        -2.0 * r / (q * q) * bump(r)
    }
}

/// Smooth cutoff equal to 1 on [0, n] and 0 on [2n, ∞), with its derivative.
pub fn cutoff(n: f64) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
    let m = Multiplier::new(Symbol::Phi { n });
    let m1 = m.clone();
    (
        move |r| m.eval(r),
        move |r| m1.derivative(1, r).unwrap_or(0.0),
    )
}

impl TestFamily {
    pub fn new(kind: FamilyKind, parameter: f64) -> Self {
        Self { kind, parameter }
    }

    /// Dilated bumps at the given scales.
    pub fn dilations(scales: &[f64]) -> Vec<Self> {
        scales.iter().map(|&l| Self::new(FamilyKind::DilatedBump, l)).collect()
    }

    /// Closed-form profile and derivative, for every kind except
    /// [`FamilyKind::RieszOfBump`].
    pub fn profile(&self, d: usize) -> Result<Profile> {
        let p = self.parameter;
        let h = half_dim(d);
        let wrap = |v: Arc<dyn Fn(f64) -> f64 + Send + Sync>, dv: Arc<dyn Fn(f64) -> f64 + Send + Sync>| Profile {
            value: v,
            derivative: dv,
        };
        match self.kind {
            FamilyKind::DilatedBump => {
                check(p > 0.0, "dilation must be positive")?;
                Ok(wrap(Arc::new(move |r| bump(r / p)), Arc::new(move |r| bump_derivative(r / p) / p)))
            }
            FamilyKind::ShiftedBump => {
                check(p >= 1.0, "shell radius must be at least 1")?;
                Ok(wrap(Arc::new(move |r| bump(r - p)), Arc::new(move |r| bump_derivative(r - p))))
            }
            FamilyKind::InnerCutoffPower => {
                check(p > 0.0, "power offset must be positive")?;
                Ok(wrap(
                    Arc::new(move |r: f64| r.powf(-h) * r.powf(p).min(r.powf(-p))),
                    Arc::new(move |r: f64| {
                        let e = if r < 1.0 { p - h } else { -p - h };
                        e * r.powf(e - 1.0)
                    }),
                ))
            }
            FamilyKind::LogEndpoint => {
                check(p > 0.0 && p < 0.05, "log cutoff must lie in (0, 0.05)")?;
                let w = log_endpoint_ground(p);
                Ok(wrap(
                    {
                        let w = w.clone();
                        Arc::new(move |r: f64| r.powf(-h) * (w.value)(r))
                    },
                    Arc::new(move |r: f64| r.powf(-h) * ((w.derivative)(r) - h * (w.value)(r) / r)),
                ))
            }
            FamilyKind::RieszOfBump { .. } => Err(Error::Parameter(
                "Riesz potentials have no closed form; use realize".into(),
            )),
        }
    }

    /// Samples the member on the plan's grid in the plan's sector.
    pub fn realize(&self, plan: &HankelPlan) -> Result<RadialFunction> {
        let grid = plan.grid().clone();
        let ell = plan.order().ell;
        match self.kind {
            FamilyKind::RieszOfBump { s, offset } => {
                let base = if offset == 0.0 {
                    RadialFunction::from_fn(grid, ell, bump)?
                } else {
                    RadialFunction::from_fn(grid, ell, |r| bump(r - offset))?
                };
                frac_power(plan, s, Sign::Minus, &base)
            }
            _ => {
                let prof = self.profile(plan.params().d)?;
                RadialFunction::from_fn(grid, ell, |r| (prof.value)(r))
            }
        }
    }
}

/// w = r^{(d−2)/2}u for the log endpoint profile u with cutoff ε:
/// w(r) = (log 1/r)^{−1/2}·φ(4r)·(1 − φ(r/ε)), where φ is the unit cutoff.
pub fn log_endpoint_ground(eps: f64) -> Profile {
    let (chi, dchi) = cutoff(1.0);
    let chi = Arc::new(chi);
    let dchi = Arc::new(dchi);
    let (c1, d1) = (chi.clone(), dchi.clone());
    let value = move |r: f64| {
        if r >= 0.5 {
            return 0.0;
        }
        let l = -r.ln();
        l.powf(-0.5) * c1(4.0 * r) * (1.0 - c1(r / eps))
    };
    let derivative = move |r: f64| {
        if r >= 0.5 {
            return 0.0;
        }
        let l = -r.ln();
        let g = l.powf(-0.5);
        let dg = 0.5 * l.powf(-1.5) / r;
        let outer = chi(4.0 * r);
        let inner = 1.0 - chi(r / eps);
        dg * outer * inner + g * 4.0 * dchi(4.0 * r) * inner - g * outer * d1(r / eps) / eps
    };
    Profile {
        value: Arc::new(value),
        derivative: Arc::new(derivative),
    }
}

fn check(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Parameter(msg.to_string()))
    }
}
