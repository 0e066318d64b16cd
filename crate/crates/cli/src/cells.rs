//! Expansion of a check and its configuration into independent cells.

use std::sync::Arc;

use invsq_core::grids::make_log_grid;
use invsq_core::operator::{equiv_ranges, hardy_range, make_params, OperatorParams};
use invsq_core::spectral::{dyadic_range, make_plan, Multiplier, ProjKind, Symbol};
use invsq_core::verify::cz::cz_check;
use invsq_core::verify::equiv::{endpoint_exclusion, equiv_sweep};
use invsq_core::verify::hardy::{counterexample_family, hardy_sweep};
use invsq_core::verify::kernel_checks::{diff_envelope_check, heat_envelope_check, riesz_envelope_check};
use invsq_core::verify::littlewood::{
    band_limited, bernstein_fit, bernstein_window, identity_report, sqfn_diff_check, sqfn_window, BernsteinRange,
};
use invsq_core::verify::mikhlin::{default_lambda_grid, mikhlin_check, MikhlinOptions};
use invsq_core::verify::schur::hardy_case2_schur;
use invsq_core::verify::sharpness::sharpness_demo;
use invsq_core::verify::{
    free_plan, interior_exponents, log_space, FamilyKind, TestFamily, TestMatrix, VerificationReport,
};

use crate::config::{Coupling, RunConfig};
use crate::error::CliError;

type Job = Box<dyn Fn() -> invsq_core::Result<VerificationReport> + Send + Sync>;

/// One unit of work: a check on one parameter cell.
pub struct Cell {
    pub check: &'static str,
    pub job: Job,
}

fn cell(check: &'static str, job: impl Fn() -> invsq_core::Result<VerificationReport> + Send + Sync + 'static) -> Cell {
    Cell { check, job: Box::new(job) }
}

/// Dilations in the in-window Hardy family.
const DILATIONS: usize = 9;

fn operators(cfg: &RunConfig) -> Result<Vec<OperatorParams>, CliError> {
    let mut out = Vec::new();
    for d in cfg.dims_or_default() {
        let couplings: Vec<f64> = if cfg.couplings.is_empty() {
            TestMatrix::couplings(d)
        } else {
            cfg.couplings.iter().map(|c| c.resolve(d)).collect()
        };
        for a in couplings {
            out.push(make_params(d, a)?);
        }
    }
    Ok(out)
}

fn smoothness(cfg: &RunConfig) -> Vec<f64> {
    if cfg.smoothness.is_empty() {
        TestMatrix::default().smoothness
    } else {
        cfg.smoothness.clone()
    }
}

/// Riesz potentials of order s exist for d − s − 2σ > 0. Default matrices
/// skip other cells; explicitly requested ones reach the library and fail
/// there with a parameter error.
fn riesz_admissible(cfg: &RunConfig, params: &OperatorParams, s: f64) -> bool {
    !cfg.smoothness.is_empty() || params.d as f64 - s - 2.0 * params.sigma > 0.0
}

fn plan_on(
    params: &OperatorParams,
    cfg: &RunConfig,
    default: (f64, f64, usize),
) -> invsq_core::Result<invsq_core::spectral::HankelPlan> {
    let (lo, hi, n) = cfg.grid.resolve(default.0, default.1, default.2);
    make_plan(params, 0, Arc::new(make_log_grid(lo, hi, n, params.d)?))
}

/// Builds the cells of `check`.
pub fn build(check: &str, cfg: &RunConfig) -> Result<Vec<Cell>, CliError> {
    let cfg = Arc::new(cfg.clone());
    let ops = operators(&cfg)?;
    let mut cells = Vec::new();
    match check {
        "heat" => {
            for p in ops {
                let l_max = cfg.l_max;
                cells.push(cell("heat", move || heat_envelope_check(&p, l_max)));
            }
        }
        "riesz" => {
            for p in ops {
                for s in smoothness(&cfg).into_iter().filter(|&s| riesz_admissible(&cfg, &p, s)) {
                    let l_max = cfg.l_max;
                    cells.push(cell("riesz", move || riesz_envelope_check(&p, s, l_max)));
                }
            }
        }
        "kernel-diff" => {
            let ns = match (cfg.n_min, cfg.n_max) {
                (None, None) => vec![1.0, 8.0],
                (lo, hi) => dyadic_range(lo.unwrap_or(1.0), hi.unwrap_or(8.0))?,
            };
            for p in ops {
                for &n in &ns {
                    let l_max = cfg.l_max;
                    cells.push(cell("kernel-diff", move || diff_envelope_check(&p, n, l_max)));
                }
            }
        }
        "mikhlin" => {
            for d in cfg.dims_or_default() {
                let symbols = [
                    Multiplier::heat(1.0),
                    Multiplier::new(Symbol::Phi { n: 1.0 }),
                    Multiplier::new(Symbol::Psi { n: 1.0 }),
                ];
                for m in symbols {
                    cells.push(cell("mikhlin", move || {
                        mikhlin_check(&m, d, &default_lambda_grid(), &MikhlinOptions::for_dim(d))
                    }));
                }
            }
        }
        "cz" => {
            let seeds: Vec<u64> = (0..100).map(|i| cfg.seed.wrapping_add(i)).collect();
            cells.push(cell("cz", move || cz_check(&seeds)));
        }
        "identity" => {
            let n_set = dyadic_range(cfg.n_min.unwrap_or(2f64.powi(-10)), cfg.n_max.unwrap_or(2f64.powi(10)))?;
            let tol = cfg.tol.unwrap_or(1e-6);
            let ps = if cfg.exponents.is_empty() { vec![2.0] } else { cfg.exponents.clone() };
            for p in ops {
                for &q in &ps {
                    for (kind, hi) in [(ProjKind::Smooth, 10.0), (ProjKind::Heat, 0.5)] {
                        let (cfg, n_set) = (cfg.clone(), n_set.clone());
                        cells.push(cell("identity", move || {
                            let plan = plan_on(&p, &cfg, (1e-4, 1e4, 2048))?;
                            let f = band_limited(&plan, 0.1, hi)?;
                            identity_report(&plan, &f, &n_set, q, kind, tol)
                        }));
                    }
                }
            }
        }
        "hardy" => {
            for p in ops {
                for s in smoothness(&cfg).into_iter().filter(|&s| riesz_admissible(&cfg, &p, s)) {
                    let range = hardy_range(&p, s);
                    let exps = if cfg.exponents.is_empty() {
                        interior_exponents(range.interval.lo, range.interval.hi)
                    } else {
                        cfg.exponents.clone()
                    };
                    for q in exps {
                        let family = hardy_family(&p, s, q, range.valid && range.interval.contains_p(q))?;
                        let cfg = cfg.clone();
                        cells.push(cell("hardy", move || {
                            hardy_sweep(&plan_on(&p, &cfg, (1e-6, 1e6, 4096))?, s, q, &family)
                        }));
                    }
                }
            }
        }
        "equiv" => {
            let scales = log_space(1e-2, 1e2, 5);
            for p in ops {
                for s in smoothness(&cfg) {
                    let w = equiv_ranges(&p, s)?;
                    let exps = if cfg.exponents.is_empty() {
                        interior_exponents(w.forward.lo.max(w.reverse.lo).max(0.0), w.forward.hi.min(w.reverse.hi))
                    } else {
                        cfg.exponents.clone()
                    };
                    for q in exps {
                        let (cfg, scales) = (cfg.clone(), scales.clone());
                        cells.push(cell("equiv", move || {
                            let plan = plan_on(&p, &cfg, (1e-5, 1e5, 3072))?;
                            equiv_sweep(&plan, &free_plan(&plan)?, s, q, &scales)
                        }));
                    }
                }
            }
            for d in cfg.dims_or_default() {
                let endpoint = cfg.couplings.is_empty() || cfg.couplings.contains(&Coupling::Endpoint);
                if endpoint {
                    cells.push(cell("equiv", move || endpoint_exclusion(d, &[1e-2, 1e-3, 1e-4, 1e-5, 1e-6])));
                }
            }
        }
        "bernstein" => {
            let explicit = !cfg.exponents.is_empty();
            let ps = if explicit { cfg.exponents.clone() } else { vec![1.5, 2.0, 3.0] };
            for p in ops {
                for &q in &ps {
                    let pairs: Vec<(f64, f64)> =
                        [(q, 2.0 * q), (q, f64::INFINITY)].into_iter().filter(|&(a, b)| bernstein_window(&p, a, b)).collect();
                    if explicit && pairs.is_empty() {
                        return Err(CliError::Config(format!(
                            "p = {q} admits no Bernstein pair (p, 2p) or (p, ∞) for d = {}, a = {}",
                            p.d, p.a
                        )));
                    }
                    for (lo, hi) in pairs {
                        let cfg = cfg.clone();
                        cells.push(cell("bernstein", move || {
                            let plan = plan_on(&p, &cfg, (1e-4, 1e5, 3072))?;
                            let f = TestFamily::dilations(&[1.0])[0].realize(&plan)?;
                            bernstein_fit(&plan, lo, hi, &f, &BernsteinRange::default())
                        }));
                    }
                }
            }
        }
        "sqfn-diff" => {
            let octaves = match (cfg.n_min, cfg.n_max) {
                (None, None) => 8,
                (lo, hi) => ((hi.unwrap_or(256.0) / lo.unwrap_or(1.0 / 256.0)).log2() / 2.0).round().max(1.0) as i32,
            };
            for p in ops {
                for s in smoothness(&cfg) {
                    let exps = if cfg.exponents.is_empty() {
                        let (lo, hi) = sqfn_window(&p, s);
                        let hi = hi.min(p.d as f64 / s).min(4.0);
                        vec![2.0 / (1.0 / lo + 1.0 / hi)]
                    } else {
                        cfg.exponents.clone()
                    };
                    for q in exps {
                        let cfg = cfg.clone();
                        cells.push(cell("sqfn-diff", move || {
                            let plan = plan_on(&p, &cfg, (1e-5, 1e5, 6144))?;
                            sqfn_diff_check(&plan, &free_plan(&plan)?, s, q, octaves, &[-2, 0, 2])
                        }));
                    }
                }
            }
        }
        "sharpness" => {
            let ps = if cfg.exponents.is_empty() {
                vec![3.0, 6.0, 8.0, 12.0, 24.0, f64::INFINITY]
            } else {
                cfg.exponents.clone()
            };
            for p in ops {
                for &q in &ps {
                    let cfg = cfg.clone();
                    cells.push(cell("sharpness", move || sharpness_demo(&plan_on(&p, &cfg, (1e-6, 1e3, 3072))?, q)));
                }
            }
        }
        "schur" => {
            let ps = if cfg.exponents.is_empty() { vec![1.5, 2.0, 3.0] } else { cfg.exponents.clone() };
            for p in ops {
                for s in smoothness(&cfg).into_iter().filter(|&s| riesz_admissible(&cfg, &p, s)) {
                    for &q in &ps {
                        let qq = q / (q - 1.0);
                        let (lo, hi) = (q * (s + p.sigma), qq * (p.d as f64 - s - p.sigma));
                        let mut alphas = vec![hi + 1.0];
                        if lo < hi {
                            alphas.insert(0, 0.5 * (lo + hi));
                        }
                        for alpha in alphas {
                            cells.push(cell("schur", move || hardy_case2_schur(&p, s, q, alpha)));
                        }
                    }
                }
            }
        }
        other => return Err(CliError::Config(format!("unknown check {other}"))),
    }
    Ok(cells)
}

/// Dilated and shell bumps inside the Hardy window; outside it, the
/// counterexample family whose failure condition the cell meets.
fn hardy_family(p: &OperatorParams, s: f64, q: f64, in_window: bool) -> Result<Vec<TestFamily>, CliError> {
    if in_window {
        let mut family = TestFamily::dilations(&log_space(1e-2, 1e2, DILATIONS));
        family.extend([1.0, 3.0, 10.0, 30.0].iter().map(|&r| TestFamily::new(FamilyKind::ShiftedBump, r)));
        return Ok(family);
    }
    let d = p.d as f64;
    if (s + p.sigma) * q >= d {
        Ok(counterexample_family(s, true))
    } else if q <= d / (d - p.sigma) {
        Ok(counterexample_family(s, false))
    } else {
        Err(CliError::Config(format!(
            "p = {q} lies outside the Hardy window for d = {}, a = {}, s = {s} but meets neither counterexample condition",
            p.d, p.a
        )))
    }
}
