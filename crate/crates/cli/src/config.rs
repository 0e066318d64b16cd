//! Run configuration: a strict sectioned key=value file, overridden by flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use invsq_core::operator::endpoint_coupling;
use invsq_core::verify::kernel_checks::LATTICE_L_MAX;

use crate::error::CliError;

/// Checks reachable through `verify`.
pub const VERIFY_CHECKS: [&str; 6] = ["heat", "riesz", "kernel-diff", "mikhlin", "cz", "identity"];
/// Checks reachable through `sweep`.
pub const SWEEP_CHECKS: [&str; 6] = ["hardy", "equiv", "bernstein", "sqfn-diff", "sharpness", "schur"];

/// Keys accepted in each section of a config file.
const SCHEMA: [(&str, &[&str]); 6] = [
    ("run", &["checks", "out", "jobs", "seed"]),
    ("operator", &["d", "a"]),
    ("sweep", &["s", "p"]),
    ("grid", &["n", "rmin", "rmax"]),
    ("kernel", &["lmax"]),
    ("spectral", &["nmin", "nmax", "tol"]),
];

/// A coupling as given: a number or the endpoint of the dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coupling {
    Value(f64),
    Endpoint,
}

impl Coupling {
    pub fn resolve(self, d: usize) -> f64 {
        match self {
            Coupling::Value(a) => a,
            Coupling::Endpoint => endpoint_coupling(d),
        }
    }
}

/// Radial grid overrides; unset fields fall back to the per-check default.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct GridOverride {
    pub n: Option<usize>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
}

impl GridOverride {
    pub fn resolve(&self, r_min: f64, r_max: f64, n: usize) -> (f64, f64, usize) {
        (self.r_min.unwrap_or(r_min), self.r_max.unwrap_or(r_max), self.n.unwrap_or(n))
    }
}

/// Everything one invocation runs. Empty parameter lists mean the default
/// matrix of each check.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub checks: Vec<String>,
    pub dims: Vec<usize>,
    pub couplings: Vec<Coupling>,
    pub smoothness: Vec<f64>,
    pub exponents: Vec<f64>,
    pub grid: GridOverride,
    pub l_max: usize,
    pub n_min: Option<f64>,
    pub n_max: Option<f64>,
    pub tol: Option<f64>,
    pub out: PathBuf,
    pub jobs: Option<usize>,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            checks: Vec::new(),
            dims: Vec::new(),
            couplings: Vec::new(),
            smoothness: Vec::new(),
            exponents: Vec::new(),
            grid: GridOverride::default(),
            l_max: LATTICE_L_MAX,
            n_min: None,
            n_max: None,
            tol: None,
            out: PathBuf::from("invsq-out"),
            jobs: None,
            seed: 0,
        }
    }
}

/// Parsed `section.key → value` pairs of a config file.
pub type Entries = BTreeMap<String, String>;

/// Parses the config text. Comments start with `#`; every key must sit in a
/// known section, appear once, and carry a value.
pub fn parse_config(text: &str) -> Result<Entries, CliError> {
    let mut entries = Entries::new();
    let mut section: Option<&str> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let at = || format!("line {}", lineno + 1);
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| CliError::Config(format!("{}: unterminated section header", at())))?
                .trim();
            let known = SCHEMA.iter().find(|(s, _)| *s == name);
            section = Some(known.ok_or_else(|| CliError::Config(format!("{}: unknown section [{name}]", at())))?.0);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("{}: expected key = value", at())))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| CliError::Config(format!("{}: key {key} outside any section", at())))?;
        let keys = SCHEMA.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !keys.contains(&key) {
            return Err(CliError::Config(format!("{}: unknown key {key} in [{sec}]", at())));
        }
        if value.is_empty() && key != "checks" {
            return Err(CliError::Config(format!("{}: {key} has no value", at())));
        }
        if entries.insert(format!("{sec}.{key}"), value.to_string()).is_some() {
            return Err(CliError::Config(format!("{}: duplicate key {key} in [{sec}]", at())));
        }
    }
    Ok(entries)
}

pub fn read_config(path: &Path) -> Result<Entries, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

fn parse_value<T: std::str::FromStr>(key: &str, raw: &str) -> Result<T, CliError> {
    raw.trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{key}: cannot parse {raw:?}")))
}

/// A comma-separated list; an empty string is the empty list.
pub fn parse_list<T: std::str::FromStr>(key: &str, raw: &str) -> Result<Vec<T>, CliError> {
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_value(key, s))
        .collect()
}

pub fn parse_coupling(raw: &str) -> Result<Coupling, CliError> {
    match raw.trim() {
        "endpoint" => Ok(Coupling::Endpoint),
        other => parse_value("a", other).map(Coupling::Value),
    }
}

pub fn parse_couplings(raw: &str) -> Result<Vec<Coupling>, CliError> {
    raw.split(',').map(str::trim).filter(|s| !s.is_empty()).map(parse_coupling).collect()
}

impl RunConfig {
    /// Applies file entries on top of the current values.
    pub fn apply_entries(&mut self, entries: &Entries) -> Result<(), CliError> {
        for (key, raw) in entries {
            match key.as_str() {
                "run.checks" => self.checks = parse_list("checks", raw)?,
                "run.out" => self.out = PathBuf::from(raw),
                "run.jobs" => self.jobs = Some(parse_value(key, raw)?),
                "run.seed" => self.seed = parse_value(key, raw)?,
                "operator.d" => self.dims = parse_list(key, raw)?,
                "operator.a" => self.couplings = parse_couplings(raw)?,
                "sweep.s" => self.smoothness = parse_list(key, raw)?,
                "sweep.p" => self.exponents = parse_list(key, raw)?,
                "grid.n" => self.grid.n = Some(parse_value(key, raw)?),
                "grid.rmin" => self.grid.r_min = Some(parse_value(key, raw)?),
                "grid.rmax" => self.grid.r_max = Some(parse_value(key, raw)?),
                "kernel.lmax" => self.l_max = parse_value(key, raw)?,
                "spectral.nmin" => self.n_min = Some(parse_value(key, raw)?),
                "spectral.nmax" => self.n_max = Some(parse_value(key, raw)?),
                "spectral.tol" => self.tol = Some(parse_value(key, raw)?),
                other => return Err(CliError::Config(format!("unknown key {other}"))),
            }
        }
        Ok(())
    }

    /// Rejects values outside their documented ranges.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        for c in &self.checks {
            if !VERIFY_CHECKS.contains(&c.as_str()) && !SWEEP_CHECKS.contains(&c.as_str()) {
                return bad(format!("unknown check {c}"));
            }
        }
        if let Some(d) = self.dims.iter().find(|d| !(3..=12).contains(*d)) {
            return bad(format!("d = {d} outside 3..=12"));
        }
        for c in &self.couplings {
            if let Coupling::Value(a) = c {
                if !a.is_finite() {
                    return bad(format!("a = {a} is not finite"));
                }
                for &d in self.dims_or_default().iter() {
                    if *a < endpoint_coupling(d) {
                        return bad(format!("a = {a} lies below the endpoint coupling {} for d = {d}", endpoint_coupling(d)));
                    }
                }
            }
        }
        if let Some(s) = self.smoothness.iter().find(|s| !(**s > 0.0 && **s < 2.0)) {
            return bad(format!("s = {s} outside (0, 2)"));
        }
        if let Some(p) = self.exponents.iter().find(|p| !(**p > 1.0)) {
            return bad(format!("p = {p} must exceed 1"));
        }
        if let Some(n) = self.grid.n {
            if !(64..=65_536).contains(&n) {
                return bad(format!("grid-n = {n} outside 64..=65536"));
            }
        }
        for (name, r) in [("rmin", self.grid.r_min), ("rmax", self.grid.r_max)] {
            if let Some(r) = r {
                if !(r > 0.0 && r.is_finite()) {
                    return bad(format!("{name} = {r} must be positive and finite"));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (self.grid.r_min, self.grid.r_max) {
            if hi <= 10.0 * lo {
                return bad(format!("rmax = {hi} must exceed ten times rmin = {lo}"));
            }
        }
        if !(1..=1_000_000).contains(&self.l_max) {
            return bad(format!("lmax = {} outside 1..=1000000", self.l_max));
        }
        for (name, n) in [("nmin", self.n_min), ("nmax", self.n_max)] {
            if let Some(n) = n {
                if !(n > 0.0 && n.is_finite()) {
                    return bad(format!("{name} = {n} must be positive and finite"));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (self.n_min, self.n_max) {
            if hi <= lo {
                return bad(format!("need nmin < nmax, got {lo} and {hi}"));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0 && t < 1.0) {
                return bad(format!("tol = {t} outside (0, 1)"));
            }
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".to_string());
        }
        Ok(())
    }

    pub fn dims_or_default(&self) -> Vec<usize> {
        if self.dims.is_empty() {
            vec![3, 4, 5]
        } else {
            self.dims.clone()
        }
    }
}
