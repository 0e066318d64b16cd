//! Report files: one JSON object per cell, an aggregate CSV, plot data and
//! wall times. Only the timing file differs between identical runs.

use std::fs;
use std::path::Path;
use std::time::Duration;

use invsq_core::verify::{PlotData, VerificationReport};
use serde::Serialize;

use crate::error::CliError;

/// Version of the JSON report layout.
pub const SCHEMA_VERSION: u32 = 1;

pub const LATTICE_HEADER: [&str; 8] = ["t", "|x|", "|y|", "cosθ", "kernel", "lower", "upper", "ratio"];
pub const SLOPE_HEADER: [&str; 3] = ["N", "norm_ratio", "fitted_line"];
pub const GROWTH_HEADER: [&str; 2] = ["ε", "annulus_norm"];
pub const SUMMARY_HEADER: [&str; 7] = ["check", "cell", "verdict", "observed_min", "observed_max", "slope", "params"];

/// A finished cell.
pub struct CellResult {
    pub check: &'static str,
    pub index: usize,
    pub report: VerificationReport,
    pub runtime: Duration,
}

impl CellResult {
    pub fn stem(&self) -> String {
        format!("{}-{:04}", self.check, self.index)
    }
}

#[derive(Serialize)]
struct JsonReport<'a> {
    schema: u32,
    cell: usize,
    seed: u64,
    #[serde(flatten)]
    report: &'a VerificationReport,
}

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn num(x: f64) -> String {
    x.to_string()
}

fn params_field(r: &VerificationReport) -> String {
    r.params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
}

/// Writes one plot table to `path`.
pub fn write_plot(path: &Path, plot: &PlotData) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io(path, e))?;
    let rows: Vec<Vec<String>> = match plot {
        PlotData::RatioLattice(rows) => {
            w.write_record(LATTICE_HEADER).map_err(|e| io(path, e))?;
            rows.iter()
                .map(|r| [r.t, r.rx, r.ry, r.cos, r.kernel, r.lower, r.upper, r.ratio].map(num).to_vec())
                .collect()
        }
        PlotData::SlopeFit(rows) => {
            w.write_record(SLOPE_HEADER).map_err(|e| io(path, e))?;
            rows.iter().map(|r| [r.n, r.norm_ratio, r.fitted_line].map(num).to_vec()).collect()
        }
        PlotData::GrowthCurve(rows) => {
            w.write_record(GROWTH_HEADER).map_err(|e| io(path, e))?;
            rows.iter().map(|r| [r.eps, r.annulus_norm].map(num).to_vec()).collect()
        }
    };
    for row in rows {
        w.write_record(&row).map_err(|e| io(path, e))?;
    }
    w.flush().map_err(|e| io(path, e))
}

/// Writes every report file under `dir`.
pub fn write_all(dir: &Path, results: &[CellResult], seed: u64) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    for r in results {
        let path = dir.join(format!("{}.json", r.stem()));
        let body = JsonReport { schema: SCHEMA_VERSION, cell: r.index, seed, report: &r.report };
        let text = serde_json::to_string_pretty(&body).map_err(|e| io(&path, e))?;
        fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
        if let Some(plot) = &r.report.plot {
            write_plot(&dir.join(format!("{}-plot.csv", r.stem())), plot)?;
        }
    }

    let path = dir.join("summary.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
    w.write_record(SUMMARY_HEADER).map_err(|e| io(&path, e))?;
    for r in results {
        let rep = &r.report;
        w.write_record([
            r.check.to_string(),
            r.index.to_string(),
            rep.verdict.as_str().to_string(),
            num(rep.observed_min),
            num(rep.observed_max),
            rep.slope.map(num).unwrap_or_default(),
            params_field(rep),
        ])
        .map_err(|e| io(&path, e))?;
    }
    w.flush().map_err(|e| io(&path, e))?;

    let path = dir.join("timing.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
    w.write_record(["check", "cell", "seconds"]).map_err(|e| io(&path, e))?;
    for r in results {
        w.write_record([r.check.to_string(), r.index.to_string(), r.runtime.as_secs_f64().to_string()])
            .map_err(|e| io(&path, e))?;
    }
    w.flush().map_err(|e| io(&path, e))
}
