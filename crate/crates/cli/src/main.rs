//! `invsq`: runs verification checks of the inverse-square spectral calculus
//! and writes JSON, CSV and plot-data reports.

mod cells;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use invsq_core::verify::{Verdict, VerificationReport};
use rayon::prelude::*;

use config::{parse_couplings, parse_list, read_config, RunConfig};
use error::{CliError, EXIT_VERIFICATION};
use output::CellResult;

#[derive(Parser)]
#[command(name = "invsq", version, about = "Verification harness for L_a = -Δ + a/|x|²")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Pointwise kernel and multiplier checks.
    Verify { check: VerifyCheck },
    /// Parameter sweeps of norm inequalities.
    Sweep { check: SweepCheck },
    /// The checks listed under [run] in the config file.
    Run,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyCheck {
    Heat,
    Riesz,
    KernelDiff,
    Mikhlin,
    Cz,
    Identity,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepCheck {
    Hardy,
    Equiv,
    Bernstein,
    SqfnDiff,
    Sharpness,
    Schur,
}

fn check_name(v: impl ValueEnum) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

/// Flags override config-file values. List-valued flags take comma-separated
/// values.
#[derive(Args)]
struct Flags {
    /// Sectioned key=value config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dimensions.
    #[arg(long, global = true)]
    d: Option<String>,
    /// Couplings; `endpoint` is −((d−2)/2)².
    #[arg(long, global = true, allow_hyphen_values = true)]
    a: Option<String>,
    /// Smoothness orders in (0, 2).
    #[arg(long, global = true)]
    s: Option<String>,
    /// Lebesgue exponents; `inf` is accepted.
    #[arg(long, global = true)]
    p: Option<String>,
    #[arg(long = "grid-n", global = true)]
    grid_n: Option<usize>,
    #[arg(long, global = true)]
    rmin: Option<f64>,
    #[arg(long, global = true)]
    rmax: Option<f64>,
    /// Largest angular momentum summed in kernel evaluations.
    #[arg(long, global = true)]
    lmax: Option<usize>,
    #[arg(long, global = true)]
    nmin: Option<f64>,
    #[arg(long, global = true)]
    nmax: Option<f64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

impl Flags {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), CliError> {
        if let Some(v) = &self.d {
            cfg.dims = parse_list("d", v)?;
        }
        if let Some(v) = &self.a {
            cfg.couplings = parse_couplings(v)?;
        }
        if let Some(v) = &self.s {
            cfg.smoothness = parse_list("s", v)?;
        }
        if let Some(v) = &self.p {
            cfg.exponents = parse_list("p", v)?;
        }
        cfg.grid.n = self.grid_n.or(cfg.grid.n);
        cfg.grid.r_min = self.rmin.or(cfg.grid.r_min);
        cfg.grid.r_max = self.rmax.or(cfg.grid.r_max);
        cfg.l_max = self.lmax.unwrap_or(cfg.l_max);
        cfg.n_min = self.nmin.or(cfg.n_min);
        cfg.n_max = self.nmax.or(cfg.n_max);
        cfg.tol = self.tol.or(cfg.tol);
        cfg.jobs = self.jobs.or(cfg.jobs);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(())
    }
}

fn configure(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.flags.config {
        cfg.apply_entries(&read_config(path)?)?;
    }
    cli.flags.apply(&mut cfg)?;
    match cli.command {
        Command::Verify { check } => cfg.checks = vec![check_name(check)],
        Command::Sweep { check } => cfg.checks = vec![check_name(check)],
        Command::Run => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn failed_report(check: &str, err: &invsq_core::Error) -> VerificationReport {
    let mut report = VerificationReport::new(check);
    report.note(err.to_string());
    report.with_verdict(Verdict::Fail)
}

fn run(cfg: &RunConfig) -> Result<bool, CliError> {
    if cfg.checks.is_empty() {
        eprintln!("warning: no checks selected, nothing to do");
        return Ok(true);
    }
    let mut cells = Vec::new();
    for check in &cfg.checks {
        cells.extend(cells::build(check, cfg)?);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let outcomes: Vec<_> = pool.install(|| {
        cells
            .par_iter()
            .map(|c| {
                let start = Instant::now();
                let res = (c.job)();
                (res, start.elapsed())
            })
            .collect()
    });
    let mut results = Vec::with_capacity(cells.len());
    let mut counters = std::collections::BTreeMap::<&str, usize>::new();
    for (cell, (res, runtime)) in cells.iter().zip(outcomes) {
        let report = match res {
            Ok(r) => r,
            Err(e @ invsq_core::Error::Parameter(_)) => return Err(e.into()),
            Err(e) => failed_report(cell.check, &e),
        };
        let index = counters.entry(cell.check).or_default();
        results.push(CellResult { check: cell.check, index: *index, report, runtime });
        *index += 1;
    }
    output::write_all(&cfg.out, &results, cfg.seed)?;
    let failures: Vec<_> = results.iter().filter(|r| r.report.verdict.is_failure()).collect();
    for r in &failures {
        eprintln!("fail: {} ({:?})", r.stem(), r.report.params);
    }
    eprintln!(
        "{} cells, {} failed; reports in {}",
        results.len(),
        failures.len(),
        cfg.out.display()
    );
    Ok(failures.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match configure(&cli).and_then(|cfg| run(&cfg)) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VERIFICATION),
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
