//! One semilinear case end to end, and sweeps over many.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use nonlocal_sharp_core::semilinear::{harnack_report, picard_solve, HarnackReport, SemilinearSolution};
use nonlocal_sharp_core::{assemble, fit_report, predict_mu, Error as CoreError, FitComparison, Grid};

use crate::config::{CaseSpec, PreparedCase};
use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, fmt_opt};

/// One row of a study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyRow {
    pub s: f64,
    pub gamma: f64,
    pub p: f64,
    pub backend: &'static str,
    pub n: usize,
    pub grading: f64,
    pub mu_pred: f64,
    pub mu_hat: f64,
    pub abs_err: f64,
    pub r2: f64,
    pub regime: &'static str,
    pub log_exp_pred: Option<f64>,
    pub log_exp_hat: Option<f64>,
    pub ghp_ratio: f64,
    pub local_ratio: f64,
    pub iterations: usize,
    pub residual: f64,
    pub wall_ms: u64,
}

/// CSV columns; wall time is left out so the file is reproducible.
pub const STUDY_HEADER: [&str; 19] = [
    "index",
    "status",
    "s",
    "gamma",
    "p",
    "backend",
    "n",
    "grading",
    "mu_pred",
    "mu_hat",
    "abs_err",
    "r2",
    "regime",
    "log_exp_pred",
    "log_exp_hat",
    "ghp_ratio",
    "local_ratio",
    "iterations",
    "residual",
];

#[derive(Debug, Clone)]
pub struct CaseOutcome {
    pub row: StudyRow,
    pub grid: Grid,
    pub solution: SemilinearSolution,
    pub fit: FitComparison,
    pub harnack: HarnackReport,
}

/// Why a case stopped, with whatever was known at that point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseFailure {
    pub stage: &'static str,
    pub error: String,
    pub exit_code: i32,
    pub iterations: Option<usize>,
    pub residual: Option<f64>,
    pub wall_ms: u64,
}

impl CaseFailure {
    fn new(stage: &'static str, e: CoreError, start: Instant) -> Self {
        let (iterations, residual) = match e {
            CoreError::ConvergenceFailure { iterations, residual } => (Some(iterations), Some(residual)),
            _ => (None, None),
        };
        CaseFailure {
            stage,
            exit_code: crate::error::core_exit_code(&e),
            error: e.to_string(),
            iterations,
            residual,
            wall_ms: start.elapsed().as_millis() as u64,
        }
    }
}

pub fn run_case(case: &PreparedCase) -> Result<CaseOutcome, CaseFailure> {
    let start = Instant::now();
    let spec = &case.spec;
    let fail = |stage| move |e| CaseFailure::new(stage, e, start);
    let prediction = predict_mu(spec.s, spec.gamma, spec.p).map_err(fail("predict"))?;
    let op = assemble(&case.kernel, &case.grid).map_err(fail("assemble"))?;
    let solution = picard_solve(&op, &case.solver).map_err(fail("solve"))?;
    let fit = fit_report(&solution.u, &case.grid, &prediction).map_err(fail("fit"))?;
    let harnack = harnack_report(&solution.u, &case.grid, &prediction).map_err(fail("harnack"))?;
    let row = StudyRow {
        s: spec.s,
        gamma: spec.gamma,
        p: spec.p,
        backend: spec.backend.as_str(),
        n: spec.n,
        grading: spec.grading,
        mu_pred: prediction.mu,
        mu_hat: fit.mu_hat,
        abs_err: fit.abs_err,
        r2: fit.fit.r2,
        regime: prediction.regime.name(),
        log_exp_pred: prediction.log_exponent,
        log_exp_hat: fit.fit.log_exponent_hat(),
        ghp_ratio: harnack.global_ratio,
        local_ratio: harnack.local_ratio,
        iterations: solution.iterations,
        residual: solution.residual,
        wall_ms: start.elapsed().as_millis() as u64,
    };
    Ok(CaseOutcome { row, grid: case.grid.clone(), solution, fit, harnack })
}

pub type CaseResult = Result<CaseOutcome, CaseFailure>;

/// Runs all cases on a pool of `jobs` threads; results keep input order.
pub fn run_all(cases: &[PreparedCase], jobs: usize) -> CliResult<Vec<CaseResult>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Invalid(format!("cannot start {jobs} worker threads: {e}")))?;
    Ok(pool.install(|| cases.par_iter().map(run_case).collect()))
}

fn spec_cells(index: usize, status: &str, spec: &CaseSpec) -> Vec<String> {
    vec![
        index.to_string(),
        status.to_string(),
        fmt_f64(spec.s),
        fmt_f64(spec.gamma),
        fmt_f64(spec.p),
        spec.backend.as_str().to_string(),
        spec.n.to_string(),
        fmt_f64(spec.grading),
    ]
}

pub fn csv_row(index: usize, spec: &CaseSpec, result: &CaseResult) -> Vec<String> {
    match result {
        Ok(out) => {
            let r = &out.row;
            let mut cells = spec_cells(index, "ok", spec);
            cells.extend([
                fmt_f64(r.mu_pred),
                fmt_f64(r.mu_hat),
                fmt_f64(r.abs_err),
                fmt_f64(r.r2),
                r.regime.to_string(),
                fmt_opt(r.log_exp_pred),
                fmt_opt(r.log_exp_hat),
                fmt_f64(r.ghp_ratio),
                fmt_f64(r.local_ratio),
                r.iterations.to_string(),
                fmt_f64(r.residual),
            ]);
            cells
        }
        Err(f) => {
            let mut cells = spec_cells(index, "failed", spec);
            cells.resize(STUDY_HEADER.len(), String::new());
            if let Some(it) = f.iterations {
                cells[17] = it.to_string();
            }
            cells[18] = fmt_opt(f.residual);
            cells
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCase {
    pub index: usize,
    pub s: f64,
    pub gamma: f64,
    pub p: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexedFailure {
    pub index: usize,
    #[serde(flatten)]
    pub failure: CaseFailure,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudySummary {
    pub n_cases: usize,
    pub n_failed: usize,
    /// Over successful rows outside the critical regime.
    pub max_abs_err: Option<f64>,
    pub worst_case: Option<WorstCase>,
    pub max_ghp_ratio: Option<f64>,
    pub wall_ms: Vec<u64>,
    pub failures: Vec<IndexedFailure>,
}

pub fn summarize(specs: &[CaseSpec], results: &[CaseResult]) -> StudySummary {
    let mut worst: Option<WorstCase> = None;
    let mut max_ghp: Option<f64> = None;
    let mut failures = Vec::new();
    let mut wall_ms = Vec::with_capacity(results.len());
    for (index, (spec, res)) in specs.iter().zip(results).enumerate() {
        match res {
            Ok(out) => {
                wall_ms.push(out.row.wall_ms);
                max_ghp = Some(max_ghp.map_or(out.row.ghp_ratio, |m: f64| m.max(out.row.ghp_ratio)));
                if out.fit.critical {
                    continue;
                }
                if worst.as_ref().is_none_or(|w| out.row.abs_err > w.abs_err) {
                    worst = Some(WorstCase {
                        index,
                        s: spec.s,
                        gamma: spec.gamma,
                        p: spec.p,
                        abs_err: out.row.abs_err,
                    });
                }
            }
            Err(f) => {
                wall_ms.push(f.wall_ms);
                failures.push(IndexedFailure { index, failure: f.clone() });
            }
        }
    }
    StudySummary {
        n_cases: results.len(),
        n_failed: failures.len(),
        max_abs_err: worst.as_ref().map(|w| w.abs_err),
        worst_case: worst,
        max_ghp_ratio: max_ghp,
        wall_ms,
        failures,
    }
}
