//! Subcommand implementations.

use std::path::Path;

use serde::Serialize;

use nonlocal_sharp_core::exponents::{classify_bq, BqClassification};
use nonlocal_sharp_core::fit::{fit_q_norm_slope, q_norm_window};
use nonlocal_sharp_core::kernels::{check_kernel_bounds, KernelBoundReport, SyntheticK5};
use nonlocal_sharp_core::operator::{green_q_norm_bound, green_q_norms};
use nonlocal_sharp_core::{
    assemble, eigenfunction_boundary_report, fit_power, graded_mesh, leading_eigenpairs, predict_mu,
    FitResult, FitWindow, GreenKernel, Grid, ProblemParams,
};

use crate::cli::*;
use crate::config::{BackendName, CaseSpec, Format, StudyConfig};
use crate::error::{CliError, CliResult};
use crate::output::{csv_bytes, fmt_f64, json_bytes, print_json, write_atomic};
use crate::study::{csv_row, run_all, run_case, summarize, CaseFailure, StudyRow, STUDY_HEADER};

pub const JOBS_ENV: &str = "NONLOCAL_SHARP_JOBS";

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Predict(a) => predict(&a),
        Command::Bq(a) => bq(&a),
        Command::Solve(a) => solve(&a),
        Command::Study(a) => study(&a),
        Command::Eigen(a) => eigen(&a),
        Command::GreenNorm(a) => green_norm(&a),
        Command::VerifyKernel(a) => verify_kernel(&a),
    }
}

#[derive(Serialize)]
struct PredictOut {
    mu: f64,
    sigma: f64,
    regime: &'static str,
    log_exponent: Option<f64>,
    dim: usize,
    s: f64,
    gamma: f64,
    p: f64,
}

fn predict(a: &PredictArgs) -> CliResult<()> {
    ProblemParams::new(a.dim, a.s, a.gamma, a.p)?;
    let pred = predict_mu(a.s, a.gamma, a.p)?;
    print_json(&PredictOut {
        mu: pred.mu,
        sigma: pred.sigma,
        regime: pred.regime.name(),
        log_exponent: pred.log_exponent,
        dim: a.dim,
        s: a.s,
        gamma: a.gamma,
        p: a.p,
    });
    Ok(())
}

#[derive(Serialize)]
struct BqOut {
    regime: &'static str,
    exponent: f64,
    log_exponent: Option<f64>,
    q_low: f64,
    /// `null` when unbounded.
    q_high: Option<f64>,
    dim: usize,
    s: f64,
    gamma: f64,
    q: f64,
}

fn bq_out(c: &BqClassification, dim: usize, s: f64, gamma: f64, q: f64) -> BqOut {
    BqOut {
        regime: c.regime.name(),
        exponent: c.exponent,
        log_exponent: c.log_exponent,
        q_low: c.q_low,
        q_high: c.q_high.is_finite().then_some(c.q_high),
        dim,
        s,
        gamma,
        q,
    }
}

fn bq(a: &BqArgs) -> CliResult<()> {
    let c = classify_bq(a.dim, a.s, a.gamma, a.q)?;
    print_json(&bq_out(&c, a.dim, a.s, a.gamma, a.q));
    Ok(())
}

#[derive(Serialize)]
struct FitOut<'a> {
    status: &'static str,
    #[serde(flatten)]
    row: &'a StudyRow,
    bracket_gap: f64,
    max_order_violation: f64,
    fit: FitJson,
}

/// Regression details of a [`FitResult`].
#[derive(Serialize)]
struct FitJson {
    exponent_hat: f64,
    intercept: f64,
    r2: f64,
    n_points: usize,
    delta_min: f64,
    delta_max: f64,
    log_exponent_hat: Option<f64>,
    r2_pure_log: Option<f64>,
    additive_log_exponent_hat: Option<f64>,
    r2_additive_log: Option<f64>,
    joint_log_exponent_hat: Option<f64>,
}

impl From<&FitResult> for FitJson {
    fn from(f: &FitResult) -> Self {
        let lc = f.log_correction.as_ref();
        FitJson {
            exponent_hat: f.exponent_hat,
            intercept: f.intercept,
            r2: f.r2,
            n_points: f.n_points,
            delta_min: f.delta_min,
            delta_max: f.delta_max,
            log_exponent_hat: f.log_exponent_hat(),
            r2_pure_log: lc.map(|l| l.r2_pure),
            additive_log_exponent_hat: lc.map(|l| l.additive_log_exponent_hat),
            r2_additive_log: lc.map(|l| l.r2_additive),
            joint_log_exponent_hat: lc.map(|l| l.joint_log_exponent_hat),
        }
    }
}

#[derive(Serialize)]
struct FailureOut<'a> {
    status: &'static str,
    case: &'a CaseSpec,
    #[serde(flatten)]
    failure: &'a CaseFailure,
}

fn grid_cells(grid: &Grid, i: usize) -> [String; 2] {
    [fmt_f64(grid.nodes()[i]), fmt_f64(grid.delta()[i])]
}

fn solve(a: &SolveArgs) -> CliResult<()> {
    let spec = CaseSpec {
        backend: a.backend,
        s: a.s,
        gamma: a.gamma,
        p: a.p,
        n: a.mesh.n,
        grading: a.mesh.grading,
        tol: a.tol,
        max_iter: a.max_iter,
    };
    let case = spec.prepare()?;
    let fit_path = a.out.join("fit.json");
    match run_case(&case) {
        Ok(out) => {
            let rows: Vec<Vec<String>> = (0..out.grid.len())
                .map(|i| {
                    let [x, d] = grid_cells(&out.grid, i);
                    vec![x, d, fmt_f64(out.solution.u[i])]
                })
                .collect();
            write_atomic(&a.out.join("solution.csv"), &csv_bytes(&["x", "delta", "u"], &rows))?;
            let json = FitOut {
                status: "ok",
                row: &out.row,
                bracket_gap: out.solution.bracket_gap,
                max_order_violation: out.solution.max_order_violation,
                fit: FitJson::from(&out.fit.fit),
            };
            write_atomic(&fit_path, &json_bytes(&json))
        }
        Err(f) => {
            write_atomic(&fit_path, &json_bytes(&FailureOut { status: "failed", case: &spec, failure: &f }))?;
            let msg = format!("{} failed: {}", f.stage, f.error);
            Err(if f.exit_code == 2 { CliError::Invalid(msg) } else { CliError::Numerical(msg) })
        }
    }
}

fn jobs(flag: Option<usize>) -> CliResult<usize> {
    let jobs = match std::env::var(JOBS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::Invalid(format!("{JOBS_ENV} = {v:?} is not a thread count")))?,
        Err(_) => match flag {
            Some(j) => j,
            None => std::thread::available_parallelism().map_or(1, |n| n.get()),
        },
    };
    if jobs == 0 {
        return Err(CliError::Invalid("jobs must be positive".into()));
    }
    Ok(jobs)
}

fn study(a: &StudyArgs) -> CliResult<()> {
    let config = StudyConfig::load(&a.config)?;
    let cases = config.prepare()?;
    let jobs = jobs(a.jobs)?;
    let out_dir = a.out.clone().unwrap_or_else(|| config.output_dir.clone());
    let results = run_all(&cases, jobs)?;

    if config.formats.contains(&Format::Csv) {
        let rows: Vec<Vec<String>> = config
            .cases
            .iter()
            .zip(&results)
            .enumerate()
            .map(|(i, (spec, res))| csv_row(i, spec, res))
            .collect();
        write_atomic(&out_dir.join("study.csv"), &csv_bytes(&STUDY_HEADER, &rows))?;
    }
    if config.formats.contains(&Format::Json) {
        let rows: Vec<Option<&StudyRow>> = results.iter().map(|r| r.as_ref().ok().map(|o| &o.row)).collect();
        write_atomic(&out_dir.join("study.json"), &json_bytes(&rows))?;
    }
    let summary = summarize(&config.cases, &results);
    write_atomic(&out_dir.join("summary.json"), &json_bytes(&summary))?;
    if summary.n_failed > 0 {
        return Err(CliError::Numerical(format!(
            "{} of {} cases failed; see {}",
            summary.n_failed,
            summary.n_cases,
            out_dir.join("summary.json").display()
        )));
    }
    Ok(())
}

fn eigen_kernel(a: &EigenArgs) -> CliResult<(GreenKernel, f64)> {
    match (a.backend, a.gamma) {
        (BackendName::SyntheticK5, Some(g)) => {
            Ok((GreenKernel::synthetic(ProblemParams::new(1, a.s, g, 1.0)?)?, g))
        }
        (BackendName::SyntheticK5, None) => Err(CliError::Invalid("--gamma is required".into())),
        (BackendName::SpectralMt, Some(g)) if g != 1.0 => {
            Err(CliError::Invalid(format!("the spectral backend has gamma = 1, got {g}")))
        }
        (BackendName::SpectralMt, _) => {
            Ok((GreenKernel::spectral(ProblemParams::new(1, a.s, 1.0, 1.0)?)?, 1.0))
        }
    }
}

#[derive(Serialize)]
struct PairOut {
    index: usize,
    mu: f64,
    lambda: f64,
    residual: f64,
    iterations: usize,
    sup_ratio: f64,
    inf_ratio: Option<f64>,
    n_points: usize,
}

#[derive(Serialize)]
struct EigenOut {
    backend: &'static str,
    s: f64,
    gamma: f64,
    n: usize,
    grading: f64,
    pairs: Vec<PairOut>,
    /// Boundary slope of `Φ_1`, expected to equal γ.
    phi1_fit: FitJson,
}

fn eigen(a: &EigenArgs) -> CliResult<()> {
    let (kernel, gamma) = eigen_kernel(a)?;
    let grid = graded_mesh(a.mesh.n, a.mesh.grading)?;
    let op = assemble(&kernel, &grid)?;
    let pairs = leading_eigenpairs(&op, a.count, a.tol, a.max_iter)?;
    let ratios = eigenfunction_boundary_report(&pairs, &grid, gamma);
    let phi1_fit = fit_power(&pairs[0].phi, &grid, &FitWindow::default())?;

    let values: Vec<Vec<String>> = pairs
        .iter()
        .map(|p| {
            vec![
                p.index.to_string(),
                fmt_f64(p.mu),
                fmt_f64(p.lambda()),
                fmt_f64(p.residual),
                p.iterations.to_string(),
            ]
        })
        .collect();
    write_atomic(
        &a.out.join("eigenvalues.csv"),
        &csv_bytes(&["index", "mu", "lambda", "residual", "iterations"], &values),
    )?;

    let names: Vec<String> = pairs.iter().map(|p| format!("phi_{}", p.index)).collect();
    let mut header = vec!["x", "delta"];
    header.extend(names.iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..grid.len())
        .map(|i| {
            let mut row = grid_cells(&grid, i).to_vec();
            row.extend(pairs.iter().map(|p| fmt_f64(p.phi[i])));
            row
        })
        .collect();
    write_atomic(&a.out.join("eigenfunctions.csv"), &csv_bytes(&header, &rows))?;

    let json = EigenOut {
        backend: a.backend.as_str(),
        s: a.s,
        gamma,
        n: a.mesh.n,
        grading: a.mesh.grading,
        pairs: pairs
            .iter()
            .zip(&ratios)
            .map(|(p, r)| PairOut {
                index: p.index,
                mu: p.mu,
                lambda: p.lambda(),
                residual: p.residual,
                iterations: p.iterations,
                sup_ratio: r.sup_ratio,
                inf_ratio: r.inf_ratio,
                n_points: r.n_points,
            })
            .collect(),
        phi1_fit: FitJson::from(&phi1_fit),
    };
    write_atomic(&a.out.join("boundary.json"), &json_bytes(&json))
}

#[derive(Debug, Clone, Serialize)]
pub struct GreenNormSummary {
    pub s: f64,
    pub gamma: f64,
    pub q: f64,
    pub n: usize,
    pub grading: Option<f64>,
    pub bq_regime: &'static str,
    /// `γ` times the `B_q` exponent.
    pub slope_pred: f64,
    pub slope_hat: f64,
    pub abs_err: f64,
    pub r2: f64,
    pub n_points: usize,
    /// `max_x ∫ G(·, x)^q` and its closed-form bound.
    pub sup_integral: f64,
    pub integral_bound: f64,
}

/// Row norms and the slope fit behind `green-norm`.
pub fn green_norm_study(s: f64, gamma: f64, q: f64, grid: &Grid) -> CliResult<(Vec<f64>, GreenNormSummary)> {
    let kernel = GreenKernel::synthetic(ProblemParams::new(1, s, gamma, 1.0)?)?;
    let class = classify_bq(1, s, gamma, q)?;
    let norms = green_q_norms(&kernel, grid, q)?;
    let fit = fit_q_norm_slope(&norms, grid, gamma, &class, &q_norm_window())?;
    let slope_pred = gamma * class.exponent;
    let summary = GreenNormSummary {
        s,
        gamma,
        q,
        n: grid.len(),
        grading: grid.grading(),
        bq_regime: class.regime.name(),
        slope_pred,
        slope_hat: fit.exponent_hat,
        abs_err: (fit.exponent_hat - slope_pred).abs(),
        r2: fit.r2,
        n_points: fit.n_points,
        sup_integral: norms.iter().map(|v| v.powf(q)).fold(0.0, f64::max),
        integral_bound: green_q_norm_bound(1, s, q, grid.diam())?,
    };
    Ok((norms, summary))
}

fn green_norm(a: &GreenNormArgs) -> CliResult<()> {
    let grid = graded_mesh(a.mesh.n, a.mesh.grading)?;
    let (norms, summary) = green_norm_study(a.s, a.gamma, a.q, &grid)?;
    let rows: Vec<Vec<String>> = (0..grid.len())
        .map(|i| {
            let [x, d] = grid_cells(&grid, i);
            vec![x, d, fmt_f64(norms[i])]
        })
        .collect();
    write_atomic(&a.out.join("green_norm.csv"), &csv_bytes(&["x", "delta", "norm"], &rows))?;
    write_atomic(&a.out.join("green_norm.json"), &json_bytes(&summary))
}

#[derive(Serialize)]
struct KernelOut {
    s: f64,
    gamma: f64,
    seed: u64,
    c0_hat: f64,
    c1_hat: f64,
    violations: usize,
    max_asymmetry: f64,
    n_samples: usize,
}

fn verify_kernel(a: &VerifyKernelArgs) -> CliResult<()> {
    // p does not enter the kernel
    let kernel = SyntheticK5::new(ProblemParams::new(1, a.s, a.gamma, 1.0)?)?;
    let r: KernelBoundReport = check_kernel_bounds(&kernel, a.samples, a.seed)?;
    print_json(&KernelOut {
        s: a.s,
        gamma: a.gamma,
        seed: a.seed,
        c0_hat: r.c0_hat,
        c1_hat: r.c1_hat,
        violations: r.violations,
        max_asymmetry: r.max_asymmetry,
        n_samples: r.n_samples,
    });
    if r.violations > 0 {
        return Err(CliError::Numerical(format!("{} samples violate the lower kernel bound", r.violations)));
    }
    Ok(())
}

/// Used by tests that bypass the argument parser.
pub fn write_study_csv(path: &Path, specs: &[CaseSpec], results: &[crate::study::CaseResult]) -> CliResult<()> {
    let rows: Vec<Vec<String>> =
        specs.iter().zip(results).enumerate().map(|(i, (s, r))| csv_row(i, s, r)).collect();
    write_atomic(path, &csv_bytes(&STUDY_HEADER, &rows))
}
