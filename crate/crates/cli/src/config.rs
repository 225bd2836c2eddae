//! Study configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nonlocal_sharp_core::semilinear::SolverConfig;
use nonlocal_sharp_core::{graded_mesh, GreenKernel, Grid, ProblemParams};

use crate::error::{CliError, CliResult};

/// Smallest mesh a case may use; the fit window needs a few dozen nodes.
pub const MIN_NODES: usize = 32;
/// Dense storage: 8192² doubles is half a gigabyte.
pub const MAX_NODES: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BackendName {
    #[value(name = "synthetic-k5")]
    SyntheticK5,
    #[value(name = "spectral-mt")]
    SpectralMt,
}

impl BackendName {
    pub fn as_str(self) -> &'static str {
        match self {
            BackendName::SyntheticK5 => "synthetic-k5",
            BackendName::SpectralMt => "spectral-mt",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

fn default_backend() -> BackendName {
    BackendName::SyntheticK5
}
fn default_grading() -> f64 {
    3.0
}
fn default_tol() -> f64 {
    1e-10
}
fn default_max_iter() -> usize {
    10_000
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

/// One semilinear run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    #[serde(default = "default_backend")]
    pub backend: BackendName,
    pub s: f64,
    pub gamma: f64,
    pub p: f64,
    pub n: usize,
    /// Mesh grading exponent; 1 is uniform.
    #[serde(default = "default_grading")]
    pub grading: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

/// A validated case, ready to assemble.
#[derive(Debug, Clone)]
pub struct PreparedCase {
    pub spec: CaseSpec,
    pub kernel: GreenKernel,
    pub grid: Grid,
    pub solver: SolverConfig,
}

impl CaseSpec {
    pub fn prepare(&self) -> CliResult<PreparedCase> {
        if !(MIN_NODES..=MAX_NODES).contains(&self.n) {
            return Err(CliError::Invalid(format!("n = {} must lie in {MIN_NODES}..={MAX_NODES}", self.n)));
        }
        let params = ProblemParams::new(1, self.s, self.gamma, self.p)?;
        let kernel = match self.backend {
            BackendName::SyntheticK5 => GreenKernel::synthetic(params)?,
            BackendName::SpectralMt => {
                if self.gamma != 1.0 {
                    return Err(CliError::Invalid(format!(
                        "the spectral backend has gamma = 1, got {}",
                        self.gamma
                    )));
                }
                GreenKernel::spectral(params)?
            }
        };
        let grid = graded_mesh(self.n, self.grading)?;
        if self.backend == BackendName::SpectralMt && !grid.is_uniform() {
            return Err(CliError::Invalid("the spectral backend needs grading = 1".into()));
        }
        let solver = SolverConfig { tol: self.tol, max_iter: self.max_iter, ..SolverConfig::new(self.p) };
        solver.validate()?;
        Ok(PreparedCase { spec: *self, kernel, grid, solver })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub cases: Vec<CaseSpec>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_formats")]
    pub formats: Vec<Format>,
}

impl StudyConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Invalid(message) => CliError::Config { path: path.to_path_buf(), message },
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let config: StudyConfig =
            serde_json::from_str(text).map_err(|e| CliError::Invalid(e.to_string()))?;
        if config.cases.is_empty() {
            return Err(CliError::Invalid("the case list is empty".into()));
        }
        if config.formats.is_empty() {
            return Err(CliError::Invalid("no output format selected".into()));
        }
        Ok(config)
    }

    /// Validates every case before anything runs.
    pub fn prepare(&self) -> CliResult<Vec<PreparedCase>> {
        self.cases
            .iter()
            .enumerate()
            .map(|(i, c)| {
                c.prepare().map_err(|e| match e {
                    CliError::Core(e) => CliError::Invalid(format!("case {i}: {e}")),
                    CliError::Invalid(m) => CliError::Invalid(format!("case {i}: {m}")),
                    other => other,
                })
            })
            .collect()
    }
}
