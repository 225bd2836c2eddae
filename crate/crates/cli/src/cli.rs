use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::BackendName;

#[derive(Debug, Parser)]
#[command(name = "nonlocal-sharp", version)]
#[command(about = "Boundary behaviour of semilinear nonlocal Dirichlet problems on the unit interval")]
#[command(after_help = "Exit status: 0 success, 1 I/O failure, 2 invalid input, 3 numerical failure.")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Predicted boundary exponent μ = γ ∧ 2s/(1-p) as JSON on stdout
    Predict(PredictArgs),
    /// Regime of the Green-function L^q bound as JSON on stdout
    Bq(BqArgs),
    /// Solve u = G[u^p] and fit the boundary exponent
    Solve(SolveArgs),
    /// Run every case of a JSON study config
    Study(StudyArgs),
    /// Leading eigenpairs and their boundary ratios
    Eigen(EigenArgs),
    /// L^q norms of the Green function rows and their boundary slope
    GreenNorm(GreenNormArgs),
    /// Sample the synthetic kernel against its two-sided bounds
    VerifyKernel(VerifyKernelArgs),
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
}

#[derive(Debug, Args)]
pub struct BqArgs {
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// Number of cells
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    /// Mesh grading exponent; 1 is uniform
    #[arg(long, default_value_t = 3.0)]
    pub grading: f64,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long, value_enum, default_value_t = BackendName::SyntheticK5)]
    pub backend: BackendName,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub p: f64,
    #[command(flatten)]
    pub mesh: MeshArgs,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iter: usize,
    /// Output directory for solution.csv and fit.json
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    /// JSON study config
    pub config: PathBuf,
    /// Overrides the config's output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Cases run concurrently; NONLOCAL_SHARP_JOBS takes precedence
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Args)]
pub struct EigenArgs {
    #[arg(long, value_enum, default_value_t = BackendName::SyntheticK5)]
    pub backend: BackendName,
    #[arg(long)]
    pub s: f64,
    /// Required for the synthetic backend; the spectral one has γ = 1
    #[arg(long)]
    pub gamma: Option<f64>,
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Number of eigenpairs
    #[arg(long, default_value_t = 4)]
    pub count: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iter: usize,
    /// Output directory for eigenvalues.csv, eigenfunctions.csv and boundary.json
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GreenNormArgs {
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long)]
    pub q: f64,
    #[command(flatten)]
    pub mesh: MeshArgs,
    /// Output directory for green_norm.csv and green_norm.json
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyKernelArgs {
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = nonlocal_sharp_core::kernels::DEFAULT_SEED)]
    pub seed: u64,
}
