//! Green-operator solver and verification toolkit for semilinear nonlocal
//! elliptic Dirichlet problems `L u = f(u)` posed on the unit interval in
//! weak-dual form `u = G[f(u)]`.
//!
//! The crate is `no_std` (it needs `alloc`). Enable the `parallel` feature to
//! assemble and apply dense operators with rayon.
//!
//! Layout:
//!
//! * [`grid`]: the unit interval, boundary distance and graded meshes.
//! * [`kernels`]: problem parameters, the synthetic two-sided-envelope
//!   kernel, the matrix-transfer spectral operator and an empirical kernel
//!   bound checker.
//! * [`operator`]: dense discretization of the Green operator and the
//!   `L^q` norms of its rows.
//! * [`spectral`]: leading eigenpairs of the discrete operator.
//! * [`semilinear`]: bracketed monotone Picard iteration for `u = G[u^p]`.
//! * [`exponents`]: closed-form boundary exponent predictors.
//! * [`fit`]: boundary exponent regression.

#![no_std]
// `!(x > 0.0)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

mod error;
mod quadrature;

pub mod exponents;
pub mod fit;
pub mod grid;
pub mod kernels;
pub mod operator;
pub mod semilinear;
pub mod spectral;

pub use error::{Error, Result};
pub use exponents::{
    classify_bq, hls_ladder, nu_case_machine, nu_sequence, predict_mu, BqClassification,
    BqRegime, CaseLabel, ExponentPrediction, NuCase, Regime,
};
pub use fit::{fit_log_correction, fit_power, fit_report, FitComparison, FitResult, FitWindow};
pub use grid::{boundary_distance, graded_mesh, Grid, Side};
pub use kernels::{
    check_kernel_bounds, spectral_mt_operator, Backend, GreenKernel, KernelBoundReport,
    KernelProbe, ProblemParams, SyntheticK5,
};
pub use operator::{assemble, green_q_norm, GreenOperator};
pub use semilinear::{
    auto_bracket, harnack_report, picard_map, picard_solve, solve_linear, Bracket, HarnackReport,
    SemilinearSolution, SolverConfig,
};
pub use spectral::{eigenfunction_boundary_report, leading_eigenpairs, BoundaryRatios, EigenPair};
