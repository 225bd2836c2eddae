//! Leading eigenpairs of the discrete Green operator.
//!
//! Power iteration in the quadrature inner product `⟨u, v⟩ = Σ w_i u_i v_i`,
//! in which the operator is self-adjoint; converged pairs are deflated by
//! projecting them out of every iterate.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::operator::GreenOperator;

pub const MAX_EIGENPAIRS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    /// 1-based index.
    pub index: usize,
    /// Eigenvalue of the Green operator; `λ = 1/μ` for the operator `L`.
    pub mu: f64,
    /// Node values with unit quadrature `L²` norm.
    pub phi: Vec<f64>,
    /// `‖A φ - μ φ‖` in the quadrature norm.
    pub residual: f64,
    pub iterations: usize,
}

impl EigenPair {
    pub fn lambda(&self) -> f64 {
        1.0 / self.mu
    }
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn project_out(grid: &Grid, found: &[EigenPair], v: &mut [f64]) {
    // twice, for orthogonality at round-off level
    for _ in 0..2 {
        for pair in found {
            let c = grid.inner(&pair.phi, v);
            axpy(-c, &pair.phi, v);
        }
    }
}

/// Sign convention: nonnegative quadrature mean; modes with vanishing mean
/// are oriented by their first moment about `x = 1/2`.
fn fix_sign(grid: &Grid, phi: &mut [f64]) {
    let w = grid.weights();
    let mean: f64 = phi.iter().zip(w).map(|(p, w)| p * w).sum();
    let mass: f64 = phi.iter().zip(w).map(|(p, w)| p.abs() * w).sum();
    let key = if mean.abs() > 1e-8 * mass {
        mean
    } else {
        phi.iter()
            .zip(w)
            .zip(grid.nodes())
            .map(|((p, w), x)| p * w * (x - 0.5))
            .sum()
    };
    if key < 0.0 {
        phi.iter_mut().for_each(|p| *p = -*p);
    }
}

/// The `n_eigs` eigenpairs of largest `|μ|`.
///
/// The first pair starts from the all-ones vector, which overlaps the
/// positive Perron vector. Later pairs start from `1 + x`, which also has a
/// component along the modes that are odd about `x = 1/2`.
///
/// A pair is accepted once the relative change of `μ` is below `tol` and
/// the residual is below `tol · μ_1 / 4`.
pub fn leading_eigenpairs(
    op: &GreenOperator,
    n_eigs: usize,
    tol: f64,
    max_iter: usize,
) -> Result<Vec<EigenPair>> {
    let n = op.len();
    if n_eigs == 0 || n_eigs > MAX_EIGENPAIRS || n_eigs > n {
        return Err(invalid!("n_eigs = {n_eigs} must lie in 1..={}", MAX_EIGENPAIRS.min(n)));
    }
    if !(tol > 0.0) {
        return Err(invalid!("tolerance must be positive, got {tol}"));
    }
    let grid = op.grid();
    let mut found: Vec<EigenPair> = Vec::with_capacity(n_eigs);
    let mut y = vec![0.0; n];
    for index in 1..=n_eigs {
        let mut v: Vec<f64> = if index == 1 {
            vec![1.0; n]
        } else {
            grid.nodes().iter().map(|x| 1.0 + x).collect()
        };
        project_out(grid, &found, &mut v);
        let norm = grid.norm(&v);
        if !(norm > 0.0) {
            return Err(Error::Internal("start vector lies in the deflated subspace".into()));
        }
        v.iter_mut().for_each(|x| *x /= norm);

        let mut mu_prev = f64::NAN;
        let mut residual = f64::INFINITY;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < max_iter {
            iterations += 1;
            op.apply_into(&v, &mut y)?;
            project_out(grid, &found, &mut y);
            let mu = grid.inner(&v, &y);
            let r: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a - mu * b).collect();
            residual = grid.norm(&r);
            let scale = found.first().map_or(mu.abs(), |p| p.mu.abs());
            let stalled = (mu - mu_prev).abs() < tol * mu.abs();
            mu_prev = mu;
            // margin for the leakage of earlier, inexact pairs into the
            // undeflated residual reported below
            if stalled && residual < 0.25 * tol * scale {
                converged = true;
                break;
            }
            let norm = grid.norm(&y);
            if !(norm > 0.0) {
                return Err(Error::Internal("iterate collapsed to zero".into()));
            }
            for (vi, yi) in v.iter_mut().zip(&y) {
                *vi = yi / norm;
            }
        }
        if !converged {
            return Err(Error::ConvergenceFailure { iterations, residual });
        }
        fix_sign(grid, &mut v);
        // residual of the undeflated operator
        op.apply_into(&v, &mut y)?;
        let r: Vec<f64> = y.iter().zip(&v).map(|(a, b)| a - mu_prev * b).collect();
        found.push(EigenPair { index, mu: mu_prev, phi: v, residual: grid.norm(&r), iterations });
    }
    Ok(found)
}

/// Ratios of an eigenfunction to `δ^γ` near the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryRatios {
    pub index: usize,
    /// `sup |Φ_n| / δ^γ`.
    pub sup_ratio: f64,
    /// `inf Φ_1 / δ^γ`, reported for the first pair only.
    pub inf_ratio: Option<f64>,
    pub n_points: usize,
}

pub const BOUNDARY_WINDOW: f64 = 0.2;
pub const BOUNDARY_SKIP: usize = 3;

/// Ratios over `δ ∈ (0, 0.2]`, skipping the three nodes nearest each
/// endpoint.
pub fn eigenfunction_boundary_report(
    pairs: &[EigenPair],
    grid: &Grid,
    gamma: f64,
) -> Vec<BoundaryRatios> {
    let window: Vec<usize> = (0..grid.len())
        .filter(|&i| grid.boundary_rank(i) >= BOUNDARY_SKIP && grid.delta()[i] <= BOUNDARY_WINDOW)
        .collect();
    pairs
        .iter()
        .map(|pair| {
            let ratios = window.iter().map(|&i| pair.phi[i] / grid.delta()[i].powf(gamma));
            let sup_ratio = ratios.clone().fold(0.0f64, |m, r| m.max(r.abs()));
            let inf_ratio = (pair.index == 1).then(|| ratios.fold(f64::INFINITY, f64::min));
            BoundaryRatios { index: pair.index, sup_ratio, inf_ratio, n_points: window.len() }
        })
        .collect()
}
