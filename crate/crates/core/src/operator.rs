//! Dense discretization of `v ↦ ∫ G(·, y) v(y) dy` on a cell-midpoint grid.
//!
//! The operator is stored as a symmetric kernel matrix `K` and applied as
//! `(A v)_i = Σ_j K_ij w_j v_j`, so `A = K W` is self-adjoint in the
//! quadrature inner product even on graded meshes.
//!
//! For the synthetic kernel, the singular factor `|x_i - y|^(2s-1)` is
//! integrated exactly over every cell and only the bounded min-factors are
//! frozen at the nodes (product integration). The diagonal cell uses the
//! closed-form envelope integral when the cell is narrower than `δ(x_i)`,
//! where the min-factors are identically one, and a Gauss–Legendre ray
//! quadrature of the full kernel otherwise.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Result};
use crate::grid::{Grid, Side};
use crate::kernels::{spectral_mt_operator, Backend, GreenKernel, ProblemParams, SyntheticK5};
use crate::quadrature::{ray_integral, GaussLegendre};

const RAY_RULE_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct GreenOperator {
    grid: Grid,
    /// Row-major `n × n` kernel values `K_ij`.
    kernel: Vec<f64>,
    backend: Backend,
    params: Option<ProblemParams>,
}

impl GreenOperator {
    pub(crate) fn from_parts(
        grid: Grid,
        kernel: Vec<f64>,
        backend: Backend,
        params: Option<ProblemParams>,
    ) -> Self {
        debug_assert_eq!(kernel.len(), grid.len() * grid.len());
        GreenOperator { grid, kernel, backend, params }
    }

    /// Operator from explicit quadrature-weighted entries `A_ij` (row-major),
    /// so that `apply(v)_i = Σ_j A_ij v_j`.
    pub fn from_matrix(grid: Grid, a: &[f64]) -> Result<Self> {
        let n = grid.len();
        if a.len() != n * n {
            return Err(invalid!("matrix has {} entries, grid needs {}", a.len(), n * n));
        }
        if a.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid!("matrix entries must be finite and nonnegative"));
        }
        let w = grid.weights();
        let kernel = a.iter().enumerate().map(|(k, v)| v / w[k % n]).collect();
        Ok(GreenOperator { grid, kernel, backend: Backend::Custom, params: None })
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn params(&self) -> Option<&ProblemParams> {
        self.params.as_ref()
    }

    /// Discrete kernel value `K_ij ≈ G(x_i, x_j)` (cell-averaged).
    #[inline]
    pub fn kernel_entry(&self, i: usize, j: usize) -> f64 {
        self.kernel[i * self.len() + j]
    }

    /// Matrix entry `A_ij = K_ij w_j ≈ ∫_{cell_j} G(x_i, y) dy`.
    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.kernel_entry(i, j) * self.grid.weights()[j]
    }

    /// `max |K_ij - K_ji| / max |K|`.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.len();
        let scale = self.kernel.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..i {
                worst = worst.max((self.kernel_entry(i, j) - self.kernel_entry(j, i)).abs());
            }
        }
        worst / scale
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.len()];
        self.apply_into(v, &mut out)?;
        Ok(out)
    }

    pub fn apply_into(&self, v: &[f64], out: &mut [f64]) -> Result<()> {
        let n = self.len();
        if v.len() != n || out.len() != n {
            return Err(invalid!("vector length {} does not match operator size {n}", v.len()));
        }
        let wv: Vec<f64> = v.iter().zip(self.grid.weights()).map(|(a, w)| a * w).collect();
        let kernel = &self.kernel;
        for_each_row(out, 1, |i, o| {
            let row = &kernel[i * n..(i + 1) * n];
            o[0] = row.iter().zip(&wv).map(|(k, x)| k * x).sum();
        });
        Ok(())
    }
}

#[cfg(feature = "parallel")]
fn for_each_row<F>(data: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    use rayon::prelude::*;
    data.par_chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
}

#[cfg(not(feature = "parallel"))]
fn for_each_row<F>(data: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]),
{
    data.chunks_mut(width).enumerate().for_each(|(i, row)| f(i, row));
}

/// Discretize the Green operator of `kernel` on `grid`.
pub fn assemble(kernel: &GreenKernel, grid: &Grid) -> Result<GreenOperator> {
    match kernel {
        GreenKernel::SyntheticK5(k) => Ok(assemble_synthetic(k, grid)),
        GreenKernel::SpectralMt { params } => {
            let mut op = spectral_mt_operator(params.s, grid)?;
            op.params = Some(*params);
            Ok(op)
        }
    }
}

fn assemble_synthetic(k: &SyntheticK5, grid: &Grid) -> GreenOperator {
    let n = grid.len();
    let a = 2.0 * k.params().s;
    let w = grid.weights();
    let mut kernel = vec![0.0; n * n];
    for_each_row(&mut kernel, n, |i, row| {
        row_integrals(k, grid, i, a, 1.0, row);
        for (v, wj) in row.iter_mut().zip(w) {
            *v /= wj;
        }
    });
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (kernel[i * n + j] + kernel[j * n + i]);
            kernel[i * n + j] = v;
            kernel[j * n + i] = v;
        }
    }
    GreenOperator::from_parts(grid.clone(), kernel, Backend::SyntheticK5, Some(*k.params()))
}

/// `out[j] = ∫_{cell_j} |x_i - y|^(a-1) dy · mf(x_i, x_j)^q` off the diagonal,
/// and the exact cell integral of `|x_i - y|^(a-1) mf(x_i, y)^q` on it.
fn row_integrals(k: &SyntheticK5, grid: &Grid, i: usize, a: f64, q: f64, out: &mut [f64]) {
    let node = grid.anchored_node(i);
    let bounds = grid.anchored_bounds();
    let delta = grid.delta();
    let w = grid.weights();
    // |x_i - b|^a for every cell boundary b
    let dpow: Vec<f64> = bounds.iter().map(|&b| node.dist(b).powf(a)).collect();
    for j in 0..out.len() {
        if j == i {
            continue;
        }
        let (d0, d1) = (node.dist(bounds[j]), node.dist(bounds[j + 1]));
        let (near, near_pow) = if d0 < d1 { (d0, dpow[j]) } else { (d1, dpow[j + 1]) };
        // ∫_near^(near+w) ρ^(a-1) dρ without cancellation for thin, far cells
        let cell = near_pow * (a * (w[j] / near).ln_1p()).exp_m1() / a;
        let mut mf = k.min_factors(grid.separation(i, j), delta[i], delta[j]);
        if q != 1.0 {
            mf = mf.powf(q);
        }
        out[j] = cell * mf;
    }
    out[i] = if w[i] < delta[i] {
        (dpow[i] + dpow[i + 1]) / a
    } else {
        diagonal_cell(k, grid, i, a, q)
    };
}

/// Diagonal cell integral along the two rays from `x_i` to the cell ends.
fn diagonal_cell(k: &SyntheticK5, grid: &Grid, i: usize, a: f64, q: f64) -> f64 {
    let rule = GaussLegendre::new(RAY_RULE_POINTS);
    let node = grid.anchored_node(i);
    let bounds = grid.anchored_bounds();
    let (toward, away) = match node.side {
        Side::Left => (bounds[i], bounds[i + 1]),
        Side::Right => (bounds[i + 1], bounds[i]),
    };
    let d = node.delta;
    let g = k.params().gamma;
    let factor = |dd: f64, rho: f64| if dd >= rho { 1.0 } else { (dd / rho).powf(g) };
    let integrand = |rho: f64, dy: f64| {
        let mf = factor(d, rho) * factor(dy, rho);
        if q == 1.0 {
            mf
        } else {
            mf.powf(q)
        }
    };
    // δ(y)^γ is not smooth where the toward ray meets the boundary at ρ = δ;
    // refine geometrically into that end point
    let mut toward_kinks: Vec<f64> = (1..48).map(|k| d * (1.0 - 0.5f64.powi(k))).collect();
    toward_kinks.push(d);
    let near = ray_integral(&rule, a, node.dist(toward), &toward_kinks, |rho| {
        integrand(rho, (d - rho).max(0.0))
    });
    let far = ray_integral(&rule, a, node.dist(away), &[d, 0.5 - d, 0.5 * (1.0 - d)], |rho| {
        integrand(rho, (d + rho).min(1.0 - d - rho).max(0.0))
    });
    near + far
}

fn check_q(s: f64, dim: usize, q: f64) -> Result<()> {
    let n = dim as f64;
    let upper = if n > 2.0 * s { n / (n - 2.0 * s) } else { f64::INFINITY };
    if !(q > 0.0 && q < upper) {
        return Err(invalid!("q = {q} must lie in (0, {upper}); the Green function is not in L^q otherwise"));
    }
    Ok(())
}

fn synthetic_only(kernel: &GreenKernel) -> Result<&SyntheticK5> {
    match kernel {
        GreenKernel::SyntheticK5(k) => Ok(k),
        _ => Err(invalid!("q-norms are computed for the synthetic kernel only")),
    }
}

/// `(∫ G(x, x_node)^q dx)^(1/q)` for the synthetic kernel.
pub fn green_q_norm(kernel: &GreenKernel, grid: &Grid, node: usize, q: f64) -> Result<f64> {
    let k = synthetic_only(kernel)?;
    check_q(k.params().s, k.params().dim, q)?;
    if node >= grid.len() {
        return Err(invalid!("node index {node} out of range"));
    }
    let mut row = vec![0.0; grid.len()];
    row_integrals(k, grid, node, q * (2.0 * k.params().s - 1.0) + 1.0, q, &mut row);
    Ok(row.iter().sum::<f64>().powf(1.0 / q))
}

/// [`green_q_norm`] at every node.
pub fn green_q_norms(kernel: &GreenKernel, grid: &Grid, q: f64) -> Result<Vec<f64>> {
    let k = synthetic_only(kernel)?;
    check_q(k.params().s, k.params().dim, q)?;
    let b = q * (2.0 * k.params().s - 1.0) + 1.0;
    let n = grid.len();
    let mut norms = vec![0.0; n];
    for_each_row(&mut norms, 1, |i, o| {
        let mut row = vec![0.0; n];
        row_integrals(k, grid, i, b, q, &mut row);
        o[0] = row.iter().sum::<f64>().powf(1.0 / q);
    });
    Ok(norms)
}

/// Upper bound `N ω_N diam^(N - q(N-2s)) / (N - q(N-2s))` on
/// `sup_x ∫ G(x, y)^q dy` for kernels with `G ≤ |x-y|^(2s-N)`.
pub fn green_q_norm_bound(dim: usize, s: f64, q: f64, diam: f64) -> Result<f64> {
    check_q(s, dim, q)?;
    let n = dim as f64;
    let omega = core::f64::consts::PI.powf(0.5 * n) / libm::tgamma(0.5 * n + 1.0);
    let e = n - q * (n - 2.0 * s);
    Ok(n * omega * diam.powf(e) / e)
}
