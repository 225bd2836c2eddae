//! Green-kernel backends and an empirical checker of their two-sided bounds.
//!
//! Two backends are provided:
//!
//! * [`SyntheticK5`] takes the two-sided envelope
//!   `|x-y|^(2s-N) (φ(x)/|x-y|^γ ∧ 1)(φ(y)/|x-y|^γ ∧ 1)`, `φ = δ^γ`, as the
//!   kernel itself. Any pair `(s, γ)` can be probed with it.
//! * The matrix-transfer spectral operator ([`spectral_mt_operator`]): the
//!   `-s` power of the second-difference Dirichlet Laplacian on a uniform
//!   cell-centred grid. It has no pointwise kernel; its node-pair values are
//!   probed through the assembled [`GreenOperator`].

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::operator::GreenOperator;

/// Seed used by [`check_kernel_bounds`] callers that do not supply one.
pub const DEFAULT_SEED: u64 = 0x005e_ed0f_9e3e;

/// The parameter tuple `(N, s, γ, p)`; `m = 1/p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub dim: usize,
    pub s: f64,
    pub gamma: f64,
    pub p: f64,
}

impl ProblemParams {
    pub fn new(dim: usize, s: f64, gamma: f64, p: f64) -> Result<Self> {
        let params = ProblemParams { dim, s, gamma, p };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(invalid!("dimension must be positive"));
        }
        if !(self.s > 0.0 && self.s <= 1.0) {
            return Err(invalid!("s = {} must lie in (0, 1]", self.s));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(invalid!("gamma = {} must lie in (0, 1]", self.gamma));
        }
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(invalid!("p = {} must lie in (0, 1]", self.p));
        }
        Ok(())
    }

    pub fn m(&self) -> f64 {
        1.0 / self.p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Backend {
    SyntheticK5,
    SpectralMt,
    /// A user-supplied kernel matrix.
    Custom,
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::SyntheticK5 => "synthetic-k5",
            Backend::SpectralMt => "spectral-mt",
            Backend::Custom => "custom",
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// The envelope kernel with unit constants, on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticK5 {
    params: ProblemParams,
}

impl SyntheticK5 {
    /// Requires `N = 1` and `s < 1/2` so the diagonal singularity is
    /// integrable.
    pub fn new(params: ProblemParams) -> Result<Self> {
        params.validate()?;
        if params.dim != 1 {
            return Err(invalid!("the synthetic kernel is computed in dimension 1 only"));
        }
        if params.s >= 0.5 {
            return Err(invalid!("the synthetic kernel needs s < 1/2 in dimension 1, got {}", params.s));
        }
        Ok(SyntheticK5 { params })
    }

    pub fn params(&self) -> &ProblemParams {
        &self.params
    }

    /// Kernel from the separation `r > 0` and the two boundary distances.
    #[inline]
    pub(crate) fn value_at(&self, r: f64, dx: f64, dy: f64) -> f64 {
        r.powf(2.0 * self.params.s - 1.0) * self.min_factors(r, dx, dy)
    }

    /// `(δ(x)^γ/r^γ ∧ 1)(δ(y)^γ/r^γ ∧ 1)`.
    #[inline]
    pub(crate) fn min_factors(&self, r: f64, dx: f64, dy: f64) -> f64 {
        let g = self.params.gamma;
        let f = |d: f64| {
            if d >= r {
                1.0
            } else if g == 1.0 {
                d / r
            } else {
                (d / r).powf(g)
            }
        };
        f(dx) * f(dy)
    }

    /// Pointwise value `G(x, y)` for `x ≠ y` in `(0, 1)`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !(x > 0.0 && x < 1.0 && y > 0.0 && y < 1.0) {
            return Err(invalid!("kernel arguments must lie in (0, 1), got ({x}, {y})"));
        }
        if x == y {
            return Err(Error::DiagonalSingularity(x));
        }
        Ok(self.value_at((x - y).abs(), x.min(1.0 - x), y.min(1.0 - y)))
    }
}

/// A Green kernel together with its backend tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GreenKernel {
    SyntheticK5(SyntheticK5),
    SpectralMt { params: ProblemParams },
}

impl GreenKernel {
    pub fn synthetic(params: ProblemParams) -> Result<Self> {
        SyntheticK5::new(params).map(GreenKernel::SyntheticK5)
    }

    /// Spectral backend; its boundary exponent is `γ = 1`, which overrides
    /// the value carried in `params`.
    pub fn spectral(params: ProblemParams) -> Result<Self> {
        let params = ProblemParams { gamma: 1.0, ..params };
        params.validate()?;
        if params.dim != 1 {
            return Err(invalid!("the spectral backend is computed in dimension 1 only"));
        }
        Ok(GreenKernel::SpectralMt { params })
    }

    pub fn backend(&self) -> Backend {
        match self {
            GreenKernel::SyntheticK5(_) => Backend::SyntheticK5,
            GreenKernel::SpectralMt { .. } => Backend::SpectralMt,
        }
    }

    pub fn params(&self) -> &ProblemParams {
        match self {
            GreenKernel::SyntheticK5(k) => k.params(),
            GreenKernel::SpectralMt { params } => params,
        }
    }

    /// Exponent `2s - N` of the diagonal singularity.
    pub fn singular_exponent(&self) -> f64 {
        let p = self.params();
        2.0 * p.s - p.dim as f64
    }

    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            GreenKernel::SyntheticK5(k) => k.eval(x, y),
            GreenKernel::SpectralMt { .. } => {
                Err(invalid!("the spectral backend has no pointwise kernel; assemble it on a grid"))
            }
        }
    }
}

/// Matrix-transfer realisation of the spectral fractional operator on a
/// uniform cell-centred grid: `A = (-Δ_h)^(-s)` where `-Δ_h` is the
/// second-difference Laplacian with antisymmetric ghost values at both ends.
/// Its eigenvectors are the sampled sine modes `sin(kπx_i)` and its
/// eigenvalues `λ_k(h)^(-s)` with `λ_k(h) = (4/h²) sin²(kπh/2)`.
///
/// Uses `sin a sin b = (cos(a-b) - cos(a+b))/2`, so every entry is a
/// difference of two values of one cosine sum and assembly costs `O(n²)`.
pub fn spectral_mt_operator(s: f64, grid: &Grid) -> Result<GreenOperator> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(invalid!("s = {s} must lie in (0, 1]"));
    }
    if !grid.is_uniform() {
        return Err(invalid!("the matrix-transfer operator needs a uniform grid"));
    }
    let n = grid.len();
    let nf = n as f64;
    let two_n = 2 * n;
    let cos_table: Vec<f64> = (0..two_n).map(|j| (PI * j as f64 / nf).cos()).collect();
    let coeff: Vec<f64> = (1..=n)
        .map(|k| {
            let lambda = 4.0 * nf * nf * (k as f64 * PI / (2.0 * nf)).sin().powi(2);
            let alpha = if k == n { 0.5 / nf } else { 1.0 / nf };
            alpha * lambda.powf(-s)
        })
        .collect();
    let c: Vec<f64> = (0..two_n)
        .map(|m| {
            coeff
                .iter()
                .enumerate()
                .map(|(idx, a)| a * cos_table[((idx + 1) * m) % two_n])
                .sum()
        })
        .collect();
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let a_ij = c[i.abs_diff(j)] - c[i + j + 1];
            // A = K W with W = h I
            kernel[i * n + j] = a_ij * nf;
        }
    }
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (kernel[i * n + j] + kernel[j * n + i]);
            kernel[i * n + j] = v;
            kernel[j * n + i] = v;
        }
    }
    let params = ProblemParams { dim: 1, s, gamma: 1.0, p: 1.0 };
    Ok(GreenOperator::from_parts(grid.clone(), kernel, Backend::SpectralMt, Some(params)))
}

/// One sampled kernel value together with its geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSample {
    pub separation: f64,
    pub delta_x: f64,
    pub delta_y: f64,
    pub value: f64,
    /// `G(y, x)`, for symmetry checks.
    pub swapped: f64,
}

/// Anything whose Green-kernel values can be sampled at random pairs.
pub trait KernelProbe {
    fn dim(&self) -> usize;
    fn s(&self) -> f64;
    fn gamma(&self) -> f64;
    /// Lower constant `c0` of the kernel bound `G(x,y) ≥ c0 φ(x) φ(y)` the
    /// backend is built to satisfy, if any.
    fn nominal_lower_constant(&self) -> Option<f64> {
        None
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> KernelSample;
}

impl KernelProbe for SyntheticK5 {
    fn dim(&self) -> usize {
        self.params.dim
    }
    fn s(&self) -> f64 {
        self.params.s
    }
    fn gamma(&self) -> f64 {
        self.params.gamma
    }
    fn nominal_lower_constant(&self) -> Option<f64> {
        Some(1.0)
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> KernelSample {
        loop {
            let x: f64 = rng.gen();
            let y: f64 = rng.gen();
            if x == 0.0 || y == 0.0 || x == y {
                continue;
            }
            let value = self.eval(x, y).expect("sampled pair is off-diagonal and interior");
            let swapped = self.eval(y, x).expect("sampled pair is off-diagonal and interior");
            return KernelSample {
                separation: (x - y).abs(),
                delta_x: x.min(1.0 - x),
                delta_y: y.min(1.0 - y),
                value,
                swapped,
            };
        }
    }
}

/// Samples node pairs `i ≠ j` of the assembled kernel matrix.
impl KernelProbe for GreenOperator {
    fn dim(&self) -> usize {
        1
    }
    fn s(&self) -> f64 {
        self.params().map_or(f64::NAN, |p| p.s)
    }
    fn gamma(&self) -> f64 {
        self.params().map_or(f64::NAN, |p| p.gamma)
    }
    fn nominal_lower_constant(&self) -> Option<f64> {
        match self.backend() {
            Backend::SyntheticK5 => Some(1.0),
            _ => None,
        }
    }
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> KernelSample {
        let n = self.len();
        assert!(n >= 2, "cannot sample node pairs from a single-node operator");
        loop {
            let i = rng.gen_range(0..n);
            let j = rng.gen_range(0..n);
            if i == j {
                continue;
            }
            let delta = self.grid().delta();
            return KernelSample {
                separation: self.grid().separation(i, j),
                delta_x: delta[i],
                delta_y: delta[j],
                value: self.kernel_entry(i, j),
                swapped: self.kernel_entry(j, i),
            };
        }
    }
}

/// Empirical constants of the two-sided kernel bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelBoundReport {
    /// `min G(x,y) / (φ(x) φ(y))`.
    pub c0_hat: f64,
    /// `max G(x,y) |x-y|^(N-2s) / [(φ(x)/|x-y|^γ ∧ 1)(φ(y)/|x-y|^γ ∧ 1)]`.
    pub c1_hat: f64,
    /// Samples where the lower bound fails: a non-finite or non-positive
    /// ratio, or a ratio below the backend's nominal lower constant.
    pub violations: usize,
    /// `max |G(x,y) - G(y,x)| / G(x,y)`.
    pub max_asymmetry: f64,
    pub n_samples: usize,
}

pub fn check_kernel_bounds<P: KernelProbe>(
    probe: &P,
    n_samples: usize,
    seed: u64,
) -> Result<KernelBoundReport> {
    if n_samples < 100 {
        return Err(invalid!("at least 100 samples are required, got {n_samples}"));
    }
    let (dim, s, gamma) = (probe.dim() as f64, probe.s(), probe.gamma());
    if !(s.is_finite() && gamma.is_finite()) {
        return Err(invalid!("probe carries no (s, gamma) parameters"));
    }
    let nominal = probe.nominal_lower_constant();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = KernelBoundReport {
        c0_hat: f64::INFINITY,
        c1_hat: 0.0,
        violations: 0,
        max_asymmetry: 0.0,
        n_samples,
    };
    for _ in 0..n_samples {
        let k = probe.sample(&mut rng);
        let r = k.separation;
        let (phi_x, phi_y) = (k.delta_x.powf(gamma), k.delta_y.powf(gamma));
        let rg = r.powf(gamma);
        let envelope = (phi_x / rg).min(1.0) * (phi_y / rg).min(1.0);
        let upper = k.value * r.powf(dim - 2.0 * s) / envelope;
        let lower = k.value / (phi_x * phi_y);
        report.c1_hat = report.c1_hat.max(upper);
        report.c0_hat = report.c0_hat.min(lower);
        let below_nominal = nominal.is_some_and(|c| lower < c * (1.0 - 1e-12));
        if !lower.is_finite() || lower <= 0.0 || below_nominal {
            report.violations += 1;
        }
        if k.value != 0.0 {
            report.max_asymmetry = report.max_asymmetry.max((k.value - k.swapped).abs() / k.value.abs());
        }
    }
    Ok(report)
}
