//! Weak-dual semilinear problem `u = G[f(u)]` by bracketed monotone Picard
//! iteration.
//!
//! For increasing `f` the map `T(u) = A f(u)` is order preserving, so the
//! iterates from a supersolution decrease and those from a subsolution
//! increase. Both sequences are run and must meet.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::exponents::{ExponentPrediction, Regime};
use crate::grid::Grid;
use crate::operator::GreenOperator;
use crate::spectral::leading_eigenpairs;

/// Pointwise slack allowed in order checks: `1e-12` relative.
const ORDER_SLACK: f64 = 1e-12;

/// Scalar nonlinearity `f` with `f(0) = 0`, nondecreasing on `[0, ∞)`.
pub trait Nonlinearity: Sync {
    fn eval(&self, u: f64) -> f64;
}

/// `f(u) = u^p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Power(pub f64);

impl Nonlinearity for Power {
    #[inline]
    fn eval(&self, u: f64) -> f64 {
        u.powf(self.0)
    }
}

impl<F: Fn(f64) -> f64 + Sync> Nonlinearity for F {
    fn eval(&self, u: f64) -> f64 {
        self(u)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Bracket {
    Auto,
    Explicit { lower: Vec<f64>, upper: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub p: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub bracket: Bracket,
}

impl SolverConfig {
    pub fn new(p: f64) -> Self {
        SolverConfig { p, tol: 1e-10, max_iter: 10_000, bracket: Bracket::Auto }
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 1.0 {
            return Err(Error::RoutedToEigenproblem);
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(invalid!("p = {} must lie in (0, 1)", self.p));
        }
        if !(self.tol > 0.0) {
            return Err(invalid!("tolerance must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return Err(invalid!("max_iter must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SemilinearSolution {
    /// Midpoint of the final bracket.
    pub u: Vec<f64>,
    /// `sup |u - T(u)| / sup u`.
    pub residual: f64,
    pub iterations: usize,
    /// `sup (u_hi - u_lo) / sup u_hi`.
    pub bracket_gap: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Largest relative step against the expected order seen in any
    /// iteration (upper iterates increasing, lower decreasing, or crossing).
    pub max_order_violation: f64,
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// `T(u) = A f(u)`.
pub fn nonlinear_map<F: Nonlinearity + ?Sized>(op: &GreenOperator, f: &F, u: &[f64]) -> Result<Vec<f64>> {
    if u.len() != op.len() {
        return Err(invalid!("vector length {} does not match operator size {}", u.len(), op.len()));
    }
    if u.iter().any(|&v| !(v >= 0.0)) {
        return Err(invalid!("the Picard map needs u >= 0"));
    }
    let fu: Vec<f64> = u.iter().map(|&v| f.eval(v)).collect();
    op.apply(&fu)
}

/// `T(u) = A u^p`.
pub fn picard_map(op: &GreenOperator, p: f64, u: &[f64]) -> Result<Vec<f64>> {
    nonlinear_map(op, &Power(p), u)
}

/// `u = A f` for `f ≥ 0`.
pub fn solve_linear(op: &GreenOperator, f: &[f64]) -> Result<Vec<f64>> {
    if f.iter().any(|&v| !(v >= 0.0)) {
        return Err(invalid!("the linear problem needs a nonnegative right-hand side"));
    }
    op.apply(f)
}

/// Sub- and supersolution of `u = A u^p`.
///
/// The supersolution is the constant `c* = (sup A1)^(1/(1-p))`. The
/// subsolution is `ε Φ̂_1` with `Φ̂_1` the Perron vector and
/// `ε = r^(1/(1-p))`, `r = min_i (A Φ̂_1^p)_i / Φ̂_1(x_i)`.
pub fn auto_bracket(op: &GreenOperator, p: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    SolverConfig::new(p).validate()?;
    let n = op.len();
    let exponent = 1.0 / (1.0 - p);
    let g = sup(&op.apply(&vec![1.0; n])?);
    let upper = vec![g.powf(exponent); n];

    let phi = leading_eigenpairs(op, 1, 1e-9, 100_000)?.remove(0).phi;
    if phi.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::BracketFailure("Perron vector is not strictly positive".into()));
    }
    let a_phi = picard_map(op, p, &phi)?;
    let r = a_phi.iter().zip(&phi).map(|(a, b)| a / b).fold(f64::INFINITY, f64::min);
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::BracketFailure(format!("min A(phi^p)/phi = {r} is not positive")));
    }
    let eps = r.powf(exponent);
    let lower: Vec<f64> = phi.iter().map(|v| eps * v).collect();
    check_bracket(op, &Power(p), &lower, &upper)?;
    Ok((lower, upper))
}

fn check_bracket<F: Nonlinearity + ?Sized>(op: &GreenOperator, f: &F, lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.len() != op.len() || upper.len() != op.len() {
        return Err(invalid!("bracket length does not match operator size {}", op.len()));
    }
    let t_lo = nonlinear_map(op, f, lower)?;
    let t_hi = nonlinear_map(op, f, upper)?;
    for i in 0..op.len() {
        if lower[i] > upper[i] * (1.0 + ORDER_SLACK) {
            return Err(Error::BracketFailure(format!("lower exceeds upper at node {i}")));
        }
        if t_hi[i] > upper[i] * (1.0 + ORDER_SLACK) {
            return Err(Error::BracketFailure(format!("upper is not a supersolution at node {i}")));
        }
        if t_lo[i] < lower[i] * (1.0 - ORDER_SLACK) {
            return Err(Error::BracketFailure(format!("lower is not a subsolution at node {i}")));
        }
    }
    Ok(())
}

/// Solve `u = A u^p`.
pub fn picard_solve(op: &GreenOperator, config: &SolverConfig) -> Result<SemilinearSolution> {
    config.validate()?;
    let (lower, upper) = match &config.bracket {
        Bracket::Auto => auto_bracket(op, config.p)?,
        Bracket::Explicit { lower, upper } => (lower.clone(), upper.clone()),
    };
    solve_bracketed(op, &Power(config.p), lower, upper, config.tol, config.max_iter)
}

/// Solve `u = A f(u)` from a caller-supplied bracket; for nonlinearities
/// other than a pure power no bracket is constructed automatically.
pub fn picard_solve_with<F: Nonlinearity + ?Sized>(
    op: &GreenOperator,
    f: &F,
    lower: Vec<f64>,
    upper: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<SemilinearSolution> {
    if !(tol > 0.0) || max_iter == 0 {
        return Err(invalid!("tolerance and max_iter must be positive"));
    }
    solve_bracketed(op, f, lower, upper, tol, max_iter)
}

fn solve_bracketed<F: Nonlinearity + ?Sized>(
    op: &GreenOperator,
    f: &F,
    mut lower: Vec<f64>,
    mut upper: Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<SemilinearSolution> {
    check_bracket(op, f, &lower, &upper)?;
    let mut max_violation = 0.0f64;
    let mut last_increment = f64::INFINITY;
    for iteration in 1..=max_iter {
        let next_hi = nonlinear_map(op, f, &upper)?;
        let next_lo = nonlinear_map(op, f, &lower)?;
        for i in 0..op.len() {
            let rises = (next_hi[i] - upper[i]) / upper[i].max(f64::MIN_POSITIVE);
            let falls = (lower[i] - next_lo[i]) / lower[i].max(f64::MIN_POSITIVE);
            let crosses = (next_lo[i] - next_hi[i]) / next_hi[i].max(f64::MIN_POSITIVE);
            max_violation = max_violation.max(rises).max(falls).max(crosses);
        }
        if max_violation > ORDER_SLACK {
            return Err(Error::Internal(format!(
                "monotone iteration lost its order (relative violation {max_violation:e}) at iteration {iteration}"
            )));
        }
        let inc_hi = sup_diff(&next_hi, &upper) / sup(&next_hi);
        let inc_lo = sup_diff(&next_lo, &lower) / sup(&next_lo);
        upper = next_hi;
        lower = next_lo;
        last_increment = inc_hi.max(inc_lo);
        if inc_hi < tol && inc_lo < tol {
            let u: Vec<f64> = upper.iter().zip(&lower).map(|(a, b)| 0.5 * (a + b)).collect();
            let tu = nonlinear_map(op, f, &u)?;
            let residual = sup_diff(&u, &tu) / sup(&u);
            if residual <= tol {
                let bracket_gap = sup_diff(&upper, &lower) / sup(&upper);
                return Ok(SemilinearSolution {
                    u,
                    residual,
                    iterations: iteration,
                    bracket_gap,
                    lower,
                    upper,
                    max_order_violation: max_violation.max(0.0),
                });
            }
        }
    }
    Err(Error::ConvergenceFailure { iterations: max_iter, residual: last_increment })
}

/// Region used by [`harnack_report_in`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnackWindow {
    /// Global ratio over nodes with `δ < delta_max`.
    pub delta_max: f64,
    /// Local ratio over the ball `B_radius(center)`.
    pub center: f64,
    pub radius: f64,
}

impl Default for HarnackWindow {
    fn default() -> Self {
        HarnackWindow { delta_max: 0.1, center: 0.5, radius: 0.1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarnackReport {
    /// `sup u / inf u` over the interior ball.
    pub local_ratio: f64,
    /// `(sup u/w) / (inf u/w)` near the boundary, `w` the predicted profile.
    pub global_ratio: f64,
    pub sup_u_over_w: f64,
    pub inf_u_over_w: f64,
    pub n_local: usize,
    pub n_global: usize,
}

/// Predicted boundary profile: `δ^μ`, or `δ^γ (1 + |log δ|^(1/(1-p)))` in
/// the critical regime.
pub fn boundary_profile(delta: f64, prediction: &ExponentPrediction) -> f64 {
    let base = delta.powf(prediction.mu);
    match (prediction.regime, prediction.log_exponent) {
        (Regime::Critical, Some(l)) => base * (1.0 + delta.ln().abs().powf(l)),
        _ => base,
    }
}

pub fn harnack_report(u: &[f64], grid: &Grid, prediction: &ExponentPrediction) -> Result<HarnackReport> {
    harnack_report_in(u, grid, prediction, HarnackWindow::default())
}

pub fn harnack_report_in(
    u: &[f64],
    grid: &Grid,
    prediction: &ExponentPrediction,
    window: HarnackWindow,
) -> Result<HarnackReport> {
    if u.len() != grid.len() {
        return Err(invalid!("u has {} values, grid has {} nodes", u.len(), grid.len()));
    }
    let center_delta = window.center.min(1.0 - window.center);
    if !(window.radius > 0.0 && window.radius <= 0.5 * center_delta) {
        return Err(invalid!("ball radius must lie in (0, dist(center, boundary)/2]"));
    }
    let (mut sup_w, mut inf_w, mut n_global) = (0.0f64, f64::INFINITY, 0);
    let (mut sup_l, mut inf_l, mut n_local) = (0.0f64, f64::INFINITY, 0);
    for ((&ui, &d), &x) in u.iter().zip(grid.delta()).zip(grid.nodes()) {
        if d < window.delta_max {
            let r = ui / boundary_profile(d, prediction);
            sup_w = sup_w.max(r);
            inf_w = inf_w.min(r);
            n_global += 1;
        }
        if (x - window.center).abs() <= window.radius {
            sup_l = sup_l.max(ui);
            inf_l = inf_l.min(ui);
            n_local += 1;
        }
    }
    if n_global == 0 || n_local == 0 {
        return Err(Error::InsufficientWindow { found: n_global.min(n_local), required: 1 });
    }
    Ok(HarnackReport {
        local_ratio: sup_l / inf_l,
        global_ratio: sup_w / inf_w,
        sup_u_over_w: sup_w,
        inf_u_over_w: inf_w,
        n_local,
        n_global,
    })
}
