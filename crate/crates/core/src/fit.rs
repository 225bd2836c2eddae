//! Boundary exponent regression on both halves of the mesh.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{invalid, Error, Result};
use crate::exponents::{BqClassification, BqRegime, ExponentPrediction, Regime};
use crate::grid::Grid;

/// Nodes entering a fit: `δ_min ≤ δ ≤ δ_max`, skipping the `skip` nodes
/// nearest each endpoint and keeping at most `per_side` nodes per side after
/// that. Both sides are pooled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitWindow {
    pub delta_min: Option<f64>,
    pub delta_max: f64,
    pub skip: usize,
    pub per_side: Option<usize>,
    pub min_points: usize,
}

impl Default for FitWindow {
    /// Skip 5 nodes, then at most 50 nodes per side with `δ ≤ 0.05`.
    ///
    /// On strongly graded meshes the band `δ ≤ 0.05` holds hundreds of nodes
    /// spanning many decades, and its upper part is still far from the
    /// asymptotic regime; the node cap keeps the fit close to the boundary.
    fn default() -> Self {
        FitWindow { delta_min: None, delta_max: 0.05, skip: 5, per_side: Some(50), min_points: 10 }
    }
}

impl FitWindow {
    /// Window by distance only.
    pub fn by_distance(delta_min: f64, delta_max: f64) -> Self {
        FitWindow { delta_min: Some(delta_min), delta_max, skip: 0, per_side: None, min_points: 10 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta_max > 0.0 && self.delta_max <= 0.25) {
            return Err(invalid!("delta_max = {} must lie in (0, 0.25]", self.delta_max));
        }
        if let Some(d) = self.delta_min {
            if !(d > 0.0 && d < self.delta_max) {
                return Err(invalid!("delta_min = {d} must lie in (0, delta_max)"));
            }
        }
        if self.min_points < 2 {
            return Err(invalid!("a fit needs at least two points"));
        }
        Ok(())
    }

    /// Node indices in the window.
    pub fn select(&self, grid: &Grid) -> Result<Vec<usize>> {
        self.validate()?;
        let idx: Vec<usize> = (0..grid.len())
            .filter(|&i| {
                let d = grid.delta()[i];
                let rank = grid.boundary_rank(i);
                rank >= self.skip
                    && self.per_side.is_none_or(|m| rank < self.skip + m)
                    && d <= self.delta_max
                    && self.delta_min.is_none_or(|lo| d >= lo)
            })
            .collect();
        if idx.len() < self.min_points {
            return Err(Error::InsufficientWindow { found: idx.len(), required: self.min_points });
        }
        Ok(idx)
    }
}

/// Additional output of [`fit_log_correction`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogCorrection {
    /// Slope of `log(u/δ^γ)` against `log|log δ|` (pure power form).
    pub log_exponent_hat: f64,
    pub r2_pure: f64,
    /// Best `ℓ` in `log u = c + γ log δ + log(1 + |log δ|^ℓ)` (additive form).
    pub additive_log_exponent_hat: f64,
    pub r2_additive: f64,
    /// Joint regression `log u = c + μ log δ + ℓ log|log δ|`.
    pub joint_exponent_hat: f64,
    pub joint_log_exponent_hat: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    /// Leading power of `δ`.
    pub exponent_hat: f64,
    pub intercept: f64,
    pub r2: f64,
    pub n_points: usize,
    pub delta_min: f64,
    pub delta_max: f64,
    pub log_correction: Option<LogCorrection>,
}

impl FitResult {
    pub fn log_exponent_hat(&self) -> Option<f64> {
        self.log_correction.map(|l| l.log_exponent_hat)
    }
}

struct Line {
    slope: f64,
    intercept: f64,
    r2: f64,
}

fn r2_from(ss_res: f64, ss_tot: f64) -> f64 {
    if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn least_squares(x: &[f64], y: &[f64]) -> Line {
    let (mx, my) = (mean(x), mean(y));
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss_res: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Line { slope, intercept, r2: r2_from(ss_res, syy) }
}

/// Two-regressor least squares `y = c + a x1 + b x2`; returns `(a, b)`.
fn least_squares2(x1: &[f64], x2: &[f64], y: &[f64]) -> (f64, f64) {
    let (m1, m2, my) = (mean(x1), mean(x2), mean(y));
    let (mut s11, mut s12, mut s22, mut s1y, mut s2y) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..y.len() {
        let (a, b, c) = (x1[i] - m1, x2[i] - m2, y[i] - my);
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        s1y += a * c;
        s2y += b * c;
    }
    let det = s11 * s22 - s12 * s12;
    if det.abs() <= 1e-14 * s11 * s22 {
        return (f64::NAN, f64::NAN);
    }
    ((s22 * s1y - s12 * s2y) / det, (s11 * s2y - s12 * s1y) / det)
}

fn window_logs(u: &[f64], grid: &Grid, window: &FitWindow) -> Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    if u.len() != grid.len() {
        return Err(invalid!("u has {} values, grid has {} nodes", u.len(), grid.len()));
    }
    let idx = window.select(grid)?;
    if let Some(&i) = idx.iter().find(|&&i| !(u[i] > 0.0) || !u[i].is_finite()) {
        return Err(Error::InvalidInput(alloc::format!("u must be positive in the fit window, u[{i}] = {}", u[i])));
    }
    let x = idx.iter().map(|&i| grid.delta()[i].ln()).collect();
    let y = idx.iter().map(|&i| u[i].ln()).collect();
    Ok((idx, x, y))
}

fn extent(idx: &[usize], grid: &Grid) -> (f64, f64) {
    idx.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &i| {
        let d = grid.delta()[i];
        (lo.min(d), hi.max(d))
    })
}

/// Least-squares slope of `log u` against `log δ`.
pub fn fit_power(u: &[f64], grid: &Grid, window: &FitWindow) -> Result<FitResult> {
    let (idx, x, y) = window_logs(u, grid, window)?;
    let line = least_squares(&x, &y);
    let (delta_min, delta_max) = extent(&idx, grid);
    Ok(FitResult {
        exponent_hat: line.slope,
        intercept: line.intercept,
        r2: line.r2,
        n_points: idx.len(),
        delta_min,
        delta_max,
        log_correction: None,
    })
}

/// Smallest `δ_min` accepted by [`fit_log_correction`].
pub const LOG_FIT_DEPTH: f64 = 1e-3;

/// Fit of `u ≈ C δ^γ |log δ|^ℓ`.
///
/// Reports the pure-power slope `ℓ` of `log(u/δ^γ)` against `log|log δ|`,
/// the additive form `C δ^γ (1 + |log δ|^ℓ)` and a joint fit of the leading
/// power and `ℓ`. The joint power is returned as `exponent_hat`.
pub fn fit_log_correction(u: &[f64], grid: &Grid, gamma: f64, window: &FitWindow) -> Result<FitResult> {
    let (idx, x, y) = window_logs(u, grid, window)?;
    let (delta_min, delta_max) = extent(&idx, grid);
    if delta_min > LOG_FIT_DEPTH {
        return Err(invalid!(
            "log-correction fits need the window to reach delta <= {LOG_FIT_DEPTH}, smallest is {delta_min:e}"
        ));
    }
    let loglog: Vec<f64> = x.iter().map(|l| l.abs().ln()).collect();
    let reduced: Vec<f64> = x.iter().zip(&y).map(|(l, v)| v - gamma * l).collect();
    let pure = least_squares(&loglog, &reduced);

    let sse_additive = |ell: f64| {
        let z: Vec<f64> = x.iter().zip(&reduced).map(|(l, r)| r - l.abs().powf(ell).ln_1p()).collect();
        let c = mean(&z);
        z.iter().map(|v| (v - c).powi(2)).sum::<f64>()
    };
    let ell_add = golden_min(sse_additive, 0.0, 8.0);
    let my = mean(&reduced);
    let ss_tot: f64 = reduced.iter().map(|v| (v - my).powi(2)).sum();
    let r2_additive = r2_from(sse_additive(ell_add), ss_tot);

    let (joint_mu, joint_ell) = least_squares2(&x, &loglog, &y);
    Ok(FitResult {
        exponent_hat: joint_mu,
        intercept: pure.intercept,
        r2: pure.r2,
        n_points: idx.len(),
        delta_min,
        delta_max,
        log_correction: Some(LogCorrection {
            log_exponent_hat: pure.slope,
            r2_pure: pure.r2,
            additive_log_exponent_hat: ell_add,
            r2_additive,
            joint_exponent_hat: joint_mu,
            joint_log_exponent_hat: joint_ell,
        }),
    })
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitComparison {
    pub mu_hat: f64,
    pub mu_pred: f64,
    pub abs_err: f64,
    /// The critical-regime log fit was used.
    pub critical: bool,
    pub fit: FitResult,
}

/// Both the power fit and the critical-regime log fit use the default window.
pub fn fit_report(u: &[f64], grid: &Grid, prediction: &ExponentPrediction) -> Result<FitComparison> {
    let window = FitWindow::default();
    fit_report_in(u, grid, prediction, &window, &window)
}

pub fn fit_report_in(
    u: &[f64],
    grid: &Grid,
    prediction: &ExponentPrediction,
    power_window: &FitWindow,
    log_window: &FitWindow,
) -> Result<FitComparison> {
    let critical = prediction.regime == Regime::Critical;
    let fit = if critical {
        fit_log_correction(u, grid, prediction.mu, log_window)?
    } else {
        fit_power(u, grid, power_window)?
    };
    Ok(FitComparison {
        mu_hat: fit.exponent_hat,
        mu_pred: prediction.mu,
        abs_err: (fit.exponent_hat - prediction.mu).abs(),
        critical,
        fit,
    })
}

/// Window for q-norm slopes: skip 3 nodes, then at most 50 per side.
pub fn q_norm_window() -> FitWindow {
    FitWindow { skip: 3, ..FitWindow::default() }
}

/// Slope of `log ‖G(·, x)‖_q` against `log δ(x)`, to be compared with
/// `γ` times the `B_q` exponent. In the log regime the norms are first
/// divided by `1 + |log Φ|^(1/q)`, `Φ = δ^γ`.
pub fn fit_q_norm_slope(
    norms: &[f64],
    grid: &Grid,
    gamma: f64,
    class: &BqClassification,
    window: &FitWindow,
) -> Result<FitResult> {
    match (class.regime, class.log_exponent) {
        (BqRegime::Log, Some(l)) => {
            if norms.len() != grid.len() {
                return Err(invalid!("{} values for {} nodes", norms.len(), grid.len()));
            }
            let scaled: Vec<f64> = norms
                .iter()
                .zip(grid.delta())
                .map(|(v, d)| v / (1.0 + (gamma * d.ln()).abs().powf(l)))
                .collect();
            fit_power(&scaled, grid, window)
        }
        _ => fit_power(norms, grid, window),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exponents::predict_mu;
    use crate::grid::graded_mesh;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sample(grid: &Grid, f: impl Fn(f64) -> f64) -> Vec<f64> {
        grid.delta().iter().map(|&d| f(d)).collect()
    }

    #[test]
    fn exact_power() {
        let grid = graded_mesh(2000, 3.0).unwrap();
        let fit = fit_power(&sample(&grid, |d| d.powf(0.7)), &grid, &FitWindow::default()).unwrap();
        assert!((fit.exponent_hat - 0.7).abs() <= 1e-10);
        assert!(fit.r2 >= 1.0 - 1e-12);
        assert_eq!(fit.n_points, 100);
    }

    #[test]
    fn perturbed_power() {
        let grid = graded_mesh(2000, 3.0).unwrap();
        let u = sample(&grid, |d| 3.0 * d.powf(0.4) * (1.0 + 0.1 * d));
        let fit = fit_power(&u, &grid, &FitWindow::default()).unwrap();
        assert!((fit.exponent_hat - 0.4).abs() <= 5e-3);
    }

    #[test]
    fn zero_in_window_is_invalid_input() {
        let grid = graded_mesh(400, 3.0).unwrap();
        let mut u = sample(&grid, |d| d);
        u[7] = 0.0;
        assert!(matches!(fit_power(&u, &grid, &FitWindow::default()), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn small_window_is_rejected() {
        let grid = graded_mesh(16, 1.0).unwrap();
        let u = sample(&grid, |d| d);
        assert!(matches!(
            fit_power(&u, &grid, &FitWindow::default()),
            Err(Error::InsufficientWindow { .. })
        ));
        let bad = FitWindow { delta_max: 0.3, ..FitWindow::default() };
        assert!(fit_power(&u, &grid, &bad).is_err());
    }

    #[test]
    fn log_correction_of_constructed_inputs() {
        let grid = graded_mesh(4000, 3.0).unwrap();
        let window = FitWindow::by_distance(1e-4, 0.05);
        let u = sample(&grid, |d| d * (1.0 + d.ln().powi(2)));
        let fit = fit_log_correction(&u, &grid, 1.0, &window).unwrap();
        let l = fit.log_correction.unwrap();
        assert!((l.log_exponent_hat - 2.0).abs() <= 0.1, "{}", l.log_exponent_hat);
        assert!((l.additive_log_exponent_hat - 2.0).abs() <= 1e-6);
        assert!(l.r2_additive >= 1.0 - 1e-12);

        let u = sample(&grid, |d| d);
        let fit = fit_log_correction(&u, &grid, 1.0, &window).unwrap();
        assert!(fit.log_exponent_hat().unwrap().abs() <= 1e-10);
        assert!((fit.exponent_hat - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn log_fit_needs_depth() {
        let grid = graded_mesh(200, 1.0).unwrap();
        let u = sample(&grid, |d| d);
        let w = FitWindow { skip: 0, per_side: None, ..FitWindow::default() };
        assert!(matches!(fit_log_correction(&u, &grid, 1.0, &w), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn report_on_exact_profile() {
        let grid = graded_mesh(1000, 3.0).unwrap();
        let pred = predict_mu(0.2, 1.0, 0.5).unwrap();
        let rep = fit_report(&sample(&grid, |d| d.powf(0.8)), &grid, &pred).unwrap();
        assert!(rep.abs_err <= 1e-10);
        assert!(!rep.critical);
        let pred = predict_mu(0.25, 1.0, 0.5).unwrap();
        let rep = fit_report(&sample(&grid, |d| d * (1.0 + d.ln().powi(2))), &grid, &pred).unwrap();
        assert!(rep.critical);
        assert!(rep.fit.log_correction.is_some());
    }

    #[test]
    fn window_robustness_for_exact_powers() {
        let grid = graded_mesh(3000, 3.0).unwrap();
        let u = sample(&grid, |d| 2.5 * d.powf(0.33));
        for w in [
            FitWindow::default(),
            FitWindow::by_distance(1e-6, 0.2),
            FitWindow { skip: 0, per_side: Some(20), ..FitWindow::default() },
        ] {
            let fit = fit_power(&u, &grid, &w).unwrap();
            assert!((fit.exponent_hat - 0.33).abs() <= 1e-10);
        }
    }

    proptest! {
        #[test]
        fn affine_invariance(c in 1e-3f64..1e3, e in 0.1f64..1.0) {
            let grid = graded_mesh(800, 3.0).unwrap();
            let u = sample(&grid, |d| d.powf(e) * (1.0 + d.sin()));
            let cu: Vec<f64> = u.iter().map(|v| c * v).collect();
            let a = fit_power(&u, &grid, &FitWindow::default()).unwrap();
            let b = fit_power(&cu, &grid, &FitWindow::default()).unwrap();
            prop_assert!((a.exponent_hat - b.exponent_hat).abs() <= 1e-12);
            prop_assert!((b.intercept - a.intercept - c.ln()).abs() <= 1e-10);
        }

        #[test]
        fn symmetric_pooling_matches_one_side(e in 0.1f64..1.0, k in 0.0f64..5.0) {
            let grid = graded_mesh(600, 3.0).unwrap();
            let u = sample(&grid, |d| d.powf(e) * (1.0 + k * d));
            let pooled = fit_power(&u, &grid, &FitWindow::default()).unwrap();
            let idx = FitWindow::default().select(&grid).unwrap();
            let left: Vec<usize> = idx.into_iter().filter(|&i| i < 300).collect();
            let x: Vec<f64> = left.iter().map(|&i| grid.delta()[i].ln()).collect();
            let y: Vec<f64> = left.iter().map(|&i| u[i].ln()).collect();
            let one = least_squares(&x, &y);
            prop_assert!((pooled.exponent_hat - one.slope).abs() <= 1e-12);
        }
    }

    #[test]
    fn q_norm_slope_removes_the_log_factor() {
        let grid = graded_mesh(2000, 3.0).unwrap();
        let class = crate::exponents::classify_bq(1, 0.2, 1.0, 1.0 / 1.6).unwrap();
        let norms = sample(&grid, |d| 2.0 * d * (1.0 + d.ln().abs().powf(1.6)));
        let fit = fit_q_norm_slope(&norms, &grid, 1.0, &class, &q_norm_window()).unwrap();
        assert_relative_eq!(fit.exponent_hat, 1.0, epsilon = 1e-10);
        let class = crate::exponents::classify_bq(1, 0.2, 1.0, 1.0).unwrap();
        let norms = sample(&grid, |d| d.powf(0.4));
        let fit = fit_q_norm_slope(&norms, &grid, 1.0, &class, &q_norm_window()).unwrap();
        assert_relative_eq!(fit.exponent_hat, 0.4, epsilon = 1e-10);
    }

    #[test]
    fn least_squares2_recovers_exact_coefficients() {
        let x1: Vec<f64> = (1..50).map(|i| -(i as f64) * 0.3).collect();
        let x2: Vec<f64> = x1.iter().map(|v: &f64| v.abs().ln()).collect();
        let y: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| 0.5 + 0.9 * a + 1.7 * b).collect();
        let (a, b) = least_squares2(&x1, &x2, &y);
        assert_relative_eq!(a, 0.9, epsilon = 1e-10);
        assert_relative_eq!(b, 1.7, epsilon = 1e-10);
    }
}
