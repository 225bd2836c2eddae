//! Gauss–Legendre rules and weakly singular ray integrals.

use alloc::vec::Vec;
use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;

pub(crate) struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`, roots found by Newton iteration on the
    /// three-term Legendre recurrence.
    pub fn new(n: usize) -> Self {
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for i in 1..=n {
            let mut x = (PI * (i as f64 - 0.25) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            nodes.push(x);
            weights.push(2.0 / ((1.0 - x * x) * dp * dp));
        }
        GaussLegendre { nodes, weights }
    }

    pub fn integrate(&self, a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }
}

/// `∫_0^reach ρ^(a-1) g(ρ) dρ` for `a > 0` and bounded, piecewise smooth `g`
/// whose kinks are listed in `kinks`.
///
/// The substitution `τ = ρ^a` removes the singularity; each smooth piece in
/// `τ` is split into panels whose end points differ by at most a factor 2.
pub(crate) fn ray_integral(
    rule: &GaussLegendre,
    a: f64,
    reach: f64,
    kinks: &[f64],
    g: impl Fn(f64) -> f64,
) -> f64 {
    if reach <= 0.0 {
        return 0.0;
    }
    let mut breaks: Vec<f64> = Vec::with_capacity(kinks.len() + 2);
    breaks.push(0.0);
    breaks.extend(kinks.iter().copied().filter(|&k| k > 0.0 && k < reach));
    breaks.push(reach);
    breaks.sort_by(|x, y| x.partial_cmp(y).unwrap());
    breaks.dedup();

    let inv_a = 1.0 / a;
    let integrand = |tau: f64| g(tau.powf(inv_a));
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (t0, t1) = (w[0].powf(a), w[1].powf(a));
        if t0 == 0.0 {
            total += rule.integrate(0.0, t1, integrand);
            continue;
        }
        let mut lo = t0;
        while lo < t1 {
            let hi = (2.0 * lo).min(t1);
            total += rule.integrate(lo, hi, integrand);
            lo = hi;
        }
    }
    total * inv_a
}
