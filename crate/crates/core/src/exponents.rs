//! Closed-form boundary exponents and the case analysis behind them.
//!
//! With `m = 1/p`, the solution of `u = G[u^p]` behaves like `δ^μ` near the
//! boundary with `μ = γ ∧ 2s/(1-p)`, and like `δ^γ (1 + |log δ|^(1/(1-p)))`
//! on the critical set `γ = 2s/(1-p)`. Equality branches are detected with a
//! relative tolerance of [`EQUALITY_TOL`].

use alloc::vec::Vec;
use core::fmt;

use crate::error::{invalid, Error, Result};

pub const EQUALITY_TOL: f64 = 1e-12;

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= EQUALITY_TOL * a.abs().max(b.abs())
}

fn check_s_gamma(s: f64, gamma: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(invalid!("s = {s} must lie in (0, 1]"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(invalid!("gamma = {gamma} must lie in (0, 1]"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    /// `μ = γ`: the solution decays like the first eigenfunction.
    EigenDominated,
    /// `μ = 2s/(1-p) < γ`.
    ScalingDominated,
    /// `γ = 2s/(1-p)`, with a logarithmic correction.
    Critical,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::EigenDominated => "eigen-dominated",
            Regime::ScalingDominated => "scaling-dominated",
            Regime::Critical => "critical",
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentPrediction {
    pub mu: f64,
    /// `μ/γ`, the exponent measured against `Φ_1 ≍ δ^γ`.
    pub sigma: f64,
    pub regime: Regime,
    /// `1/(1-p)` in the critical regime.
    pub log_exponent: Option<f64>,
}

/// `μ = γ ∧ 2s/(1-p)`.
pub fn predict_mu(s: f64, gamma: f64, p: f64) -> Result<ExponentPrediction> {
    predict_mu_with(s, gamma, p, false)
}

/// As [`predict_mu`]; `force_critical` pins the critical branch for
/// parameters meant to be exactly critical but perturbed by rounding beyond
/// [`EQUALITY_TOL`]. Forcing is refused further than `1e-6` (relative) from
/// the critical set.
pub fn predict_mu_with(s: f64, gamma: f64, p: f64, force_critical: bool) -> Result<ExponentPrediction> {
    check_s_gamma(s, gamma)?;
    if p == 1.0 {
        return Err(Error::RoutedToEigenproblem);
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(invalid!("p = {p} must lie in (0, 1)"));
    }
    let scaling = 2.0 * s / (1.0 - p);
    if force_critical && (gamma - scaling).abs() > 1e-6 * gamma {
        return Err(invalid!("gamma = {gamma} is not critical for s = {s}, p = {p}"));
    }
    let prediction = if force_critical || rel_eq(gamma, scaling) {
        ExponentPrediction {
            mu: gamma,
            sigma: 1.0,
            regime: Regime::Critical,
            log_exponent: Some(1.0 / (1.0 - p)),
        }
    } else if gamma < scaling {
        ExponentPrediction { mu: gamma, sigma: 1.0, regime: Regime::EigenDominated, log_exponent: None }
    } else {
        ExponentPrediction {
            mu: scaling,
            sigma: scaling / gamma,
            regime: Regime::ScalingDominated,
            log_exponent: None,
        }
    };
    Ok(prediction)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BqRegime {
    Linear,
    Log,
    Power,
}

impl BqRegime {
    pub fn name(&self) -> &'static str {
        match self {
            BqRegime::Linear => "linear",
            BqRegime::Log => "log",
            BqRegime::Power => "power",
        }
    }
}

/// Regime of the function `B_q` bounding `‖G(·, x_0)‖_{L^q}` by
/// `B_q(Φ_1(x_0))`:
/// `t` for `q < q_low`, `t |log t|^(1/q)` at `q = q_low`,
/// `t^((N - q(N-2s))/(qγ))` for `q_low < q < q_high`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BqClassification {
    pub regime: BqRegime,
    /// Power of `Φ_1` in `B_q`.
    pub exponent: f64,
    /// `1/q` in the log regime.
    pub log_exponent: Option<f64>,
    /// `N/(N - 2s + γ)`.
    pub q_low: f64,
    /// `N/(N - 2s)`, infinite when `N ≤ 2s`.
    pub q_high: f64,
}

pub fn classify_bq(dim: usize, s: f64, gamma: f64, q: f64) -> Result<BqClassification> {
    check_s_gamma(s, gamma)?;
    if dim == 0 {
        return Err(invalid!("dimension must be positive"));
    }
    let n = dim as f64;
    let q_low = n / (n - 2.0 * s + gamma);
    let q_high = if n > 2.0 * s { n / (n - 2.0 * s) } else { f64::INFINITY };
    if !(q > 0.0 && q < q_high) {
        return Err(invalid!("q = {q} must lie in (0, {q_high})"));
    }
    let (regime, exponent, log_exponent) = if rel_eq(q, q_low) {
        (BqRegime::Log, 1.0, Some(1.0 / q))
    } else if q < q_low {
        (BqRegime::Linear, 1.0, None)
    } else {
        (BqRegime::Power, (n - q * (n - 2.0 * s)) / (q * gamma), None)
    };
    Ok(BqClassification { regime, exponent, log_exponent, q_low, q_high })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HlsLadder {
    /// `p_0, p_1, …, p_{k*}`; an infinite last entry marks a nonpositive
    /// denominator.
    pub sequence: Vec<f64>,
    /// Number of steps `k*` until `p_k > N/(2s)`.
    pub steps: usize,
}

/// Integrability ladder `p_{k+1} = N p_k / (N - 2s p_k)`, stopped at the
/// first `p_k > N/(2s)`.
pub fn hls_ladder(dim: usize, s: f64, p0: f64) -> Result<HlsLadder> {
    if dim == 0 {
        return Err(invalid!("dimension must be positive"));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(invalid!("s = {s} must lie in (0, 1]"));
    }
    if !(p0 >= 1.0) || !p0.is_finite() {
        return Err(invalid!("p0 = {p0} must be at least 1"));
    }
    let n = dim as f64;
    let target = n / (2.0 * s);
    let mut sequence = alloc::vec![p0];
    loop {
        let pk = *sequence.last().unwrap();
        if pk > target {
            break;
        }
        let denom = n - 2.0 * s * pk;
        if denom <= 0.0 {
            sequence.push(f64::INFINITY);
            break;
        }
        sequence.push(n * pk / denom);
    }
    let steps = sequence.len() - 1;
    Ok(HlsLadder { sequence, steps })
}

/// Cases of the boundary-exponent bootstrap for `γ ≥ 2s` (plus `DIRECT` for
/// `γ < 2s`, where the eigenfunction exponent is reached at once).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NuCase {
    Direct,
    I,
    IIA1,
    IIA2,
    IIB,
    III,
    IV,
}

impl NuCase {
    pub fn label(&self) -> &'static str {
        match self {
            NuCase::Direct => "DIRECT",
            NuCase::I => "I",
            NuCase::IIA1 => "II.A.1",
            NuCase::IIA2 => "II.A.2",
            NuCase::IIB => "II.B",
            NuCase::III => "III",
            NuCase::IV => "IV",
        }
    }
}

impl fmt::Display for NuCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CaseLabel {
    pub case: NuCase,
    /// `2s/(mγ)`, in Cases II and III.
    pub nu_1: Option<f64>,
    /// `2s/(γ(m-1))`, in Cases II and III.
    pub nu_infinity: Option<f64>,
    pub sigma_out: f64,
    pub log_flag: bool,
    /// `m/(m-1)` in Case II.A.2.
    pub log_power: Option<f64>,
    /// Case II.B: first `k` with `ν_k > 1 - 2s/γ`, after which the
    /// bootstrap continues as in Case I.
    pub crossing_index: Option<usize>,
}

const MAX_CROSSING_STEPS: usize = 10_000_000;

pub fn nu_case_machine(s: f64, gamma: f64, m: f64) -> Result<CaseLabel> {
    check_s_gamma(s, gamma)?;
    if !(m > 1.0) || !m.is_finite() {
        return Err(invalid!("m = {m} must be finite and greater than 1"));
    }
    let two_s = 2.0 * s;
    let nu_1 = two_s / (m * gamma);
    let nu_inf = two_s / (gamma * (m - 1.0));
    let mut label = CaseLabel {
        case: NuCase::Direct,
        nu_1: None,
        nu_infinity: None,
        sigma_out: 1.0,
        log_flag: false,
        log_power: None,
        crossing_index: None,
    };
    if rel_eq(gamma, two_s) {
        label.case = NuCase::IV;
        return Ok(label);
    }
    if gamma < two_s {
        return Ok(label);
    }
    let case_iii = two_s * (m + 1.0) / m;
    if rel_eq(gamma, case_iii) {
        label.case = NuCase::III;
    } else if gamma < case_iii {
        label.case = NuCase::I;
        return Ok(label);
    }
    label.nu_1 = Some(nu_1);
    label.nu_infinity = Some(nu_inf);
    if label.case == NuCase::III {
        return Ok(label);
    }
    let log_threshold = two_s * m / (m - 1.0);
    if rel_eq(gamma, log_threshold) {
        label.case = NuCase::IIA2;
        label.log_flag = true;
        label.log_power = Some(m / (m - 1.0));
    } else if gamma < log_threshold {
        label.case = NuCase::IIB;
        let barrier = 1.0 - two_s / gamma;
        let mut nu = nu_1;
        let mut k = 1;
        while nu <= barrier && k < MAX_CROSSING_STEPS {
            nu = nu / m + nu_1;
            k += 1;
        }
        label.crossing_index = (nu > barrier).then_some(k);
    } else {
        label.case = NuCase::IIA1;
        label.sigma_out = two_s * m / (gamma * (m - 1.0));
    }
    Ok(label)
}

/// `ν_1, …, ν_{k_max}` with `ν_k = ν_{k-1}/m + 2s/(mγ)`.
pub fn nu_sequence(s: f64, gamma: f64, m: f64, k_max: usize) -> Result<Vec<f64>> {
    check_s_gamma(s, gamma)?;
    if !(m > 1.0) || !m.is_finite() {
        return Err(invalid!("m = {m} must be finite and greater than 1"));
    }
    if k_max == 0 {
        return Err(invalid!("k_max must be at least 1"));
    }
    let nu_1 = 2.0 * s / (m * gamma);
    let mut seq = Vec::with_capacity(k_max);
    seq.push(nu_1);
    for k in 1..k_max {
        seq.push(seq[k - 1] / m + nu_1);
    }
    Ok(seq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn predictor_examples() {
        let a = predict_mu(0.4, 1.0, 0.5).unwrap();
        assert_eq!((a.mu, a.regime), (1.0, Regime::EigenDominated));
        let b = predict_mu(0.2, 1.0, 0.5).unwrap();
        assert_relative_eq!(b.mu, 0.8, epsilon = 1e-15);
        assert_eq!(b.regime, Regime::ScalingDominated);
        let c = predict_mu(0.25, 1.0, 0.5).unwrap();
        assert_eq!(c.regime, Regime::Critical);
        assert_eq!(c.log_exponent, Some(2.0));
        for &p in &[0.1, 0.5, 0.9] {
            assert_eq!(predict_mu(0.3, 0.3, p).unwrap().mu, 0.3);
        }
        assert_eq!(predict_mu(0.3, 0.3, 1.0), Err(Error::RoutedToEigenproblem));
        assert!(predict_mu(1.2, 0.3, 0.5).is_err());
        assert!(predict_mu(0.3, 0.3, 0.0).is_err());
    }

    #[test]
    fn forced_critical() {
        let p = predict_mu_with(0.25, 1.0 - 1e-9, 0.5, true).unwrap();
        assert_eq!(p.regime, Regime::Critical);
        assert_eq!(predict_mu(0.25, 1.0 - 1e-9, 0.5).unwrap().regime, Regime::EigenDominated);
        assert!(predict_mu_with(0.2, 1.0, 0.5, true).is_err());
    }

    #[test]
    fn bq_examples() {
        let lin = classify_bq(1, 0.2, 1.0, 0.5).unwrap();
        assert_eq!(lin.regime, BqRegime::Linear);
        let log = classify_bq(1, 0.2, 1.0, 0.625).unwrap();
        assert_eq!(log.regime, BqRegime::Log);
        assert_relative_eq!(log.log_exponent.unwrap(), 1.6, epsilon = 1e-15);
        let pow = classify_bq(1, 0.2, 1.0, 1.0).unwrap();
        assert_eq!(pow.regime, BqRegime::Power);
        assert_relative_eq!(pow.exponent, 0.4, epsilon = 1e-15);
        assert!(classify_bq(1, 0.2, 1.0, 1.0 / 0.6 + 1e-9).is_err());
        assert!(classify_bq(1, 0.2, 1.0, 0.0).is_err());
        assert_eq!(classify_bq(1, 0.5, 1.0, 1e6).unwrap().q_high, f64::INFINITY);
    }

    #[test]
    fn b1_table() {
        // γ < 2s linear, γ = 2s log with exponent 1, γ > 2s power 2s/γ
        assert_eq!(classify_bq(1, 0.3, 0.4, 1.0).unwrap().regime, BqRegime::Linear);
        let log = classify_bq(1, 0.3, 0.6, 1.0).unwrap();
        assert_eq!((log.regime, log.log_exponent), (BqRegime::Log, Some(1.0)));
        let pow = classify_bq(1, 0.3, 0.9, 1.0).unwrap();
        assert_relative_eq!(pow.exponent, 0.6 / 0.9, epsilon = 1e-15);
    }

    #[test]
    fn hls_examples() {
        let a = hls_ladder(1, 0.2, 2.0).unwrap();
        assert_eq!(a.steps, 1);
        assert_relative_eq!(a.sequence[1], 10.0, epsilon = 1e-14);
        let b = hls_ladder(3, 0.5, 2.0).unwrap();
        assert_eq!(b.steps, 1);
        assert_relative_eq!(b.sequence[1], 6.0, epsilon = 1e-14);
        assert_eq!(hls_ladder(1, 0.4, 2.0).unwrap().steps, 0);
        // p_0 = N/(2s) exactly: zero denominator ends the ladder
        let c = hls_ladder(1, 0.25, 2.0).unwrap();
        assert_eq!(c.sequence, alloc::vec![2.0, f64::INFINITY]);
        assert!(hls_ladder(1, 0.2, 0.5).is_err());
    }

    #[test]
    fn case_machine_examples() {
        let a = nu_case_machine(0.2, 1.0, 2.0).unwrap();
        assert_eq!(a.case, NuCase::IIA1);
        assert_relative_eq!(a.nu_infinity.unwrap(), 0.4, epsilon = 1e-15);
        assert_relative_eq!(a.sigma_out, 0.8, epsilon = 1e-15);
        let b = nu_case_machine(0.25, 1.0, 2.0).unwrap();
        assert_eq!((b.case, b.sigma_out, b.log_flag, b.log_power), (NuCase::IIA2, 1.0, true, Some(2.0)));
        assert_eq!(nu_case_machine(0.4, 1.0, 2.0).unwrap().case, NuCase::I);
        assert_eq!(nu_case_machine(0.3, 0.6, 2.0).unwrap().case, NuCase::IV);
        assert_eq!(nu_case_machine(0.3, 0.5, 2.0).unwrap().case, NuCase::Direct);
        // γ = 2s(m+1)/m with s = 0.25, m = 2 gives 0.75
        let c = nu_case_machine(0.25, 0.75, 2.0).unwrap();
        assert_eq!(c.case, NuCase::III);
        assert!(c.nu_1.is_some());
        assert!(nu_case_machine(0.2, 1.0, 1.0).is_err());
    }

    #[test]
    fn case_iib_crossing() {
        // s = 0.2, m = 2: I below 0.6, II.B in (0.6, 0.8)
        let l = nu_case_machine(0.2, 0.7, 2.0).unwrap();
        assert_eq!(l.case, NuCase::IIB);
        let k = l.crossing_index.unwrap();
        let seq = nu_sequence(0.2, 0.7, 2.0, k).unwrap();
        let barrier = 1.0 - 0.4 / 0.7;
        assert!(seq[k - 1] > barrier);
        assert!(seq[..k - 1].iter().all(|&v| v <= barrier));
        assert_eq!(l.sigma_out, 1.0);
    }

    #[test]
    fn nu_sequence_examples() {
        let seq = nu_sequence(0.2, 1.0, 2.0, 4).unwrap();
        for (a, b) in seq.iter().zip(&[0.2, 0.3, 0.35, 0.375]) {
            assert_relative_eq!(*a, *b, epsilon = 1e-15);
        }
        assert_eq!(nu_sequence(0.2, 1.0, 2.0, 1).unwrap(), alloc::vec![0.2 * 2.0 / 2.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn case_machine_agrees_with_predictor(s in 0.001f64..0.5, gamma in 0.001f64..=1.0, p in 0.001f64..0.999) {
            let pred = predict_mu(s, gamma, p).unwrap();
            let label = nu_case_machine(s, gamma, 1.0 / p).unwrap();
            prop_assert!((label.sigma_out - pred.sigma).abs() <= 1e-12);
            prop_assert_eq!(label.log_flag, pred.regime == Regime::Critical);
            prop_assert!((pred.mu - gamma * pred.sigma).abs() <= 1e-15);
        }

        #[test]
        fn critical_set_is_detected(s in 0.001f64..0.49, t in 0.0f64..1.0) {
            // γ = 2s/(1-p) ≤ 1 requires p ≤ 1 - 2s
            let p = (t * (1.0 - 2.0 * s)).max(1e-3);
            let gamma = 2.0 * s / (1.0 - p);
            let pred = predict_mu(s, gamma, p).unwrap();
            let label = nu_case_machine(s, gamma, 1.0 / p).unwrap();
            prop_assert_eq!(pred.regime, Regime::Critical);
            prop_assert_eq!(label.case, NuCase::IIA2);
            prop_assert!((label.log_power.unwrap() - pred.log_exponent.unwrap()).abs() <= 1e-12 * pred.log_exponent.unwrap());
        }

        #[test]
        fn thresholds_are_ordered(s in 0.001f64..1.0, m in 1.0001f64..100.0) {
            let t1 = 2.0 * s;
            let t2 = 2.0 * s * (m + 1.0) / m;
            let t3 = 2.0 * s * m / (m - 1.0);
            prop_assert!(t1 < t2 && t2 < t3);
        }

        #[test]
        fn nu_sequence_contracts(s in 0.01f64..0.5, gamma in 0.01f64..=1.0, m in 1.1f64..20.0) {
            let seq = nu_sequence(s, gamma, m, 30).unwrap();
            let nu_inf = 2.0 * s / (gamma * (m - 1.0));
            let nu_1 = seq[0];
            for k in 0..29 {
                prop_assert!(seq[k + 1] >= seq[k]);
                let lhs = seq[k + 1] - nu_inf;
                prop_assert!((lhs - (seq[k] - nu_inf) / m).abs() <= 1e-13 * nu_inf.max(1.0));
                // closed form ν_1/m^k + ν_1 Σ_{j<k} m^-j
                let closed = nu_1 / m.powi(k as i32 + 1) + nu_1 * (0..=k).map(|j| m.powi(-(j as i32))).sum::<f64>();
                prop_assert!((seq[k + 1] - closed).abs() <= 1e-14 * closed.max(1.0));
            }
        }

        #[test]
        fn hls_terminates_within_bound(dim in 1usize..6, s in 0.01f64..0.5, p0 in 1.0f64..4.0) {
            let ladder = hls_ladder(dim, s, p0).unwrap();
            let bound = (dim as f64 / (2.0 * s * p0)).ceil() as usize;
            prop_assert!(ladder.steps <= bound.max(1));
        }
    }
}
