//! Differential message importance measure (DMIM) and Rényi entropy.
//!
//! For a density `f`, the DMIM is `l(X) = ∫ f(x) e^{-f(x)} dx`. Expanding
//! the exponential gives the alternating series
//!
//! ```text
//! l(X) = 1 + Σ_{n≥1} (-1)^n / n! · ∫ f^{n+1} = 1 + Σ_{n≥1} (-1)^n / n! · e^{-n·h_{n+1}(X)}
//! ```
//!
//! where `h_α` is the differential Rényi entropy of order α. If every
//! `∫ f^{n+1}` with `n ≥ m` is at most ε, truncating after `m - 1` terms
//! costs at most `e·ε`.

use std::f64::consts::{E, PI};

use thiserror::Error;

use crate::distribution::DistributionSpec;
use crate::quadrature::{Quadrature, QuadratureError};

/// Stopping tolerance for the normal series.
pub const DEFAULT_SERIES_TOL: f64 = 1e-15;
/// Term budget for the normal series.
pub const MAX_SERIES_TERMS: usize = 200;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("Rényi order must be positive, finite and different from 1, got {0}")]
    InvalidAlpha(f64),
    #[error("integral of f^alpha diverges or is not positive (alpha = {alpha})")]
    DivergentIntegral { alpha: f64 },
    #[error("series did not reach tolerance within {terms} terms")]
    SlowConvergence { terms: usize },
    #[error("density integrates to {mass}, not 1")]
    NotNormalized { mass: f64 },
    #[error("distribution has no computable finite variance")]
    MissingVariance,
    #[error("quadrature failed: {0}")]
    Quadrature(#[from] QuadratureError),
}

/// A truncated series value with a certified bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesResult {
    pub value: f64,
    pub truncation_bound: f64,
    pub terms_used: usize,
}

/// DMIM of `spec`. Closed forms for uniform and exponential, the power
/// series for normal (falling back to quadrature when σ is so small the
/// series cannot converge in double precision), quadrature for custom.
pub fn dmim(spec: &DistributionSpec) -> Result<f64, MeasureError> {
    match *spec {
        DistributionSpec::Uniform { a, b } => dmim_uniform(a, b),
        DistributionSpec::Exponential { lambda } => dmim_exponential(lambda),
        DistributionSpec::Normal { sigma, .. } => match dmim_normal_series(sigma, DEFAULT_SERIES_TOL) {
            Ok(r) => Ok(r.value),
            Err(MeasureError::SlowConvergence { .. }) => dmim_by_quadrature(spec, &Quadrature::default()),
            Err(e) => Err(e),
        },
        DistributionSpec::Custom(_) => dmim_by_quadrature(spec, &Quadrature::default()),
    }
}

/// Direct numerical integration of `f e^{-f}` over the support.
pub fn dmim_by_quadrature(spec: &DistributionSpec, quad: &Quadrature) -> Result<f64, MeasureError> {
    let r = quad.integrate_with_breaks(
        |x| {
            let fx = spec.density(x);
            fx * (-fx).exp()
        },
        spec.support(),
        &spec.quadrature_breaks(),
    )?;
    Ok(r.value)
}

/// `e^{-1/(b-a)}`.
pub fn dmim_uniform(a: f64, b: f64) -> Result<f64, MeasureError> {
    if !(a < b) || !(b - a).is_finite() {
        return Err(MeasureError::InvalidParams(format!("uniform requires a < b, got a = {a}, b = {b}")));
    }
    Ok((-1.0 / (b - a)).exp())
}

/// `(1 - e^{-λ}) / λ`.
pub fn dmim_exponential(lambda: f64) -> Result<f64, MeasureError> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(MeasureError::InvalidParams(format!("exponential requires lambda > 0, got {lambda}")));
    }
    Ok(-(-lambda).exp_m1() / lambda)
}

/// Sums `1 + Σ (-1)^n/n! · (n+1)^{-1/2} · (2πσ²)^{-n/2}` until the next
/// term falls below `tol`.
///
/// Stopping only happens once term magnitudes are decreasing, so the
/// alternating-series remainder is bounded by the first omitted term; that
/// term is reported as `truncation_bound`.
pub fn dmim_normal_series(sigma: f64, tol: f64) -> Result<SeriesResult, MeasureError> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(MeasureError::InvalidParams(format!("sigma must be positive, got {sigma}")));
    }
    if !(tol > 0.0) {
        return Err(MeasureError::InvalidParams(format!("tolerance must be positive, got {tol}")));
    }
    let c = 1.0 / ((2.0 * PI).sqrt() * sigma);
    let mut sum = 1.0;
    let mut term = 1.0;
    for n in 1..=MAX_SERIES_TERMS {
        let nf = n as f64;
        term *= -c / nf * (nf / (nf + 1.0)).sqrt();
        let ratio = c / (nf + 1.0) * ((nf + 1.0) / (nf + 2.0)).sqrt();
        if term.abs() < tol && ratio < 1.0 {
            return Ok(SeriesResult { value: sum, truncation_bound: term.abs(), terms_used: n });
        }
        sum += term;
    }
    Err(MeasureError::SlowConvergence { terms: MAX_SERIES_TERMS })
}

/// `e^{-1/(2√π σ)}`, accurate to under 1% relative for σ > 1.
pub fn dmim_normal_approx_exp(sigma: f64) -> f64 {
    (-1.0 / (2.0 * PI.sqrt() * sigma)).exp()
}

/// `1 - 1/(2√π σ)`. Goes negative for σ < 1/(2√π); returned unclamped.
pub fn dmim_normal_approx_linear(sigma: f64) -> f64 {
    1.0 - 1.0 / (2.0 * PI.sqrt() * sigma)
}

/// `∫ f^α` over the support, in closed form for the analytic families.
pub fn power_integral(spec: &DistributionSpec, alpha: f64) -> Result<f64, MeasureError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(MeasureError::InvalidAlpha(alpha));
    }
    let value = match *spec {
        DistributionSpec::Uniform { a, b } => (b - a).powf(1.0 - alpha),
        DistributionSpec::Normal { sigma, .. } => (2.0 * PI * sigma * sigma).powf(0.5 * (1.0 - alpha)) / alpha.sqrt(),
        DistributionSpec::Exponential { lambda } => lambda.powf(alpha - 1.0) / alpha,
        DistributionSpec::Custom(_) => {
            let r = Quadrature::default()
                .integrate_with_breaks(
                    |x| {
                        let fx = spec.density(x);
                        if fx == 0.0 {
                            0.0
                        } else {
                            fx.powf(alpha)
                        }
                    },
                    spec.support(),
                    &spec.quadrature_breaks(),
                )
                .map_err(|_| MeasureError::DivergentIntegral { alpha })?;
            r.value
        }
    };
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(MeasureError::DivergentIntegral { alpha })
    }
}

/// Differential Rényi entropy `h_α = ln(∫ f^α) / (1 - α)`.
pub fn renyi_entropy(spec: &DistributionSpec, alpha: f64) -> Result<f64, MeasureError> {
    if !(alpha > 0.0) || !alpha.is_finite() || alpha == 1.0 {
        return Err(MeasureError::InvalidAlpha(alpha));
    }
    match *spec {
        // Closed forms avoid the log/exp round trip.
        DistributionSpec::Uniform { a, b } => Ok((b - a).ln()),
        DistributionSpec::Normal { sigma, .. } => {
            Ok(0.5 * (2.0 * PI * sigma * sigma).ln() + alpha.ln() / (2.0 * (alpha - 1.0)))
        }
        DistributionSpec::Exponential { lambda } => Ok(-lambda.ln() + alpha.ln() / (alpha - 1.0)),
        DistributionSpec::Custom(_) => Ok(power_integral(spec, alpha)?.ln() / (1.0 - alpha)),
    }
}

/// Partial sum `1 + Σ_{n=1}^{m-1} (-1)^n/n! · e^{-n h_{n+1}}` with the
/// tail certificate `e·ε_m`, where `ε_m = sup_{n≥m} ∫ f^{n+1}`.
///
/// `ε_m` comes from the closed-form power integrals for the analytic
/// families. When the sequence `∫ f^{n+1}` grows without bound (very
/// concentrated densities) the certificate is `+∞`. For custom densities it
/// is taken at `n = m` after checking that `n = m + 1` is not larger; if
/// that check fails the certificate is `+∞` as well.
pub fn dmim_via_renyi_series(spec: &DistributionSpec, m: usize) -> Result<SeriesResult, MeasureError> {
    if m == 0 {
        return Err(MeasureError::InvalidParams("series length m must be at least 1".into()));
    }
    let mut sum = 1.0;
    let mut inv_factorial = 1.0;
    for n in 1..m {
        let nf = n as f64;
        inv_factorial /= nf;
        let h = renyi_entropy(spec, nf + 1.0)?;
        let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * inv_factorial * (-nf * h).exp();
    }
    let eps = tail_power_sup(spec, m)?;
    Ok(SeriesResult { value: sum, truncation_bound: truncation_bound(eps), terms_used: m })
}

/// `sup_{n≥m} ∫ f^{n+1}`.
pub fn tail_power_sup(spec: &DistributionSpec, m: usize) -> Result<f64, MeasureError> {
    let m_f = m as f64;
    // Each closed form is g(n) with g(n+1)/g(n) increasing towards a limit
    // L; the sequence is non-increasing from m on iff L <= 1 or the ratio
    // at m is still below 1 and never crosses. Growth ⇒ unbounded sup.
    let (at_m, limit_ratio) = match *spec {
        DistributionSpec::Uniform { a, b } => ((b - a).powf(-m_f), 1.0 / (b - a)),
        DistributionSpec::Normal { sigma, .. } => {
            let c = 1.0 / ((2.0 * PI).sqrt() * sigma);
            (c.powf(m_f) / (m_f + 1.0).sqrt(), c)
        }
        DistributionSpec::Exponential { lambda } => (lambda.powf(m_f) / (m_f + 1.0), lambda),
        DistributionSpec::Custom(_) => {
            let at_m = power_integral(spec, m_f + 1.0)?;
            let next = power_integral(spec, m_f + 2.0)?;
            return Ok(if next <= at_m { at_m } else { f64::INFINITY });
        }
    };
    Ok(if limit_ratio <= 1.0 { at_m } else { f64::INFINITY })
}

/// Tail certificate `e·ε`.
pub fn truncation_bound(epsilon: f64) -> f64 {
    E * epsilon
}

/// Sharper certificate `(e - 2)·ε` for the two-term truncation `1 - e^{-h₂}`.
pub fn truncation_bound_m2(epsilon: f64) -> f64 {
    (E - 2.0) * epsilon
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Interval;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    // Values frozen from scipy.integrate.quad of f·e^{-f} (Python, 1e-14 abs).
    const L_UNIFORM_0_1: f64 = 0.367_879_441_171_442_33;
    const L_EXP_1: f64 = 0.632_120_558_828_557_7;
    const L_EXP_2: f64 = 0.432_332_358_381_693_65;
    const L_NORMAL_1: f64 = 0.758_997_778_271_017_1;

    fn oracle(spec: &DistributionSpec) -> f64 {
        dmim_by_quadrature(spec, &Quadrature::new(1e-15, 1e-14)).unwrap()
    }

    #[test]
    fn uniform_closed_form() {
        assert_abs_diff_eq!(dmim_uniform(0.0, 1.0).unwrap(), L_UNIFORM_0_1, epsilon = 1e-15);
        let spec = DistributionSpec::uniform(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(oracle(&spec), L_UNIFORM_0_1, epsilon = 1e-14);
        assert!(dmim_uniform(1e-3, 2e-3).unwrap() < 1e-300);
        assert!(dmim_uniform(0.0, 1e12).unwrap() > 1.0 - 1e-11);
        assert_eq!(dmim_uniform(5.0, 6.0).unwrap(), dmim_uniform(0.0, 1.0).unwrap());
        assert!(matches!(dmim_uniform(1.0, 1.0), Err(MeasureError::InvalidParams(_))));
    }

    #[test]
    fn exponential_closed_form() {
        assert_abs_diff_eq!(dmim_exponential(1.0).unwrap(), L_EXP_1, epsilon = 1e-15);
        assert_abs_diff_eq!(dmim_exponential(2.0).unwrap(), L_EXP_2, epsilon = 1e-15);
        for lambda in [1.0, 2.0] {
            let spec = DistributionSpec::exponential(lambda).unwrap();
            assert_abs_diff_eq!(oracle(&spec), dmim_exponential(lambda).unwrap(), epsilon = 1e-12);
        }
        assert!(dmim_exponential(1e-12).unwrap() > 1.0 - 1e-12);
        assert!(dmim_exponential(1e9).unwrap() < 1e-8);
        assert!(dmim_exponential(0.0).is_err());
        assert!(dmim_exponential(-1.0).is_err());
    }

    #[test]
    fn normal_series_against_quadrature() {
        let r = dmim_normal_series(1.0, 1e-15).unwrap();
        assert_abs_diff_eq!(r.value, L_NORMAL_1, epsilon = 1e-14);
        let spec = DistributionSpec::normal(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(r.value, oracle(&spec), epsilon = 1e-12);
        assert!(r.truncation_bound < 1e-15);
        assert!(r.terms_used >= 1);
    }

    #[test]
    fn normal_series_large_sigma_tends_to_one() {
        let r = dmim_normal_series(1e8, 1e-15).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn normal_series_two_term_gap() {
        // |l - (1 - e^{-h₂})| ≤ 0.066 at σ = 1.
        let spec = DistributionSpec::normal(0.0, 1.0).unwrap();
        let h2 = renyi_entropy(&spec, 2.0).unwrap();
        let gap = (dmim_normal_series(1.0, 1e-15).unwrap().value - (1.0 - (-h2).exp())).abs();
        assert!(gap <= 0.066, "gap = {gap}");
    }

    #[test]
    fn normal_series_budget() {
        assert!(matches!(dmim_normal_series(1e-3, 1e-15), Err(MeasureError::SlowConvergence { .. })));
        // dmim() still answers by falling back to quadrature.
        let spec = DistributionSpec::normal(0.0, 1e-3).unwrap();
        // Frozen from scipy.integrate.quad over the two tails.
        assert_relative_eq!(dmim(&spec).unwrap(), 5.591_397_541_289_7e-4, max_relative = 1e-8);
    }

    #[test]
    fn approximations() {
        // e^{-1/(2√π)} and 1 - 1/(4√π), evaluated directly.
        assert_abs_diff_eq!(dmim_normal_approx_exp(1.0), 0.754_202_188_981_191_1, epsilon = 1e-15);
        assert_abs_diff_eq!(dmim_normal_approx_linear(2.0), 0.858_952_604_113_061, epsilon = 1e-15);
        let series = dmim_normal_series(1.0, 1e-15).unwrap().value;
        assert!((dmim_normal_approx_exp(1.0) - series).abs() / series < 0.01);
        let series10 = dmim_normal_series(10.0, 1e-15).unwrap().value;
        assert!((dmim_normal_approx_exp(10.0) - series10).abs() / series10 < 1e-3);
        assert!(dmim_normal_approx_linear(0.1) < 0.0);
        assert_abs_diff_eq!(dmim_normal_approx_exp(1e12), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn renyi_closed_forms() {
        let u = DistributionSpec::uniform(0.0, 2.0).unwrap();
        for alpha in [0.5, 2.0, 3.7] {
            assert_abs_diff_eq!(renyi_entropy(&u, alpha).unwrap(), 2f64.ln(), epsilon = 1e-15);
        }
        let n = DistributionSpec::normal(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(renyi_entropy(&n, 2.0).unwrap(), 2f64.ln() + 0.5 * PI.ln(), epsilon = 1e-15);
        let e = DistributionSpec::exponential(1.0).unwrap();
        assert_abs_diff_eq!(renyi_entropy(&e, 2.0).unwrap(), 2f64.ln(), epsilon = 1e-15);
    }

    #[test]
    fn renyi_closed_forms_match_quadrature() {
        let specs = [
            DistributionSpec::uniform(-1.0, 2.5).unwrap(),
            DistributionSpec::normal(0.3, 0.7).unwrap(),
            DistributionSpec::exponential(1.7).unwrap(),
        ];
        for spec in &specs {
            for alpha in [0.5, 2.0, 3.0, 6.0] {
                let q = Quadrature::new(1e-15, 1e-13)
                    .integrate_with_breaks(|x| spec.density(x).powf(alpha), spec.support(), &spec.quadrature_breaks())
                    .unwrap()
                    .value;
                let h = q.ln() / (1.0 - alpha);
                assert_relative_eq!(renyi_entropy(spec, alpha).unwrap(), h, max_relative = 1e-10, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn renyi_rejects_bad_alpha() {
        let n = DistributionSpec::normal(0.0, 1.0).unwrap();
        for alpha in [1.0, 0.0, -2.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(renyi_entropy(&n, alpha), Err(MeasureError::InvalidAlpha(_))));
        }
    }

    #[test]
    fn renyi_custom_divergent() {
        // f(x) = 1/(2√x) on (0,1]: ∫ f² diverges logarithmically.
        let spec = DistributionSpec::custom(|x| 0.5 / x.sqrt(), Interval::new(0.0, 1.0).unwrap(), None, None).unwrap();
        assert!(matches!(renyi_entropy(&spec, 2.0), Err(MeasureError::DivergentIntegral { .. })));
    }

    #[test]
    fn renyi_series_remark_one_bound() {
        let sigma = 2.0;
        let spec = DistributionSpec::normal(0.0, sigma).unwrap();
        let r = dmim_via_renyi_series(&spec, 2).unwrap();
        let l = dmim_normal_series(sigma, 1e-15).unwrap().value;
        let bound = (E - 2.0) / (2.0 * 3f64.sqrt() * PI * sigma * sigma);
        assert!((r.value - l).abs() <= bound);
    }

    #[test]
    fn renyi_series_exponential_certificate() {
        let lambda = 0.5;
        let spec = DistributionSpec::exponential(lambda).unwrap();
        let r = dmim_via_renyi_series(&spec, 6).unwrap();
        let exact = (1.0 - (-lambda).exp()) / lambda;
        assert!((r.value - exact).abs() <= r.truncation_bound);
        assert_abs_diff_eq!(r.truncation_bound, E * lambda.powi(6) / 7.0, epsilon = 1e-15);
    }

    #[test]
    fn renyi_series_converges() {
        for spec in [
            DistributionSpec::normal(0.0, 0.8).unwrap(),
            DistributionSpec::exponential(3.0).unwrap(),
            DistributionSpec::uniform(0.0, 0.5).unwrap(),
        ] {
            let r = dmim_via_renyi_series(&spec, 60).unwrap();
            assert_abs_diff_eq!(r.value, dmim(&spec).unwrap(), epsilon = 1e-12);
        }
    }

    #[test]
    fn renyi_series_unbounded_certificate() {
        // λ > 1 makes ∫ f^{n+1} = λ^n/(n+1) grow without bound.
        let spec = DistributionSpec::exponential(3.0).unwrap();
        assert_eq!(dmim_via_renyi_series(&spec, 4).unwrap().truncation_bound, f64::INFINITY);
    }

    #[test]
    fn renyi_series_custom_certificate() {
        let spec = DistributionSpec::custom(|x| 2.0 * x, Interval::new(0.0, 1.0).unwrap(), None, None).unwrap();
        // ∫ (2x)^{n+1} = 2^{n+1}/(n+2) grows, so no certificate.
        assert_eq!(tail_power_sup(&spec, 3).unwrap(), f64::INFINITY);
        let wide = DistributionSpec::custom(
            |x| 0.5 * (1.0 - (x / 2.0 - 1.0).abs()),
            Interval::new(0.0, 4.0).unwrap(),
            Some(2.0),
            None,
        )
        .unwrap();
        let r = dmim_via_renyi_series(&wide, 3).unwrap();
        assert!(r.truncation_bound.is_finite());
        assert!((r.value - dmim(&wide).unwrap()).abs() <= r.truncation_bound);
    }

    #[test]
    fn certificates() {
        assert_eq!(truncation_bound(0.0), 0.0);
        assert_abs_diff_eq!(truncation_bound(0.01), 0.027_182_818_284_590_453, epsilon = 1e-17);
        let eps = 1.0 / (2.0 * 3f64.sqrt() * PI);
        assert_abs_diff_eq!(truncation_bound_m2(eps), 0.066, epsilon = 5e-4);
    }
}
