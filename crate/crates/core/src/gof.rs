//! Goodness of fit through the DMIM deviation.
//!
//! The relative importance of `n` samples is `γ(n) = e^{-1/(2√(πn)σ)} / l(X)`,
//! which increases towards `γ(∞) = 1/l(X)`. Asking for
//! `|γ(∞) - γ(n)| ≤ ε` yields a lower bound on `n`, and with
//! `d = √(2πσ² ln(19/(9β))) · ln(1/(1-ε))` the Kolmogorov–Smirnov tail
//! satisfies `P{D_n > d} < β`. Any two of `(d, β, ε)` fix the third.

use thiserror::Error;

use crate::distribution::DistributionSpec;
use crate::measures::MeasureError;

/// Default cut-off for the Kolmogorov tail series.
pub const DEFAULT_KS_TERMS: usize = 100;
const KS_TERM_FLOOR: f64 = 1e-16;

/// Largest β for which the planning bound `(d, n) ⇒ P{D_n > d} < β` is
/// valid: `(19/9)·19^{-1/4}`.
pub fn beta_validity_limit() -> f64 {
    19.0 / 9.0 * 19f64.powf(-0.25)
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GofError {
    #[error("sample is empty")]
    EmptySample,
    #[error("sample contains a non-finite value at index {index}")]
    NonFiniteSample { index: usize },
    #[error("cdf returned {value} at x = {x}, outside [0, 1]")]
    InvalidCdf { x: f64, value: f64 },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("n·d² = {nd2:e} is too small for the tail bound")]
    DegenerateInput { nd2: f64 },
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

fn invalid(msg: impl Into<String>) -> GofError {
    GofError::InvalidParams(msg.into())
}

/// Right-continuous step function `F̂_n(x) = #{X_k ≤ x} / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(samples: &[f64]) -> Result<Self, GofError> {
        Self::from_vec(samples.to_vec())
    }

    /// Takes ownership of `samples` and sorts them in place.
    pub fn from_vec(mut samples: Vec<f64>) -> Result<Self, GofError> {
        if samples.is_empty() {
            return Err(GofError::EmptySample);
        }
        if let Some(index) = samples.iter().position(|x| !x.is_finite()) {
            return Err(GofError::NonFiniteSample { index });
        }
        samples.sort_unstable_by(f64::total_cmp);
        Ok(Self { sorted: samples })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_samples(&self) -> &[f64] {
        &self.sorted
    }

    pub fn evaluate(&self, x: f64) -> f64 {
        let count = self.sorted.partition_point(|&s| s <= x);
        count as f64 / self.sorted.len() as f64
    }

    /// Kolmogorov–Smirnov distance to a continuous CDF.
    pub fn ks_statistic<F: Fn(f64) -> f64>(&self, cdf: F) -> Result<f64, GofError> {
        ks_statistic(self, cdf)
    }
}

/// Builds the empirical CDF of `samples`.
pub fn empirical_cdf(samples: &[f64]) -> Result<EmpiricalCdf, GofError> {
    EmpiricalCdf::new(samples)
}

/// `D_n = sup_x |F̂_n(x) - F(x)|` for a continuous `F`, evaluated exactly
/// at the order statistics as `max_i max(i/n - F(x_(i)), F(x_(i)) - (i-1)/n)`.
///
/// Ties are handled correctly. `F` must be continuous: the second term
/// stands in for the left limit of `F` at each jump.
pub fn ks_statistic<F: Fn(f64) -> f64>(ecdf: &EmpiricalCdf, cdf: F) -> Result<f64, GofError> {
    ks_statistic_sorted(&ecdf.sorted, cdf)
}

/// [`ks_statistic`] over an already ascending, non-empty slice.
pub fn ks_statistic_sorted<F: Fn(f64) -> f64>(sorted: &[f64], cdf: F) -> Result<f64, GofError> {
    if sorted.is_empty() {
        return Err(GofError::EmptySample);
    }
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let fx = cdf(x);
        if !(0.0..=1.0).contains(&fx) {
            return Err(GofError::InvalidCdf { x, value: fx });
        }
        let above = (i + 1) as f64 / n - fx;
        let below = fx - i as f64 / n;
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// Asymptotic Kolmogorov tail `2 Σ_{k≥1} (-1)^{k-1} e^{-2 n k² d²}`,
/// clamped to [0, 1].
pub fn ks_tail_series(n: u64, d: f64, k_max: usize) -> f64 {
    let nd2 = n as f64 * d * d;
    if !(nd2 > 0.0) {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=k_max.max(1) {
        let kf = k as f64;
        let term = (-2.0 * nd2 * (kf * kf)).exp();
        if k % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        if term < KS_TERM_FLOOR {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Closed-form majorant `2e^{-2nd²} / (1 - e^{-8nd²})` of the Kolmogorov
/// tail. Exceeds 1 when `nd²` is small; it is only a bound.
pub fn ks_tail_upper_bound(n: u64, d: f64) -> Result<f64, GofError> {
    let nd2 = n as f64 * d * d;
    let denom = -(-8.0 * nd2).exp_m1();
    if !(nd2 > 0.0) || !(denom > 0.0) {
        return Err(GofError::DegenerateInput { nd2 });
    }
    let bound = 2.0 * (-2.0 * nd2).exp() / denom;
    if bound.is_finite() {
        Ok(bound)
    } else {
        Err(GofError::DegenerateInput { nd2 })
    }
}

fn check_sigma(sigma: f64) -> Result<(), GofError> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("sigma must be positive, got {sigma}")))
    }
}

fn check_epsilon(epsilon: f64) -> Result<(), GofError> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}

/// Relative importance `γ(n) = e^{-1/(2√(πn)σ)} / l(X)`.
pub fn gamma_n(n: u64, sigma: f64, l_x: f64) -> Result<f64, GofError> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    check_sigma(sigma)?;
    if !(l_x > 0.0 && l_x <= 1.0) {
        return Err(invalid(format!("l(X) must lie in (0, 1], got {l_x}")));
    }
    Ok(gamma_n_real(n as f64, sigma, l_x))
}

/// `γ` at a real-valued sample count; `gamma_n` restricted to integers.
pub fn gamma_n_real(n: f64, sigma: f64, l_x: f64) -> f64 {
    (-1.0 / (2.0 * (std::f64::consts::PI * n).sqrt() * sigma)).exp() / l_x
}

/// Smallest `n` with `|γ(∞) - γ(n)| ≤ ε`.
///
/// With `l_x` this is `⌈1 / (4πσ² ln²(1 - ε·l_x))⌉`. Without it, the
/// distribution-free count `⌈1 / (4πσ² ln²(1 - ε))⌉`, which needs no
/// knowledge of `l(X)` and is never larger since `l(X) ≤ 1`. Never less
/// than 1; saturates at `u64::MAX`.
pub fn required_samples(epsilon: f64, sigma: f64, l_x: Option<f64>) -> Result<u64, GofError> {
    check_epsilon(epsilon)?;
    check_sigma(sigma)?;
    let deviation = match l_x {
        None => epsilon,
        Some(l) if l > 0.0 && l <= 1.0 => epsilon * l,
        Some(l) => return Err(invalid(format!("l(X) must lie in (0, 1], got {l}"))),
    };
    let log = (-deviation).ln_1p();
    let bound = 1.0 / (4.0 * std::f64::consts::PI * sigma * sigma * log * log);
    Ok(ceil_count(bound))
}

fn ceil_count(bound: f64) -> u64 {
    let c = bound.ceil();
    if c.is_nan() || c < 1.0 {
        1
    } else if c >= u64::MAX as f64 {
        u64::MAX
    } else {
        c as u64
    }
}

fn check_beta_for_d(beta: f64) -> Result<(), GofError> {
    let limit = beta_validity_limit();
    if beta > 0.0 && beta <= limit {
        Ok(())
    } else {
        Err(invalid(format!("beta must lie in (0, {limit:.4}], got {beta}")))
    }
}

/// KS deviation `d = √(2πσ² ln(19/(9β))) · ln(1/(1-ε))`.
pub fn d_from(epsilon: f64, beta: f64, sigma: f64) -> Result<f64, GofError> {
    check_epsilon(epsilon)?;
    check_beta_for_d(beta)?;
    check_sigma(sigma)?;
    Ok(planning_scale(beta, sigma) * -(-epsilon).ln_1p())
}

/// DMIM deviation `ε = 1 - exp(-d / √(2πσ² ln(19/(9β))))`.
pub fn epsilon_from(d: f64, beta: f64, sigma: f64) -> Result<f64, GofError> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(invalid(format!("d must be positive, got {d}")));
    }
    if !(beta > 0.0 && beta < 19.0 / 9.0) {
        return Err(invalid(format!("beta must lie in (0, 19/9), got {beta}")));
    }
    check_sigma(sigma)?;
    Ok(-(-d / planning_scale(beta, sigma)).exp_m1())
}

fn planning_scale(beta: f64, sigma: f64) -> f64 {
    (2.0 * std::f64::consts::PI * sigma * sigma * (19.0 / (9.0 * beta)).ln()).sqrt()
}

/// Confidence level implied by `(d, ε, σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaEstimate {
    pub beta: f64,
    /// False when `beta > 1`, i.e. no probability level is guaranteed.
    pub achievable: bool,
}

/// `β = (19/9) · exp(-d² / (2πσ² ln²(1-ε)))`.
pub fn beta_from(d: f64, epsilon: f64, sigma: f64) -> Result<BetaEstimate, GofError> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(invalid(format!("d must be positive, got {d}")));
    }
    check_epsilon(epsilon)?;
    check_sigma(sigma)?;
    let log = (-epsilon).ln_1p();
    let beta = 19.0 / 9.0 * (-(d * d) / (2.0 * std::f64::consts::PI * sigma * sigma * log * log)).exp();
    Ok(BetaEstimate { beta, achievable: beta <= 1.0 })
}

/// A sampling plan: `n` samples keep `P{D_n > d} < β` at DMIM deviation ε.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GofPlan {
    pub d: f64,
    pub beta: f64,
    pub epsilon: f64,
    pub n: u64,
    pub sigma: f64,
}

impl GofPlan {
    /// Analytic majorant of `P{D_n > d}` at this plan.
    pub fn tail_bound(&self) -> Result<f64, GofError> {
        ks_tail_upper_bound(self.n, self.d)
    }
}

/// Plans with the distribution-free sample count.
pub fn make_plan(spec: &DistributionSpec, epsilon: f64, beta: f64) -> Result<GofPlan, GofError> {
    let sigma = spec.std_dev()?;
    plan_for_sigma(sigma, epsilon, beta)
}

pub fn plan_for_sigma(sigma: f64, epsilon: f64, beta: f64) -> Result<GofPlan, GofError> {
    let d = d_from(epsilon, beta, sigma)?;
    let n = required_samples(epsilon, sigma, None)?;
    Ok(GofPlan { d, beta, epsilon, n, sigma })
}
