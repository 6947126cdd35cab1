//! Seeded Monte Carlo estimation of `P{D_n > d}`.
//!
//! Every trial draws from its own Philox stream keyed by the master seed and
//! addressed by `(epsilon index, trial index)`, so results do not depend on
//! how many threads run the trials or in which order they finish.

use rayon::prelude::*;
use thiserror::Error;

use crate::distribution::{DistributionSpec, Family};
use crate::gof::{self, GofError};
use crate::measures::{self, MeasureError};
use crate::rng::CounterRng;

pub const DEFAULT_TRIALS: usize = 10_000;
pub const DEFAULT_SEED: u64 = 0x00D1_5EED;
pub const DEFAULT_GRID_POINTS: usize = 40;
pub const DEFAULT_EPS_MIN: f64 = 1e-3;
pub const DEFAULT_EPS_MAX: f64 = 1e-1;

/// Largest per-trial sample count the harness will allocate.
pub const MAX_TRIAL_SAMPLES: u64 = 100_000_000;

/// Stream id used by [`sample`]; trial streams use the epsilon index.
const STANDALONE_STREAM: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("sampling is only supported for the analytic families")]
    UnsupportedFamily,
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("could not build thread pool: {0}")]
    ThreadPool(String),
    #[error(transparent)]
    Gof(#[from] GofError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

/// How the KS deviation `d` is chosen for each grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    /// `d = d_from(ε, β, σ)` per grid point.
    FromBeta(f64),
}

/// Which sample-count bound sets `n` for each ε.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleRule {
    DistributionFree,
    /// Uses the distribution's own DMIM; never fewer samples than
    /// `DistributionFree`.
    WithLX,
}

#[derive(Debug, Clone)]
pub struct SimConfig {
    pub spec: DistributionSpec,
    pub epsilon_grid: Vec<f64>,
    pub threshold: Threshold,
    pub trials: usize,
    pub master_seed: u64,
    pub n_rule: SampleRule,
    /// Worker threads; `None` uses rayon's global pool.
    pub threads: Option<usize>,
}

impl SimConfig {
    pub fn new(spec: DistributionSpec, threshold: Threshold) -> Self {
        Self {
            spec,
            epsilon_grid: log_space(DEFAULT_EPS_MIN, DEFAULT_EPS_MAX, DEFAULT_GRID_POINTS),
            threshold,
            trials: DEFAULT_TRIALS,
            master_seed: DEFAULT_SEED,
            n_rule: SampleRule::DistributionFree,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidConfig(m));
        if self.spec.family().is_none() {
            return Err(SimError::UnsupportedFamily);
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.epsilon_grid.is_empty() {
            return bad("epsilon grid is empty".into());
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("epsilon {e} outside (0, 1)"));
        }
        match self.threshold {
            Threshold::Fixed(d) if !(d > 0.0 && d.is_finite()) => bad(format!("d must be positive, got {d}")),
            Threshold::FromBeta(b) if !(b > 0.0 && b <= 1.0) => bad(format!("beta must lie in (0, 1], got {b}")),
            _ => Ok(()),
        }?;
        if self.threads == Some(0) {
            return bad("threads must be at least 1".into());
        }
        Ok(())
    }
}

/// Exceedance estimate at one grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialReport {
    pub epsilon: f64,
    pub n: u64,
    pub d: f64,
    pub exceedance_estimate: f64,
    pub trials: usize,
    pub std_error: f64,
    pub seed: u64,
}

/// `points` values log-spaced from `lo` to `hi` inclusive.
pub fn log_space(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..points).map(|i| 10f64.powf(a + (b - a) * i as f64 / (points - 1) as f64)).collect()
        }
    }
}

/// Binomial standard error `√(p(1-p)/trials)`.
pub fn std_error(p: f64, trials: usize) -> f64 {
    (p * (1.0 - p) / trials as f64).sqrt()
}

/// Draws `n` i.i.d. samples from `spec`. Same `(spec, n, seed)`, same bits.
pub fn sample(spec: &DistributionSpec, n: usize, seed: u64) -> Result<Vec<f64>, SimError> {
    let mut rng = CounterRng::new(seed, STANDALONE_STREAM, 0);
    let mut out = Vec::with_capacity(n);
    fill_samples(spec, n, &mut rng, &mut out)?;
    Ok(out)
}

/// Replaces the contents of `out` with `n` draws from `rng`.
///
/// Uniform and exponential use the inverse CDF; normal uses Marsaglia's
/// polar method.
pub fn fill_samples(
    spec: &DistributionSpec,
    n: usize,
    rng: &mut CounterRng,
    out: &mut Vec<f64>,
) -> Result<(), SimError> {
    out.clear();
    match *spec {
        DistributionSpec::Uniform { a, b } => {
            let w = b - a;
            out.extend((0..n).map(|_| a + w * rng.next_f64()));
        }
        DistributionSpec::Exponential { lambda } => {
            out.extend((0..n).map(|_| -rng.next_f64_open_closed().ln() / lambda));
        }
        DistributionSpec::Normal { mu, sigma } => {
            while out.len() < n {
                let (z0, z1) = polar_pair(rng);
                out.push(mu + sigma * z0);
                if out.len() < n {
                    out.push(mu + sigma * z1);
                }
            }
        }
        DistributionSpec::Custom(_) => return Err(SimError::UnsupportedFamily),
    }
    Ok(())
}

#[inline]
fn polar_pair(rng: &mut CounterRng) -> (f64, f64) {
    loop {
        let u = 2.0 * rng.next_f64() - 1.0;
        let v = 2.0 * rng.next_f64() - 1.0;
        let s = u * u + v * v;
        if s > 0.0 && s < 1.0 {
            let k = (-2.0 * s.ln() / s).sqrt();
            return (u * k, v * k);
        }
    }
}

fn run_in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, SimError> {
    match threads {
        None => Ok(job()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| SimError::ThreadPool(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Counts trials in which `D_n > d` (strictly).
fn count_exceedances(
    spec: &DistributionSpec,
    n: u64,
    d: f64,
    trials: usize,
    seed: u64,
    stream: u64,
) -> Result<usize, SimError> {
    if n > MAX_TRIAL_SAMPLES {
        return Err(SimError::InvalidConfig(format!(
            "n = {n} exceeds the per-trial limit of {MAX_TRIAL_SAMPLES} samples"
        )));
    }
    let n = n as usize;
    let cdf = |x: f64| spec.cdf(x).expect("analytic family");
    (0..trials)
        .into_par_iter()
        .map_init(
            || Vec::with_capacity(n),
            |buf, trial| -> Result<bool, SimError> {
                let mut rng = CounterRng::new(seed, stream, trial as u64);
                fill_samples(spec, n, &mut rng, buf)?;
                buf.sort_unstable_by(f64::total_cmp);
                Ok(gof::ks_statistic_sorted(buf, cdf)? > d)
            },
        )
        .try_fold(|| 0usize, |acc, hit| hit.map(|h| acc + usize::from(h)))
        .try_reduce(|| 0, |a, b| Ok(a + b))
}

/// Estimates `P{D_n > d}` at every ε of the grid.
pub fn estimate_exceedance(config: &SimConfig) -> Result<Vec<TrialReport>, SimError> {
    config.validate()?;
    let sigma = config.spec.std_dev()?;
    let l_x = match config.n_rule {
        SampleRule::DistributionFree => None,
        SampleRule::WithLX => Some(measures::dmim(&config.spec)?),
    };
    run_in_pool(config.threads, || {
        config
            .epsilon_grid
            .iter()
            .enumerate()
            .map(|(idx, &epsilon)| {
                let n = gof::required_samples(epsilon, sigma, l_x)?;
                let d = match config.threshold {
                    Threshold::Fixed(d) => d,
                    Threshold::FromBeta(beta) => gof::d_from(epsilon, beta, sigma)?,
                };
                let hits = count_exceedances(&config.spec, n, d, config.trials, config.master_seed, idx as u64)?;
                let p = hits as f64 / config.trials as f64;
                Ok(TrialReport {
                    epsilon,
                    n,
                    d,
                    exceedance_estimate: p,
                    trials: config.trials,
                    std_error: std_error(p, config.trials),
                    seed: config.master_seed,
                })
            })
            .collect()
    })?
}

/// Empirical check of the planning guarantee `P{D_n > d} < β`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Theorem2Check {
    pub estimate: f64,
    pub std_error: f64,
    /// The target level β.
    pub bound: f64,
    /// `2e^{-2nd²}/(1 - e^{-8nd²})` at the planned `(n, d)`.
    pub analytic_bound: f64,
    pub n: u64,
    pub d: f64,
    /// `estimate + 3·std_error < β`.
    pub holds: bool,
}

/// Simulates at the planned `(n, d)` for `(ε, β)` and reports whether the
/// estimate stays below β with a three-standard-error margin.
pub fn verify_theorem2(
    spec: &DistributionSpec,
    epsilon: f64,
    beta: f64,
    trials: usize,
    seed: u64,
) -> Result<Theorem2Check, SimError> {
    let mut config = SimConfig::new(spec.clone(), Threshold::FromBeta(beta));
    config.epsilon_grid = vec![epsilon];
    config.trials = trials;
    config.master_seed = seed;
    let report = estimate_exceedance(&config)?[0];
    let analytic_bound = gof::ks_tail_upper_bound(report.n, report.d)?;
    Ok(Theorem2Check {
        estimate: report.exceedance_estimate,
        std_error: report.std_error,
        bound: beta,
        analytic_bound,
        n: report.n,
        d: report.d,
        holds: report.exceedance_estimate + 3.0 * report.std_error < beta,
    })
}

/// Convenience for the simulation protocol's families.
pub fn family_spec(family: Family, sigma: f64) -> Result<DistributionSpec, SimError> {
    Ok(DistributionSpec::with_std_dev(family, sigma)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_is_deterministic() {
        for family in Family::ALL {
            let spec = family_spec(family, 1.0).unwrap();
            assert_eq!(sample(&spec, 257, 42).unwrap(), sample(&spec, 257, 42).unwrap());
            assert_ne!(sample(&spec, 16, 42).unwrap(), sample(&spec, 16, 43).unwrap());
        }
    }

    #[test]
    fn odd_normal_count() {
        let spec = family_spec(Family::Normal, 1.0).unwrap();
        let s = sample(&spec, 3, 1).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(&sample(&spec, 4, 1).unwrap()[..3], &s[..]);
    }

    #[test]
    fn custom_sampling_unsupported() {
        let spec =
            DistributionSpec::custom(|_| 1.0, crate::quadrature::Interval::new(0.0, 1.0).unwrap(), None, None).unwrap();
        assert_eq!(sample(&spec, 1, 0), Err(SimError::UnsupportedFamily));
    }

    #[test]
    fn log_grid() {
        let g = log_space(1e-3, 1e-1, 3);
        assert_eq!(g.len(), 3);
        assert!((g[1] - 1e-2).abs() < 1e-16);
        assert_eq!(log_space(1e-3, 1e-1, 1), vec![1e-3]);
        assert_eq!(log_space(1e-3, 1e-1, 40).len(), 40);
    }

    #[test]
    fn config_validation() {
        let spec = family_spec(Family::Normal, 1.0).unwrap();
        let mut c = SimConfig::new(spec, Threshold::Fixed(0.01));
        assert!(c.validate().is_ok());
        assert_eq!(c.trials, 10_000);
        c.trials = 0;
        assert!(c.validate().is_err());
        c.trials = 1;
        c.epsilon_grid = vec![0.5, 1.0];
        assert!(c.validate().is_err());
        c.epsilon_grid = vec![];
        assert!(c.validate().is_err());
        c.epsilon_grid = vec![0.1];
        c.threshold = Threshold::FromBeta(1.5);
        assert!(c.validate().is_err());
        c.threshold = Threshold::Fixed(-1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn huge_threshold_never_exceeded() {
        let spec = family_spec(Family::Exponential, 1.0).unwrap();
        let mut c = SimConfig::new(spec, Threshold::Fixed(1.0));
        c.trials = 50;
        c.epsilon_grid = log_space(1e-2, 1e-1, 4);
        for r in estimate_exceedance(&c).unwrap() {
            assert_eq!(r.exceedance_estimate, 0.0);
            assert_eq!(r.std_error, 0.0);
        }
    }

    #[test]
    fn with_lx_rule_needs_more_samples() {
        let spec = family_spec(Family::Uniform, 1.0).unwrap();
        let mut c = SimConfig::new(spec, Threshold::Fixed(0.1));
        c.trials = 1;
        c.epsilon_grid = vec![0.01];
        let free = estimate_exceedance(&c).unwrap()[0].n;
        c.n_rule = SampleRule::WithLX;
        let sharp = estimate_exceedance(&c).unwrap()[0].n;
        assert!(sharp > free);
    }
}
