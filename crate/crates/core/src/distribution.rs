//! Continuous distributions: three analytic families plus caller-supplied
//! densities.

use std::f64::consts::{PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use crate::measures::MeasureError;
use crate::quadrature::{Interval, Quadrature};

/// Allowed deviation of a custom density's total mass from 1.
pub const NORMALIZATION_TOL: f64 = 1e-8;

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A caller-supplied density with declared support.
///
/// Built through [`DistributionSpec::custom`], which checks that the density
/// integrates to one.
#[derive(Clone)]
pub struct CustomDensity {
    density: DensityFn,
    support: Interval,
    mean: Option<f64>,
    variance: Option<f64>,
}

impl CustomDensity {
    pub fn density(&self, x: f64) -> f64 {
        if self.support.contains(x) {
            (self.density)(x)
        } else {
            0.0
        }
    }

    pub fn support(&self) -> Interval {
        self.support
    }

    pub fn declared_mean(&self) -> Option<f64> {
        self.mean
    }

    pub fn declared_variance(&self) -> Option<f64> {
        self.variance
    }
}

impl fmt::Debug for CustomDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomDensity")
            .field("support", &self.support)
            .field("mean", &self.mean)
            .field("variance", &self.variance)
            .finish_non_exhaustive()
    }
}

/// The three analytic families used in the goodness-of-fit experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Normal,
    Uniform,
    Exponential,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Normal, Family::Uniform, Family::Exponential];

    pub fn name(self) -> &'static str {
        match self {
            Family::Normal => "normal",
            Family::Uniform => "uniform",
            Family::Exponential => "exponential",
        }
    }
}

#[derive(Debug, Clone)]
pub enum DistributionSpec {
    Uniform { a: f64, b: f64 },
    Normal { mu: f64, sigma: f64 },
    Exponential { lambda: f64 },
    Custom(CustomDensity),
}

fn invalid(msg: impl Into<String>) -> MeasureError {
    MeasureError::InvalidParams(msg.into())
}

impl DistributionSpec {
    pub fn uniform(a: f64, b: f64) -> Result<Self, MeasureError> {
        if a.is_finite() && b.is_finite() && a < b {
            Ok(Self::Uniform { a, b })
        } else {
            Err(invalid(format!("uniform requires finite a < b, got a = {a}, b = {b}")))
        }
    }

    pub fn normal(mu: f64, sigma: f64) -> Result<Self, MeasureError> {
        if mu.is_finite() && sigma.is_finite() && sigma > 0.0 {
            Ok(Self::Normal { mu, sigma })
        } else {
            Err(invalid(format!("normal requires finite mu and sigma > 0, got mu = {mu}, sigma = {sigma}")))
        }
    }

    pub fn exponential(lambda: f64) -> Result<Self, MeasureError> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(Self::Exponential { lambda })
        } else {
            Err(invalid(format!("exponential requires lambda > 0, got {lambda}")))
        }
    }

    /// Member of `family` with standard deviation `sigma`, parameterized as
    /// in the simulation protocol: zero-mean normal, zero-mean uniform of
    /// width 2√3σ, exponential with rate 1/σ.
    pub fn with_std_dev(family: Family, sigma: f64) -> Result<Self, MeasureError> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(invalid(format!("standard deviation must be positive, got {sigma}")));
        }
        match family {
            Family::Normal => Self::normal(0.0, sigma),
            Family::Uniform => {
                let half = 3f64.sqrt() * sigma;
                Self::uniform(-half, half)
            }
            Family::Exponential => Self::exponential(1.0 / sigma),
        }
    }

    /// A custom density over `support`. Fails unless the density integrates
    /// to 1 within [`NORMALIZATION_TOL`].
    pub fn custom<F>(
        density: F,
        support: Interval,
        mean: Option<f64>,
        variance: Option<f64>,
    ) -> Result<Self, MeasureError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if let Some(v) = variance {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("declared variance must be positive, got {v}")));
            }
        }
        if let Some(m) = mean {
            if !m.is_finite() {
                return Err(invalid(format!("declared mean must be finite, got {m}")));
            }
        }
        let custom = CustomDensity { density: Arc::new(density), support, mean, variance };
        let mass = Quadrature::default().integrate(|x| custom.density(x), support)?.value;
        if (mass - 1.0).abs() > NORMALIZATION_TOL {
            return Err(MeasureError::NotNormalized { mass });
        }
        Ok(Self::Custom(custom))
    }

    pub fn family(&self) -> Option<Family> {
        match self {
            Self::Uniform { .. } => Some(Family::Uniform),
            Self::Normal { .. } => Some(Family::Normal),
            Self::Exponential { .. } => Some(Family::Exponential),
            Self::Custom(_) => None,
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            Self::Uniform { a, b } => {
                if x >= a && x <= b {
                    1.0 / (b - a)
                } else {
                    0.0
                }
            }
            Self::Normal { mu, sigma } => {
                let z = (x - mu) / sigma;
                (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * sigma)
            }
            Self::Exponential { lambda } => {
                if x >= 0.0 {
                    lambda * (-lambda * x).exp()
                } else {
                    0.0
                }
            }
            Self::Custom(ref c) => c.density(x),
        }
    }

    /// Closed-form CDF; `None` for custom densities.
    pub fn cdf(&self, x: f64) -> Option<f64> {
        match *self {
            Self::Uniform { a, b } => Some(((x - a) / (b - a)).clamp(0.0, 1.0)),
            Self::Normal { mu, sigma } => Some(normal_cdf((x - mu) / sigma)),
            Self::Exponential { lambda } => Some(if x <= 0.0 { 0.0 } else { -(-lambda * x).exp_m1() }),
            Self::Custom(_) => None,
        }
    }

    pub fn support(&self) -> Interval {
        match *self {
            Self::Uniform { a, b } => Interval::new(a, b).expect("validated on construction"),
            Self::Normal { .. } => Interval::real_line(),
            Self::Exponential { .. } => Interval::new(0.0, f64::INFINITY).expect("valid"),
            Self::Custom(ref c) => c.support,
        }
    }

    /// Points where the density concentrates, handed to quadrature as
    /// initial breakpoints.
    pub(crate) fn quadrature_breaks(&self) -> Vec<f64> {
        match *self {
            Self::Uniform { .. } => Vec::new(),
            Self::Normal { mu, sigma } => {
                [-8.0, -3.0, -1.0, 0.0, 1.0, 3.0, 8.0].iter().map(|k| mu + k * sigma).collect()
            }
            Self::Exponential { lambda } => [1.0, 5.0, 40.0].iter().map(|k| k / lambda).collect(),
            Self::Custom(ref c) => match (c.mean, c.variance) {
                (Some(m), Some(v)) => {
                    let s = v.sqrt();
                    [-8.0, -1.0, 0.0, 1.0, 8.0].iter().map(|k| m + k * s).collect()
                }
                (Some(m), None) => vec![m],
                _ => Vec::new(),
            },
        }
    }

    pub fn mean(&self) -> Result<f64, MeasureError> {
        match *self {
            Self::Uniform { a, b } => Ok(0.5 * (a + b)),
            Self::Normal { mu, .. } => Ok(mu),
            Self::Exponential { lambda } => Ok(1.0 / lambda),
            Self::Custom(ref c) => match c.mean {
                Some(m) => Ok(m),
                None if self.tail_too_heavy(0.0, 1) => {
                    Err(MeasureError::InvalidParams("custom density has no finite mean".into()))
                }
                None => self.moment_by_quadrature(|x| x),
            },
        }
    }

    /// Variance; for custom densities without a declared value it is
    /// estimated by quadrature of `(x - mean)² f(x)`.
    pub fn variance(&self) -> Result<f64, MeasureError> {
        match *self {
            Self::Uniform { a, b } => Ok((b - a) * (b - a) / 12.0),
            Self::Normal { sigma, .. } => Ok(sigma * sigma),
            Self::Exponential { lambda } => Ok(1.0 / (lambda * lambda)),
            Self::Custom(ref c) => {
                if let Some(v) = c.variance {
                    return Ok(v);
                }
                let m = self.mean().map_err(|_| MeasureError::MissingVariance)?;
                if self.tail_too_heavy(m, 2) {
                    return Err(MeasureError::MissingVariance);
                }
                let v = self.moment_by_quadrature(|x| (x - m) * (x - m)).map_err(|_| MeasureError::MissingVariance)?;
                if v.is_finite() && v > 0.0 {
                    Ok(v)
                } else {
                    Err(MeasureError::MissingVariance)
                }
            }
        }
    }

    pub fn std_dev(&self) -> Result<f64, MeasureError> {
        self.variance().map(f64::sqrt)
    }

    /// Returns the same distribution translated by `c`. Custom densities are
    /// wrapped as `x ↦ f(x - c)` without re-validating normalization.
    pub fn shifted(&self, c: f64) -> Self {
        match self {
            Self::Uniform { a, b } => Self::Uniform { a: a + c, b: b + c },
            Self::Normal { mu, sigma } => Self::Normal { mu: mu + c, sigma: *sigma },
            Self::Exponential { lambda } => {
                let lambda = *lambda;
                Self::Custom(CustomDensity {
                    density: Arc::new(move |x| {
                        let y = x - c;
                        if y >= 0.0 {
                            lambda * (-lambda * y).exp()
                        } else {
                            0.0
                        }
                    }),
                    support: Interval::new(c, f64::INFINITY).expect("finite shift"),
                    mean: Some(1.0 / lambda + c),
                    variance: Some(1.0 / (lambda * lambda)),
                })
            }
            Self::Custom(inner) => {
                let f = Arc::clone(&inner.density);
                Self::Custom(CustomDensity {
                    density: Arc::new(move |x| f(x - c)),
                    support: inner.support.shifted(c),
                    mean: inner.mean.map(|m| m + c),
                    variance: inner.variance,
                })
            }
        }
    }

    // Quadrature of a divergent moment still "converges", because the mapped
    // integrand is only sampled at finitely many nodes. Reject tails where
    // |x - c|^{k+1} f(x) fails to decay between 1e6 and 1e9 scale units.
    fn tail_too_heavy(&self, center: f64, k: i32) -> bool {
        let support = self.support();
        let scale = 1.0 + center.abs();
        let probe = |dir: f64| {
            let h = |r: f64| r.powi(k + 1) * self.density(center + dir * r * scale).abs();
            let (near, far) = (h(1e6), h(1e9));
            far.is_finite() && far > 0.0 && far >= 0.5 * near
        };
        (support.upper() == f64::INFINITY && probe(1.0)) || (support.lower() == f64::NEG_INFINITY && probe(-1.0))
    }

    fn moment_by_quadrature(&self, g: impl Fn(f64) -> f64) -> Result<f64, MeasureError> {
        let r = Quadrature::default().integrate_with_breaks(
            |x| {
                let fx = self.density(x);
                if fx == 0.0 {
                    0.0
                } else {
                    g(x) * fx
                }
            },
            self.support(),
            &self.quadrature_breaks(),
        )?;
        Ok(r.value)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}
