//! Differential message importance measure (DMIM) for continuous
//! distributions, and Kolmogorov–Smirnov sample-size planning for
//! estimating it from data.
//!
//! ```
//! use dmim::{measures, DistributionSpec};
//!
//! let l = measures::dmim(&DistributionSpec::exponential(1.0).unwrap()).unwrap();
//! assert!((l - (1.0 - (-1.0f64).exp())).abs() < 1e-15);
//! ```

// `!(x > 0.0)` is how parameter checks reject NaN along with the range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod distribution;
pub mod gof;
pub mod measures;
pub mod montecarlo;
pub mod output;
pub mod quadrature;
pub mod rng;

pub use distribution::{CustomDensity, DistributionSpec, Family};
pub use gof::{EmpiricalCdf, GofError, GofPlan};
pub use measures::{MeasureError, SeriesResult};
pub use montecarlo::{SimConfig, SimError, TrialReport};
pub use quadrature::{Interval, Quadrature, QuadratureError, QuadratureResult};
