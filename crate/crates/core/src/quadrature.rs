//! Globally adaptive Gauss–Kronrod (7/15) integration.
//!
//! Subintervals live in a max-heap keyed on their local error estimate; the
//! worst one is bisected until the summed estimate meets
//! `max(abs_tol, rel_tol * |value|)`. Infinite endpoints are folded onto a
//! finite parameter interval by a rational substitution before any
//! subdivision happens, so every subinterval is integrated with the same
//! finite rule.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

pub const DEFAULT_ABS_TOL: f64 = 1e-12;
pub const DEFAULT_REL_TOL: f64 = 1e-10;
pub const DEFAULT_MAX_SUBDIVISIONS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuadratureError {
    #[error("subdivision budget of {budget} intervals exhausted (estimated error {error_estimate:e})")]
    NonConvergent { budget: usize, error_estimate: f64 },
    #[error("invalid integration domain [{lower}, {upper}]")]
    InvalidDomain { lower: f64, upper: f64 },
    #[error("integrand returned a non-finite value {value} at x = {x}")]
    NonFinite { x: f64, value: f64 },
    #[error("tolerances must be positive and finite (abs_tol = {abs_tol}, rel_tol = {rel_tol})")]
    InvalidTolerance { abs_tol: f64, rel_tol: f64 },
}

/// An integration domain on the extended real line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lower: f64,
    upper: f64,
}

impl Interval {
    pub fn new(lower: f64, upper: f64) -> Result<Self, QuadratureError> {
        let ok =
            !lower.is_nan() && !upper.is_nan() && lower < upper && lower != f64::INFINITY && upper != f64::NEG_INFINITY;
        if ok {
            Ok(Self { lower, upper })
        } else {
            Err(QuadratureError::InvalidDomain { lower, upper })
        }
    }

    pub fn real_line() -> Self {
        Self { lower: f64::NEG_INFINITY, upper: f64::INFINITY }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn is_finite(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Shifts both endpoints by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { lower: self.lower + c, upper: self.upper + c }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions: usize,
}

/// How a parameter `t` in the working interval maps to `x` in the domain.
#[derive(Debug, Clone, Copy)]
enum Mapping {
    Identity,
    /// `x = origin + t/(1-t)`, `t ∈ [0, 1)`.
    UpperTail {
        origin: f64,
    },
    /// `x = origin - t/(1-t)`, `t ∈ [0, 1)`.
    LowerTail {
        origin: f64,
    },
    /// `x = t/(1-t²)`, `t ∈ (-1, 1)`.
    BothTails,
}

impl Mapping {
    #[inline]
    fn apply(self, t: f64) -> (f64, f64) {
        match self {
            Mapping::Identity => (t, 1.0),
            Mapping::UpperTail { origin } => {
                let s = 1.0 - t;
                (origin + t / s, 1.0 / (s * s))
            }
            Mapping::LowerTail { origin } => {
                let s = 1.0 - t;
                (origin - t / s, 1.0 / (s * s))
            }
            Mapping::BothTails => {
                let s = 1.0 - t * t;
                (t / s, (1.0 + t * t) / (s * s))
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    mapping: Mapping,
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Adaptive integrator configuration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Self { abs_tol: DEFAULT_ABS_TOL, rel_tol: DEFAULT_REL_TOL, max_subdivisions: DEFAULT_MAX_SUBDIVISIONS }
    }
}

impl Quadrature {
    pub fn new(abs_tol: f64, rel_tol: f64) -> Self {
        Self { abs_tol, rel_tol, ..Self::default() }
    }

    pub fn with_max_subdivisions(mut self, max_subdivisions: usize) -> Self {
        self.max_subdivisions = max_subdivisions.max(1);
        self
    }

    pub fn integrate<F>(&self, f: F, domain: Interval) -> Result<QuadratureResult, QuadratureError>
    where
        F: Fn(f64) -> f64,
    {
        self.integrate_with_breaks(f, domain, &[])
    }

    /// Integrates over `domain` with the initial partition split at every
    /// finite point of `breaks` strictly inside the domain. Useful when the
    /// caller knows where the integrand concentrates (a mode, a kink).
    pub fn integrate_with_breaks<F>(
        &self,
        f: F,
        domain: Interval,
        breaks: &[f64],
    ) -> Result<QuadratureResult, QuadratureError>
    where
        F: Fn(f64) -> f64,
    {
        let tols_ok = self.abs_tol > 0.0 && self.rel_tol > 0.0 && self.abs_tol.is_finite() && self.rel_tol.is_finite();
        if !tols_ok {
            return Err(QuadratureError::InvalidTolerance { abs_tol: self.abs_tol, rel_tol: self.rel_tol });
        }
        // Re-validate: Interval fields are private but callers may hand us a
        // copy built before a shift produced NaN endpoints.
        let domain = Interval::new(domain.lower, domain.upper)?;

        let mut points: Vec<f64> =
            breaks.iter().copied().filter(|p| p.is_finite() && *p > domain.lower && *p < domain.upper).collect();
        points.sort_by(f64::total_cmp);
        points.dedup();

        let mut pieces = Vec::with_capacity(points.len() + 1);
        let mut edges = Vec::with_capacity(points.len() + 2);
        edges.push(domain.lower);
        edges.extend(points);
        edges.push(domain.upper);
        for w in edges.windows(2) {
            pieces.push(Self::initial_piece(w[0], w[1]));
        }

        let rule = Evaluator { f: &f, domain };
        let mut heap = BinaryHeap::with_capacity(64);
        for (mapping, a, b) in pieces {
            let (value, error) = rule.gauss_kronrod(mapping, a, b)?;
            heap.push(Segment { mapping, a, b, value, error });
        }

        loop {
            let (value, error) = heap.iter().fold((0.0, 0.0), |(v, e), s| (v + s.value, e + s.error));
            // Requests tighter than ~100 ulp of the result are capped there;
            // per-segment roundoff floors make them unreachable otherwise.
            let target = self.abs_tol.max(self.rel_tol * value.abs()).max(100.0 * f64::EPSILON * value.abs());
            if error <= target {
                return Ok(QuadratureResult { value, error_estimate: error, subdivisions: heap.len() });
            }
            if heap.len() >= self.max_subdivisions {
                return Err(QuadratureError::NonConvergent { budget: self.max_subdivisions, error_estimate: error });
            }
            // Refine a batch of the worst segments before re-summing; the
            // O(len) re-sum would otherwise dominate deep refinements.
            let batch = (heap.len() / 8).max(1);
            for _ in 0..batch {
                let Some(worst) = heap.pop() else { break };
                let mid = 0.5 * (worst.a + worst.b);
                if mid <= worst.a || mid >= worst.b {
                    return Err(QuadratureError::NonConvergent { budget: heap.len() + 1, error_estimate: error });
                }
                for (a, b) in [(worst.a, mid), (mid, worst.b)] {
                    let (value, error) = rule.gauss_kronrod(worst.mapping, a, b)?;
                    heap.push(Segment { mapping: worst.mapping, a, b, value, error });
                }
                if heap.len() >= self.max_subdivisions {
                    break;
                }
            }
        }
    }

    fn initial_piece(lower: f64, upper: f64) -> (Mapping, f64, f64) {
        match (lower.is_finite(), upper.is_finite()) {
            (true, true) => (Mapping::Identity, lower, upper),
            (true, false) => (Mapping::UpperTail { origin: lower }, 0.0, 1.0),
            (false, true) => (Mapping::LowerTail { origin: upper }, 0.0, 1.0),
            (false, false) => (Mapping::BothTails, -1.0, 1.0),
        }
    }
}

/// Integrates `f` over `domain` with the given tolerances and the default
/// subdivision budget.
pub fn integrate<F>(f: F, domain: Interval, abs_tol: f64, rel_tol: f64) -> Result<QuadratureResult, QuadratureError>
where
    F: Fn(f64) -> f64,
{
    Quadrature::new(abs_tol, rel_tol).integrate(f, domain)
}

struct Evaluator<'a, F> {
    f: &'a F,
    domain: Interval,
}

impl<F: Fn(f64) -> f64> Evaluator<'_, F> {
    #[inline]
    fn eval(&self, mapping: Mapping, t: f64) -> Result<f64, QuadratureError> {
        let (x, jac) = mapping.apply(t);
        if !x.is_finite() || !jac.is_finite() {
            // Only reachable when a node rounds onto t = ±1; the integrand is
            // required to decay there.
            return Ok(0.0);
        }
        let mut fx = (self.f)(x);
        if !fx.is_finite() {
            fx = self.retry_at_edge(x).ok_or(QuadratureError::NonFinite { x, value: fx })?;
        }
        if fx == 0.0 {
            return Ok(0.0);
        }
        Ok(fx * jac)
    }

    /// A node that rounded onto a finite endpoint where the density is
    /// singular is nudged a few ulps into the interior.
    fn retry_at_edge(&self, x: f64) -> Option<f64> {
        let step: fn(f64) -> f64 = if x <= self.domain.lower {
            f64::next_up
        } else if x >= self.domain.upper {
            f64::next_down
        } else {
            return None;
        };
        let mut y = x;
        for _ in 0..4 {
            y = step(y);
            let fy = (self.f)(y);
            if fy.is_finite() {
                return Some(fy);
            }
        }
        None
    }

    fn gauss_kronrod(&self, mapping: Mapping, a: f64, b: f64) -> Result<(f64, f64), QuadratureError> {
        let center = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let fc = self.eval(mapping, center)?;
        let mut kronrod = fc * WGK[7];
        let mut gauss = fc * WG[3];
        let mut res_abs = kronrod.abs();
        let mut fv1 = [0.0; 7];
        let mut fv2 = [0.0; 7];

        for j in 0..7 {
            let dx = half * XGK[j];
            let f1 = self.eval(mapping, center - dx)?;
            let f2 = self.eval(mapping, center + dx)?;
            fv1[j] = f1;
            fv2[j] = f2;
            kronrod += WGK[j] * (f1 + f2);
            res_abs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                gauss += WG[j / 2] * (f1 + f2);
            }
        }

        let mean = 0.5 * kronrod;
        let mut res_asc = WGK[7] * (fc - mean).abs();
        for j in 0..7 {
            res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
        }

        let value = kronrod * half;
        let res_abs = res_abs * half.abs();
        let res_asc = res_asc * half.abs();
        let error = rescale_error((kronrod - gauss) * half, res_abs, res_asc);
        Ok((value, error))
    }
}

// QUADPACK's heuristic: sharpen the raw |K - G| difference, but never claim
// better than a few dozen ulps of the integral of |f|.
fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut err = err.abs();
    if res_asc != 0.0 && err != 0.0 {
        let scale = (200.0 * err / res_asc).powf(1.5);
        err = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    err
}

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn q() -> Quadrature {
        Quadrature::default()
    }

    #[test]
    fn constant_on_unit_interval() {
        let r = q().integrate(|_| 1.0, Interval::new(0.0, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-14);
        assert!(r.subdivisions >= 1);
        assert!(r.error_estimate >= 0.0);
    }

    #[test]
    fn exponential_density_on_half_line() {
        let r = q().integrate(|x| (-x).exp(), Interval::new(0.0, f64::INFINITY).unwrap()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn odd_integrand_on_real_line() {
        let f = |x: f64| x * (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let r = q().integrate(f, Interval::real_line()).unwrap();
        assert_abs_diff_eq!(r.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn lower_tail_mapping() {
        // ∫_{-∞}^0 e^{x} dx = 1
        let r = q().integrate(f64::exp, Interval::new(f64::NEG_INFINITY, 0.0).unwrap()).unwrap();
        assert_abs_diff_eq!(r.value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn error_estimate_meets_tolerance() {
        let r = q().integrate(|x| x.sin().powi(2), Interval::new(0.0, 10.0).unwrap()).unwrap();
        let exact = 5.0 - (20.0f64).sin() / 4.0;
        assert!(r.error_estimate <= DEFAULT_ABS_TOL.max(DEFAULT_REL_TOL * r.value.abs()));
        assert_abs_diff_eq!(r.value, exact, epsilon = 1e-10);
    }

    #[test]
    fn integrable_edge_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2; the density blows up at the left endpoint.
        let r = Quadrature::new(1e-10, 1e-10).integrate(|x| 1.0 / x.sqrt(), Interval::new(0.0, 1.0).unwrap()).unwrap();
        assert_abs_diff_eq!(r.value, 2.0, epsilon = 1e-8);
    }

    #[test]
    fn breakpoints_are_respected() {
        // |x| has a kink at 0.
        let r = q().integrate_with_breaks(f64::abs, Interval::new(-1.0, 2.0).unwrap(), &[0.0, 5.0, f64::NAN]).unwrap();
        assert_abs_diff_eq!(r.value, 2.5, epsilon = 1e-13);
    }

    #[test]
    fn invalid_domain() {
        assert!(matches!(Interval::new(1.0, 1.0), Err(QuadratureError::InvalidDomain { .. })));
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
        assert!(Interval::new(f64::INFINITY, f64::INFINITY).is_err());
    }

    #[test]
    fn invalid_tolerance() {
        let err = integrate(|x| x, Interval::new(0.0, 1.0).unwrap(), 0.0, 1e-10).unwrap_err();
        assert!(matches!(err, QuadratureError::InvalidTolerance { .. }));
    }

    #[test]
    fn non_finite_interior_value() {
        let err = q()
            .integrate(|x| if x > 0.3 && x < 0.7 { f64::NAN } else { 1.0 }, Interval::new(0.0, 1.0).unwrap())
            .unwrap_err();
        assert!(matches!(err, QuadratureError::NonFinite { .. }));
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let err =
            q().with_max_subdivisions(4).integrate(|x| (1.0 / x).sin(), Interval::new(1e-4, 1.0).unwrap()).unwrap_err();
        assert!(matches!(err, QuadratureError::NonConvergent { .. }));
    }
}
