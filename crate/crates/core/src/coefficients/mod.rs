//! Periodic coefficient functions and their aggregates.
//!
//! Every model parameter is a truncated trigonometric series with a common
//! period `omega`. Composite integrands (quotients, products with sampled
//! orbit components) are built as [`CoefficientExpr`] trees. The aggregates
//! used throughout the analysis are the period average [`hat_mean`] and the
//! global extremes [`sup_inf`].

mod expr;
pub mod quadrature;
mod sampled;

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expr::CoefficientExpr;
pub use sampled::SampledPeriodicFunction;

/// Grid density used to bracket extrema before golden-section refinement.
pub const EXTREMA_GRID: usize = 4096;
/// Width of the golden-section bracket at which refinement stops.
pub const EXTREMA_TOL: f64 = 1e-10;
/// Absolute tolerance on period averages computed by quadrature.
pub const MEAN_TOL: f64 = 1e-12;
/// Maximum bisection depth of the adaptive Simpson rule.
pub const MAX_QUADRATURE_DEPTH: u32 = 40;
/// Relative tolerance used when comparing periods of coefficients.
pub const PERIOD_MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoefficientError {
    #[error("period must be finite and strictly positive, got {0}")]
    InvalidPeriod(f64),
    #[error("harmonic index must be at least 1")]
    InvalidHarmonic,
    #[error("coefficient `{name}` has period {found}, expected {expected}")]
    PeriodMismatch {
        name: String,
        expected: f64,
        found: f64,
    },
    #[error("denominator `{node}` is too close to zero at t = {t}")]
    Domain { node: String, t: f64 },
    #[error("quadrature did not converge (best estimate {estimate})")]
    Quadrature { estimate: f64 },
    #[error("sampled function needs at least {min} samples, got {found}")]
    TooFewSamples { min: usize, found: usize },
    #[error("{0}")]
    Invalid(String),
}

/// Anything that is periodic in time and can be evaluated pointwise.
pub trait PeriodicFunction {
    fn period(&self) -> f64;

    fn value(&self, t: f64) -> Result<f64, CoefficientError>;

    /// Period average when it is known in closed form.
    fn exact_mean(&self) -> Option<f64> {
        None
    }
}

/// One term `sin * sin(k W t) + cos * cos(k W t)` of a trigonometric series,
/// with `W = 2 pi / omega`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub k: u32,
    #[serde(default)]
    pub sin: f64,
    #[serde(default)]
    pub cos: f64,
}

/// A truncated trigonometric series `mean + sum_k (s_k sin(k W t) + c_k cos(k W t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCoefficient")]
pub struct PeriodicCoefficient {
    mean: f64,
    harmonics: Vec<Harmonic>,
    #[serde(rename = "omega")]
    period: f64,
}

#[derive(Deserialize)]
struct RawCoefficient {
    mean: f64,
    #[serde(default)]
    harmonics: Vec<Harmonic>,
    omega: f64,
}

impl TryFrom<RawCoefficient> for PeriodicCoefficient {
    type Error = CoefficientError;

    fn try_from(raw: RawCoefficient) -> Result<Self, Self::Error> {
        PeriodicCoefficient::new(raw.omega, raw.mean, raw.harmonics)
    }
}

fn check_period(period: f64) -> Result<(), CoefficientError> {
    if period.is_finite() && period > 0.0 {
        Ok(())
    } else {
        Err(CoefficientError::InvalidPeriod(period))
    }
}

impl PeriodicCoefficient {
    pub fn new(
        period: f64,
        mean: f64,
        harmonics: Vec<Harmonic>,
    ) -> Result<Self, CoefficientError> {
        check_period(period)?;
        if harmonics.iter().any(|h| h.k == 0) {
            return Err(CoefficientError::InvalidHarmonic);
        }
        if !mean.is_finite() || harmonics.iter().any(|h| !h.sin.is_finite() || !h.cos.is_finite()) {
            return Err(CoefficientError::Invalid(
                "coefficient amplitudes must be finite".into(),
            ));
        }
        Ok(Self {
            mean,
            harmonics,
            period,
        })
    }

    /// A constant function, carried with the given period.
    pub fn constant(period: f64, value: f64) -> Self {
        assert!(period.is_finite() && period > 0.0, "period must be positive");
        Self {
            mean: value,
            harmonics: Vec::new(),
            period,
        }
    }

    /// Adds `amplitude * sin(k W t)`.
    pub fn with_sin(mut self, k: u32, amplitude: f64) -> Self {
        assert!(k >= 1, "harmonic index must be at least 1");
        self.harmonics.push(Harmonic {
            k,
            sin: amplitude,
            cos: 0.0,
        });
        self
    }

    /// Adds `amplitude * cos(k W t)`.
    pub fn with_cos(mut self, k: u32, amplitude: f64) -> Self {
        assert!(k >= 1, "harmonic index must be at least 1");
        self.harmonics.push(Harmonic {
            k,
            sin: 0.0,
            cos: amplitude,
        });
        self
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    pub fn is_constant(&self) -> bool {
        self.harmonics.iter().all(|h| h.sin == 0.0 && h.cos == 0.0)
    }

    /// Base angular frequency `2 pi / omega`.
    pub fn angular_frequency(&self) -> f64 {
        TAU / self.period
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.harmonics.is_empty() {
            return self.mean;
        }
        let w = self.angular_frequency();
        let tr = t.rem_euclid(self.period);
        self.harmonics.iter().fold(self.mean, |acc, h| {
            let (s, c) = (f64::from(h.k) * w * tr).sin_cos();
            acc + h.sin * s + h.cos * c
        })
    }

    /// Exact value of the integral over `[t0, t1]`.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        let w = self.angular_frequency();
        let mut total = self.mean * (t1 - t0);
        let (p0, p1) = (t0.rem_euclid(self.period), t1.rem_euclid(self.period));
        for h in &self.harmonics {
            let kw = f64::from(h.k) * w;
            let (s0, c0) = (kw * p0).sin_cos();
            let (s1, c1) = (kw * p1).sin_cos();
            total += h.sin * (c0 - c1) / kw + h.cos * (s1 - s0) / kw;
        }
        total
    }

    /// The same function observed with a time offset: `t -> f(t + offset)`.
    pub fn shifted(&self, offset: f64) -> Self {
        let w = self.angular_frequency();
        let harmonics = self
            .harmonics
            .iter()
            .map(|h| {
                let (so, co) = (f64::from(h.k) * w * offset).sin_cos();
                Harmonic {
                    k: h.k,
                    sin: h.sin * co - h.cos * so,
                    cos: h.sin * so + h.cos * co,
                }
            })
            .collect();
        Self {
            mean: self.mean,
            harmonics,
            period: self.period,
        }
    }

    pub fn same_period(&self, other: f64) -> bool {
        (self.period - other).abs() <= PERIOD_MATCH_TOL * self.period.max(other)
    }
}

impl PeriodicFunction for PeriodicCoefficient {
    fn period(&self) -> f64 {
        self.period
    }

    fn value(&self, t: f64) -> Result<f64, CoefficientError> {
        Ok(self.eval(t))
    }

    fn exact_mean(&self) -> Option<f64> {
        Some(self.mean)
    }
}

/// Period average `(1/omega) * integral_0^omega f(t) dt`.
///
/// Series coefficients return their mean term exactly; everything else goes
/// through adaptive Simpson quadrature with absolute tolerance [`MEAN_TOL`].
pub fn hat_mean<F: PeriodicFunction + ?Sized>(f: &F) -> Result<f64, CoefficientError> {
    if let Some(m) = f.exact_mean() {
        return Ok(m);
    }
    let period = f.period();
    check_period(period)?;
    let integral = quadrature::adaptive_simpson(|t| f.value(t), 0.0, period, MEAN_TOL * period)?;
    Ok(integral / period)
}

/// Global extremes over one period with their locations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Extremes {
    pub max: f64,
    pub argmax: f64,
    pub min: f64,
    pub argmin: f64,
}

pub fn extremes<F: PeriodicFunction + ?Sized>(f: &F) -> Result<Extremes, CoefficientError> {
    let period = f.period();
    check_period(period)?;
    let (min, argmin) = quadrature::periodic_minimum(|t| f.value(t), period, EXTREMA_GRID, EXTREMA_TOL)?;
    let (neg_max, argmax) =
        quadrature::periodic_minimum(|t| f.value(t).map(|v| -v), period, EXTREMA_GRID, EXTREMA_TOL)?;
    Ok(Extremes {
        max: -neg_max,
        argmax,
        min,
        argmin,
    })
}

/// `(sup, inf)` of `f` over one period.
pub fn sup_inf<F: PeriodicFunction + ?Sized>(f: &F) -> Result<(f64, f64), CoefficientError> {
    let e = extremes(f)?;
    Ok((e.max, e.min))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PositivityCheck {
    pub positive: bool,
    pub min: f64,
    /// Location of the minimum when the function is not strictly positive.
    pub violation: Option<f64>,
}

/// True iff the infimum over one period is strictly positive.
pub fn check_positive<F: PeriodicFunction + ?Sized>(f: &F) -> Result<PositivityCheck, CoefficientError> {
    let period = f.period();
    check_period(period)?;
    let (min, argmin) = quadrature::periodic_minimum(|t| f.value(t), period, EXTREMA_GRID, EXTREMA_TOL)?;
    let positive = min > 0.0;
    Ok(PositivityCheck {
        positive,
        min,
        violation: (!positive).then_some(argmin),
    })
}
