use super::{check_period, CoefficientError, PeriodicFunction};

/// A periodic function known on a uniform grid over one period and
/// interpolated by piecewise cubic Hermite polynomials.
///
/// Slopes are either supplied (exact derivatives) or estimated by fourth
/// order periodic central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPeriodicFunction {
    period: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl SampledPeriodicFunction {
    pub const MIN_SAMPLES: usize = 16;

    /// `values[k]` is the function at `t = k * period / values.len()`.
    pub fn new(period: f64, values: Vec<f64>) -> Result<Self, CoefficientError> {
        check_period(period)?;
        let m = values.len();
        if m < Self::MIN_SAMPLES {
            return Err(CoefficientError::TooFewSamples {
                min: Self::MIN_SAMPLES,
                found: m,
            });
        }
        let h = period / m as f64;
        let at = |k: isize| values[k.rem_euclid(m as isize) as usize];
        let slopes = (0..m as isize)
            .map(|k| (at(k - 2) - 8.0 * at(k - 1) + 8.0 * at(k + 1) - at(k + 2)) / (12.0 * h))
            .collect();
        Ok(Self {
            period,
            values,
            slopes,
        })
    }

    pub fn with_slopes(
        period: f64,
        values: Vec<f64>,
        slopes: Vec<f64>,
    ) -> Result<Self, CoefficientError> {
        check_period(period)?;
        if values.len() < Self::MIN_SAMPLES {
            return Err(CoefficientError::TooFewSamples {
                min: Self::MIN_SAMPLES,
                found: values.len(),
            });
        }
        if slopes.len() != values.len() {
            return Err(CoefficientError::Invalid(format!(
                "{} slopes for {} samples",
                slopes.len(),
                values.len()
            )));
        }
        Ok(Self {
            period,
            values,
            slopes,
        })
    }

    pub fn from_fn<F>(period: f64, samples: usize, mut f: F) -> Result<Self, CoefficientError>
    where
        F: FnMut(f64) -> f64,
    {
        let h = period / samples as f64;
        Self::new(period, (0..samples).map(|k| f(h * k as f64)).collect())
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn samples(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid time of sample `k`.
    pub fn grid_time(&self, k: usize) -> f64 {
        self.period * k as f64 / self.values.len() as f64
    }

    pub fn eval(&self, t: f64) -> f64 {
        let m = self.values.len();
        let h = self.period / m as f64;
        let s = t.rem_euclid(self.period) / h;
        let i = (s.floor() as usize).min(m - 1);
        let theta = s - i as f64;
        let j = (i + 1) % m;
        let (y0, y1) = (self.values[i], self.values[j]);
        let (d0, d1) = (self.slopes[i] * h, self.slopes[j] * h);
        let t2 = theta * theta;
        let t3 = t2 * theta;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + theta) * d0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * d1
    }
}

impl PeriodicFunction for SampledPeriodicFunction {
    fn period(&self) -> f64 {
        self.period
    }

    fn value(&self, t: f64) -> Result<f64, CoefficientError> {
        Ok(self.eval(t))
    }
}
