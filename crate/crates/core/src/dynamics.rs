//! Vector fields of the periodic two-prey/one-predator system.
//!
//! The full system for prey `x1`, `x2` and predator `x3` reads
//!
//! ```text
//! x1' = x1 (a1 - b11 x1 - b12 x2) - c1 x1 x3 / (alpha + beta x1 + gamma x3)
//! x2' = x2 (a2 - b21 x1 - b22 x2) - c2 x2 x3 / (alpha + beta x2 + gamma x3)
//! x3' = x3 (-a3 + d1 x1 / (alpha + beta x1 + gamma x3)
//!               + d2 x2 / (alpha + beta x2 + gamma x3))
//! ```
//!
//! Restricting to `x3 = 0` gives the competitive boundary system, and
//! restricting further to one prey gives the periodic logistic equation.
//! All fields are pure functions; time stepping lives in [`crate::integrator`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coefficients::{check_positive, CoefficientError, PeriodicCoefficient};
use crate::integrator::{LinearizedField, VectorField};

/// Largest log-density accepted by [`log_field`]; `exp(700)` is close to
/// the top of the f64 range.
pub const LOG_OVERFLOW_GUARD: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("coefficient `{name}` is not strictly positive (minimum {min} at t = {t})")]
    NonPositive { name: &'static str, min: f64, t: f64 },
    #[error("coefficient `{name}` has period {found}, expected {expected}")]
    PeriodMismatch {
        name: &'static str,
        expected: f64,
        found: f64,
    },
    #[error("log-state component u{component} = {value} is outside the representable range")]
    Overflow { component: usize, value: f64 },
    #[error(transparent)]
    Coefficient(#[from] CoefficientError),
}

/// The fourteen periodic coefficients of the model, sharing one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSet {
    pub a1: PeriodicCoefficient,
    pub a2: PeriodicCoefficient,
    pub a3: PeriodicCoefficient,
    pub b11: PeriodicCoefficient,
    pub b12: PeriodicCoefficient,
    pub b21: PeriodicCoefficient,
    pub b22: PeriodicCoefficient,
    pub c1: PeriodicCoefficient,
    pub c2: PeriodicCoefficient,
    pub d1: PeriodicCoefficient,
    pub d2: PeriodicCoefficient,
    pub alpha: PeriodicCoefficient,
    pub beta: PeriodicCoefficient,
    pub gamma: PeriodicCoefficient,
}

/// Coefficient values frozen at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientValues {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub b11: f64,
    pub b12: f64,
    pub b21: f64,
    pub b22: f64,
    pub c1: f64,
    pub c2: f64,
    pub d1: f64,
    pub d2: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl CoefficientSet {
    pub const NAMES: [&'static str; 14] = [
        "a1", "a2", "a3", "b11", "b12", "b21", "b22", "c1", "c2", "d1", "d2", "alpha", "beta",
        "gamma",
    ];

    pub fn named(&self) -> [(&'static str, &PeriodicCoefficient); 14] {
        [
            ("a1", &self.a1),
            ("a2", &self.a2),
            ("a3", &self.a3),
            ("b11", &self.b11),
            ("b12", &self.b12),
            ("b21", &self.b21),
            ("b22", &self.b22),
            ("c1", &self.c1),
            ("c2", &self.c2),
            ("d1", &self.d1),
            ("d2", &self.d2),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("gamma", &self.gamma),
        ]
    }

    fn map(&self, f: impl Fn(&PeriodicCoefficient) -> PeriodicCoefficient) -> Self {
        Self {
            a1: f(&self.a1),
            a2: f(&self.a2),
            a3: f(&self.a3),
            b11: f(&self.b11),
            b12: f(&self.b12),
            b21: f(&self.b21),
            b22: f(&self.b22),
            c1: f(&self.c1),
            c2: f(&self.c2),
            d1: f(&self.d1),
            d2: f(&self.d2),
            alpha: f(&self.alpha),
            beta: f(&self.beta),
            gamma: f(&self.gamma),
        }
    }

    /// The common period.
    pub fn period(&self) -> f64 {
        self.a1.period()
    }

    /// Checks that all periods agree and every coefficient is strictly positive.
    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.validate_periods()?;
        for (name, c) in self.named() {
            let check = check_positive(c)?;
            if !check.positive {
                return Err(DynamicsError::NonPositive {
                    name,
                    min: check.min,
                    t: check.violation.unwrap_or(0.0),
                });
            }
        }
        Ok(())
    }

    pub fn validate_periods(&self) -> Result<(), DynamicsError> {
        let expected = self.period();
        for (name, c) in self.named() {
            if !c.same_period(expected) {
                return Err(DynamicsError::PeriodMismatch {
                    name,
                    expected,
                    found: c.period(),
                });
            }
        }
        Ok(())
    }

    /// All coefficients observed with a time offset.
    pub fn shifted(&self, offset: f64) -> Self {
        self.map(|c| c.shifted(offset))
    }

    pub fn at(&self, t: f64) -> CoefficientValues {
        CoefficientValues {
            a1: self.a1.eval(t),
            a2: self.a2.eval(t),
            a3: self.a3.eval(t),
            b11: self.b11.eval(t),
            b12: self.b12.eval(t),
            b21: self.b21.eval(t),
            b22: self.b22.eval(t),
            c1: self.c1.eval(t),
            c2: self.c2.eval(t),
            d1: self.d1.eval(t),
            d2: self.d2.eval(t),
            alpha: self.alpha.eval(t),
            beta: self.beta.eval(t),
            gamma: self.gamma.eval(t),
        }
    }
}

/// Population densities of the two prey and the predator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x1: f64,
    pub x2: f64,
    pub x3: f64,
}

impl State {
    pub const fn new(x1: f64, x2: f64, x3: f64) -> Self {
        Self { x1, x2, x3 }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }

    pub fn from_slice(x: &[f64]) -> Self {
        Self::new(x[0], x[1], x[2])
    }

    pub fn is_nonnegative(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite() && *v >= 0.0)
    }

    pub fn max_abs_diff(&self, other: &State) -> f64 {
        self.to_array()
            .iter()
            .zip(other.to_array())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl From<[f64; 3]> for State {
    fn from(x: [f64; 3]) -> Self {
        Self::new(x[0], x[1], x[2])
    }
}

/// Log-densities `u_i = ln x_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogState {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
}

impl LogState {
    pub fn from_state(x: &State) -> Self {
        Self {
            u1: x.x1.ln(),
            u2: x.x2.ln(),
            u3: x.x3.ln(),
        }
    }

    pub fn to_state(self) -> State {
        State::new(self.u1.exp(), self.u2.exp(), self.u3.exp())
    }
}

#[inline]
fn bd_term(c: f64, alpha: f64, beta: f64, gamma: f64, prey: f64, pred: f64) -> f64 {
    c * prey * pred / (alpha + beta * prey + gamma * pred)
}

/// Beddington-DeAngelis predation `c prey pred / (alpha + beta prey + gamma pred)`.
#[allow(clippy::too_many_arguments)]
pub fn bd_response(
    c: &PeriodicCoefficient,
    alpha: &PeriodicCoefficient,
    beta: &PeriodicCoefficient,
    gamma: &PeriodicCoefficient,
    t: f64,
    prey: f64,
    pred: f64,
) -> f64 {
    bd_term(c.eval(t), alpha.eval(t), beta.eval(t), gamma.eval(t), prey, pred)
}

pub fn field_from_values(p: &CoefficientValues, x: [f64; 3]) -> [f64; 3] {
    let [x1, x2, x3] = x;
    let den1 = p.alpha + p.beta * x1 + p.gamma * x3;
    let den2 = p.alpha + p.beta * x2 + p.gamma * x3;
    [
        x1 * (p.a1 - p.b11 * x1 - p.b12 * x2) - p.c1 * x1 * x3 / den1,
        x2 * (p.a2 - p.b21 * x1 - p.b22 * x2) - p.c2 * x2 * x3 / den2,
        x3 * (-p.a3 + p.d1 * x1 / den1 + p.d2 * x2 / den2),
    ]
}

pub fn full_field(params: &CoefficientSet, t: f64, x: &State) -> [f64; 3] {
    field_from_values(&params.at(t), x.to_array())
}

/// Right-hand side in log coordinates, `u_i' = x_i' / x_i` with `x = exp(u)`.
pub fn log_field(params: &CoefficientSet, t: f64, u: &LogState) -> Result<[f64; 3], DynamicsError> {
    for (i, v) in [u.u1, u.u2, u.u3].into_iter().enumerate() {
        if !v.is_finite() || v.abs() > LOG_OVERFLOW_GUARD {
            return Err(DynamicsError::Overflow {
                component: i + 1,
                value: v,
            });
        }
    }
    let p = params.at(t);
    let (e1, e2, e3) = (u.u1.exp(), u.u2.exp(), u.u3.exp());
    let den1 = p.alpha + p.beta * e1 + p.gamma * e3;
    let den2 = p.alpha + p.beta * e2 + p.gamma * e3;
    Ok([
        p.a1 - p.b11 * e1 - p.b12 * e2 - p.c1 * e3 / den1,
        p.a2 - p.b21 * e1 - p.b22 * e2 - p.c2 * e3 / den2,
        -p.a3 + p.d1 * e1 / den1 + p.d2 * e2 / den2,
    ])
}

/// The two-prey competitive system on the plane `x3 = 0`.
pub fn boundary_field(params: &CoefficientSet, t: f64, x: (f64, f64)) -> [f64; 2] {
    let (x1, x2) = x;
    let (a1, a2) = (params.a1.eval(t), params.a2.eval(t));
    let (b11, b12, b21, b22) = (
        params.b11.eval(t),
        params.b12.eval(t),
        params.b21.eval(t),
        params.b22.eval(t),
    );
    [
        x1 * (a1 - b11 * x1 - b12 * x2),
        x2 * (a2 - b21 * x1 - b22 * x2),
    ]
}

/// `X' = X (a(t) - b(t) X)`.
pub fn logistic_field(a: &PeriodicCoefficient, b: &PeriodicCoefficient, t: f64, x: f64) -> f64 {
    x * (a.eval(t) - b.eval(t) * x)
}

/// Jacobian of the full field, row-major.
pub fn full_jacobian_from_values(p: &CoefficientValues, x: [f64; 3]) -> [[f64; 3]; 3] {
    let [x1, x2, x3] = x;
    let den1 = p.alpha + p.beta * x1 + p.gamma * x3;
    let den2 = p.alpha + p.beta * x2 + p.gamma * x3;
    let sq1 = den1 * den1;
    let sq2 = den2 * den2;
    let ag = p.alpha + p.gamma * x3;
    [
        [
            p.a1 - 2.0 * p.b11 * x1 - p.b12 * x2 - p.c1 * x3 * ag / sq1,
            -p.b12 * x1,
            -p.c1 * x1 * (p.alpha + p.beta * x1) / sq1,
        ],
        [
            -p.b21 * x2,
            p.a2 - p.b21 * x1 - 2.0 * p.b22 * x2 - p.c2 * x3 * ag / sq2,
            -p.c2 * x2 * (p.alpha + p.beta * x2) / sq2,
        ],
        [
            x3 * p.d1 * ag / sq1,
            x3 * p.d2 * ag / sq2,
            -p.a3 + p.d1 * x1 / den1 + p.d2 * x2 / den2
                - x3 * p.gamma * (p.d1 * x1 / sq1 + p.d2 * x2 / sq2),
        ],
    ]
}

pub fn full_jacobian(params: &CoefficientSet, t: f64, x: &State) -> [[f64; 3]; 3] {
    full_jacobian_from_values(&params.at(t), x.to_array())
}

/// Full system as an integrable field on `R^3`.
#[derive(Debug, Clone, Copy)]
pub struct FullSystem<'a>(pub &'a CoefficientSet);

impl VectorField for FullSystem<'_> {
    fn dim(&self) -> usize {
        3
    }

    fn rate(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        dx.copy_from_slice(&field_from_values(&self.0.at(t), [x[0], x[1], x[2]]));
    }
}

impl LinearizedField for FullSystem<'_> {
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut [f64]) {
        let j = full_jacobian_from_values(&self.0.at(t), [x[0], x[1], x[2]]);
        for (row, out) in j.iter().zip(jac.chunks_exact_mut(3)) {
            out.copy_from_slice(row);
        }
    }
}

/// Boundary (predator-free) system on `R^2`.
#[derive(Debug, Clone, Copy)]
pub struct BoundarySystem<'a>(pub &'a CoefficientSet);

impl VectorField for BoundarySystem<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn rate(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        dx.copy_from_slice(&boundary_field(self.0, t, (x[0], x[1])));
    }
}

impl LinearizedField for BoundarySystem<'_> {
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut [f64]) {
        let p = self.0;
        let (a1, a2) = (p.a1.eval(t), p.a2.eval(t));
        let (b11, b12, b21, b22) = (p.b11.eval(t), p.b12.eval(t), p.b21.eval(t), p.b22.eval(t));
        jac[0] = a1 - 2.0 * b11 * x[0] - b12 * x[1];
        jac[1] = -b12 * x[0];
        jac[2] = -b21 * x[1];
        jac[3] = a2 - b21 * x[0] - 2.0 * b22 * x[1];
    }
}

/// Scalar periodic logistic equation.
#[derive(Debug, Clone, Copy)]
pub struct LogisticSystem<'a> {
    pub a: &'a PeriodicCoefficient,
    pub b: &'a PeriodicCoefficient,
}

impl VectorField for LogisticSystem<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn rate(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        dx[0] = logistic_field(self.a, self.b, t, x[0]);
    }
}

impl LinearizedField for LogisticSystem<'_> {
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut [f64]) {
        jac[0] = self.a.eval(t) - 2.0 * self.b.eval(t) * x[0];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn k(v: f64) -> PeriodicCoefficient {
        PeriodicCoefficient::constant(1.0, v)
    }

    fn constant_set() -> CoefficientSet {
        CoefficientSet {
            a1: k(1.0),
            a2: k(1.0),
            a3: k(0.5),
            b11: k(1.0),
            b12: k(0.0),
            b21: k(0.0),
            b22: k(1.0),
            c1: k(0.0),
            c2: k(0.0),
            d1: k(0.7),
            d2: k(0.3),
            alpha: k(1.0),
            beta: k(1.0),
            gamma: k(1.0),
        }
    }

    #[test]
    fn bd_response_examples() {
        let one = k(1.0);
        assert_eq!(bd_response(&one, &one, &one, &one, 0.3, 2.0, 0.0), 0.0);
        assert_eq!(bd_response(&one, &one, &one, &one, 0.3, 0.0, 2.0), 0.0);
        assert_abs_diff_eq!(bd_response(&one, &one, &one, &one, 0.3, 1.0, 1.0), 1.0 / 3.0, epsilon = 1e-16);
    }

    #[test]
    fn full_field_examples() {
        let p = scenarios::fig1();
        assert_eq!(full_field(&p, 0.4, &State::new(0.0, 0.0, 0.0)), [0.0; 3]);

        let f = full_field(&p, 0.4, &State::new(0.8, 1.1, 0.0));
        let b = boundary_field(&p, 0.4, (0.8, 1.1));
        assert_eq!([f[0], f[1]], b);
        assert_eq!(f[2], 0.0);

        let c = constant_set();
        assert_eq!(full_field(&c, 0.0, &State::new(1.0, 1.0, 0.0)), [0.0; 3]);
    }

    #[test]
    fn boundary_examples() {
        let p = scenarios::fig1();
        assert_eq!(boundary_field(&p, 1.0, (0.0, 0.0)), [0.0, 0.0]);
        let c = constant_set();
        assert_eq!(boundary_field(&c, 0.0, (1.0, 0.0)), [0.0, 0.0]);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let t = rng.random_range(0.0..10.0);
            let (x1, x2) = (rng.random_range(0.0..3.0), rng.random_range(0.0..3.0));
            let f = full_field(&p, t, &State::new(x1, x2, 0.0));
            assert_eq!([f[0], f[1]], boundary_field(&p, t, (x1, x2)));
        }
    }

    #[test]
    fn logistic_examples() {
        let a = PeriodicCoefficient::constant(std::f64::consts::FRAC_PI_4, 3.0).with_sin(1, 1.0);
        let b = PeriodicCoefficient::constant(std::f64::consts::FRAC_PI_4, 2.0).with_cos(1, 1.0);
        assert_eq!(logistic_field(&a, &b, 0.5, 0.0), 0.0);
        assert_eq!(logistic_field(&k(1.0), &k(1.0), 0.5, 1.0), 0.0);
        assert_eq!(logistic_field(&a, &b, 0.0, 1.0), 0.0);
    }

    #[test]
    fn log_field_examples() {
        let c = constant_set();
        let du = log_field(&c, 0.0, &LogState { u1: 0.0, u2: 0.0, u3: -50.0 }).unwrap();
        assert_abs_diff_eq!(du[0], 0.0, epsilon = 1e-20);

        let p = scenarios::fig1();
        let x = State::new(0.5, 0.7, 1.0);
        let du = log_field(&p, 0.0, &LogState::from_state(&x)).unwrap();
        let dx = full_field(&p, 0.0, &x);
        for i in 0..3 {
            assert_abs_diff_eq!(du[i], dx[i] / x.to_array()[i], epsilon = 1e-12);
        }

        assert!(matches!(
            log_field(&p, 0.0, &LogState { u1: 701.0, u2: 0.0, u3: 0.0 }),
            Err(DynamicsError::Overflow { component: 1, .. })
        ));
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = scenarios::fig1();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let t = rng.random_range(0.0..1.0);
            let x = [rng.random_range(0.0..3.0), rng.random_range(0.0..3.0), rng.random_range(0.0..3.0)];
            let j = full_jacobian(&p, t, &State::from(x));
            for col in 0..3 {
                let h = 1e-6;
                let mut xp = x;
                let mut xm = x;
                xp[col] += h;
                xm[col] -= h;
                let fp = full_field(&p, t, &State::from(xp));
                let fm = full_field(&p, t, &State::from(xm));
                for row in 0..3 {
                    let fd = (fp[row] - fm[row]) / (2.0 * h);
                    assert_abs_diff_eq!(j[row][col], fd, epsilon = 1e-6);
                }
            }
        }
    }

    #[test]
    fn validate_rejects_bad_sets() {
        let mut c = constant_set();
        assert!(matches!(c.validate(), Err(DynamicsError::NonPositive { name: "b12", .. })));
        c.b12 = k(0.1);
        c.b21 = k(0.1);
        c.c1 = k(0.1);
        c.c2 = k(0.1);
        c.validate().unwrap();
        c.gamma = PeriodicCoefficient::constant(2.0, 1.0);
        assert!(matches!(c.validate(), Err(DynamicsError::PeriodMismatch { name: "gamma", .. })));
    }
}
