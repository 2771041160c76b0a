//! The two reference parameter sets, both with period `pi / 4` (every
//! coefficient is built from `sin(8t)` and `cos(8t)`).

use std::f64::consts::FRAC_PI_4;

use crate::coefficients::PeriodicCoefficient;
use crate::dynamics::{CoefficientSet, State};

pub const PERIOD: f64 = FRAC_PI_4;

/// Initial densities used by both reference runs.
pub const INITIAL_STATE: State = State::new(0.5, 0.7, 1.0);

/// Horizon of both reference runs.
pub const HORIZON: f64 = 100.0;

fn c(mean: f64) -> PeriodicCoefficient {
    PeriodicCoefficient::constant(PERIOD, mean)
}

/// Parameter set whose solutions approach a positive periodic orbit.
pub fn fig1() -> CoefficientSet {
    CoefficientSet {
        a1: c(3.0).with_sin(1, 1.0),
        a2: c(5.5).with_cos(1, -0.2),
        a3: c(0.4).with_cos(1, -0.3),
        b11: c(2.0).with_cos(1, 1.0),
        b12: c(0.04).with_sin(1, -0.02),
        b21: c(0.15).with_cos(1, -0.1),
        b22: c(5.0).with_sin(1, 0.4),
        c1: c(0.5).with_sin(1, -0.4),
        c2: c(0.4).with_sin(1, -0.3),
        d1: c(3.0).with_sin(1, 2.0),
        d2: c(3.0).with_sin(1, -2.0),
        alpha: c(0.03).with_cos(1, -0.02),
        beta: c(0.3).with_cos(1, 0.2),
        gamma: c(2.0).with_sin(1, -1.0),
    }
}

/// Same as [`fig1`] with a larger predator death rate and `beta`; the
/// predator dies out and solutions approach the predator-free orbit.
pub fn fig2() -> CoefficientSet {
    CoefficientSet {
        a3: c(4.0).with_cos(1, -0.3),
        beta: c(3.0).with_cos(1, 0.2),
        ..fig1()
    }
}

pub fn by_name(name: &str) -> Option<CoefficientSet> {
    match name {
        "fig1" => Some(fig1()),
        "fig2" => Some(fig2()),
        _ => None,
    }
}
