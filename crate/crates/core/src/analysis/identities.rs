//! Period-integral identities satisfied by every positive periodic orbit of
//! the full system. Integrating `(ln x_i)' ` over one period gives zero, so
//! e.g. `a1^ w = int_0^w [b11 x1 + b12 x2 + c1 x3 / D1] dt`.

use serde::Serialize;

use super::AnalysisError;
use crate::coefficients::quadrature::adaptive_simpson;
use crate::dynamics::CoefficientSet;
use crate::orbits::{OrbitMode, PeriodicOrbit};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralIdentity {
    pub species: usize,
    /// `a_i^ w`.
    pub lhs: f64,
    /// Period integral of the per-capita loss terms.
    pub rhs: f64,
    pub residual: f64,
}

pub fn integral_identities(params: &CoefficientSet, orbit: &PeriodicOrbit) -> Result<[IntegralIdentity; 3], AnalysisError> {
    let anchor = orbit.anchor;
    if orbit.mode != OrbitMode::Full || !(anchor.x1 > 0.0 && anchor.x2 > 0.0 && anchor.x3 > 0.0) {
        return Err(AnalysisError::Precondition(format!(
            "identities need a positive orbit of the full system, got {} orbit at {anchor:?}",
            orbit.mode.name()
        )));
    }
    let omega = params.period();
    let losses = |species: usize| {
        adaptive_simpson(
            |t| {
                let x = orbit.state_at(t);
                let p = params.at(t);
                let d1 = p.alpha + p.beta * x.x1 + p.gamma * x.x3;
                let d2 = p.alpha + p.beta * x.x2 + p.gamma * x.x3;
                Ok(match species {
                    1 => p.b11 * x.x1 + p.b12 * x.x2 + p.c1 * x.x3 / d1,
                    2 => p.b21 * x.x1 + p.b22 * x.x2 + p.c2 * x.x3 / d2,
                    _ => p.d1 * x.x1 / d1 + p.d2 * x.x2 / d2,
                })
            },
            0.0,
            omega,
            1e-11 * omega,
        )
    };
    let mut out = Vec::with_capacity(3);
    for (species, a) in [(1, &params.a1), (2, &params.a2), (3, &params.a3)] {
        let lhs = a.mean() * omega;
        let rhs = losses(species)?;
        out.push(IntegralIdentity { species, lhs, rhs, residual: (lhs - rhs).abs() });
    }
    Ok(out.try_into().expect("three species"))
}
