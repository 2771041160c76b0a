//! Conditions on the predator-free (boundary) dynamics: coexistence of the
//! two prey and global stability of their periodic orbit.

use serde::Serialize;

use super::report::{ConditionEntry, ConditionReport};
use super::AnalysisError;
use crate::coefficients::{hat_mean, quadrature, CoefficientExpr};
use crate::dynamics::{CoefficientSet, State};
use crate::orbits::{find_orbit, logistic_closed_form, settle, OrbitMode, OrbitSettings, PeriodicOrbit};

/// Periods of plain integration before the boundary Newton solve starts.
const SETTLE_PERIODS: usize = 40;
/// Number of stored samples of `A12(t)` in reports.
const A12_SAMPLES: usize = 64;

/// Coexistence of the two prey in the absence of the predator: each prey
/// can invade the other's periodic logistic orbit.
pub fn check_e26(params: &CoefficientSet) -> Result<ConditionReport, AnalysisError> {
    params.validate_periods()?;
    let omega = params.period();
    for (i, a) in [(1, &params.a1), (2, &params.a2)] {
        if !(a.mean() > 0.0) {
            return Err(AnalysisError::Precondition(format!(
                "species {i} has nonpositive mean growth rate {}",
                a.mean()
            )));
        }
    }
    let xbar1 = logistic_closed_form(&params.a1, &params.b11)?;
    let xbar2 = logistic_closed_form(&params.a2, &params.b22)?;
    let invasion = |b: &crate::coefficients::PeriodicCoefficient, bname: &str, x, xname: &str| {
        let e = CoefficientExpr::coef(bname, b) * CoefficientExpr::sampled(xname, x);
        e.with_period(omega).and_then(|bound| hat_mean(&bound))
    };
    let m12 = invasion(&params.b12, "b12", &xbar2, "Xbar2")?;
    let m21 = invasion(&params.b21, "b21", &xbar1, "Xbar1")?;
    Ok(ConditionReport::new(
        "Coexistence of the prey on the boundary",
        vec![
            ConditionEntry::less("E26.12", "mean(b12 Xbar2) < a1^", m12, params.a1.mean()),
            ConditionEntry::less("E26.21", "mean(b21 Xbar1) < a2^", m21, params.a2.mean()),
        ],
    ))
}

/// Samples and average of
/// `A12(t) = max_{i != j} (a_ij + a_ji)^2 / (4 a_ii) - a_jj`, with
/// `a_ij = b_ij xbar_j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct A12Profile {
    /// `(t, A12(t))` on a uniform grid over one period.
    pub samples: Vec<(f64, f64)>,
    pub mean: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct E27Report {
    pub conditions: ConditionReport,
    pub a12: A12Profile,
    pub orbit_anchor: State,
    pub orbit_residual: f64,
}

/// Locates the boundary orbit `(xbar1, xbar2, 0)`, starting from the ratio
/// of averages `(a1^/b11^, a2^/b22^)` settled over several periods.
pub fn boundary_orbit(params: &CoefficientSet, settings: &OrbitSettings) -> Result<PeriodicOrbit, AnalysisError> {
    let start = State::new(
        params.a1.mean() / params.b11.mean(),
        params.a2.mean() / params.b22.mean(),
        0.0,
    );
    let guess = settle(params, &start, OrbitMode::Boundary, SETTLE_PERIODS, &settings.integrator)?;
    Ok(find_orbit(params, &guess, OrbitMode::Boundary, settings)?)
}

/// Global stability criterion for the boundary orbit: `mean(A12) < 0`.
/// Requires the coexistence conditions to hold.
pub fn check_e27(params: &CoefficientSet) -> Result<E27Report, AnalysisError> {
    let e26 = check_e26(params)?;
    if !e26.overall {
        return Err(AnalysisError::Precondition(
            "prey coexistence conditions fail; no positive boundary orbit to test".into(),
        ));
    }
    let orbit = boundary_orbit(params, &OrbitSettings::default())?;
    check_e27_for_orbit(params, &orbit)
}

/// As [`check_e27`] for an already computed boundary orbit.
pub fn check_e27_for_orbit(params: &CoefficientSet, orbit: &PeriodicOrbit) -> Result<E27Report, AnalysisError> {
    let anchor = orbit.anchor;
    if !(anchor.x1 > 0.0 && anchor.x2 > 0.0 && anchor.x3 == 0.0) {
        return Err(AnalysisError::Precondition(format!(
            "orbit anchor {anchor:?} is not a positive boundary state"
        )));
    }
    let omega = params.period();
    let a12 = |t: f64| {
        let x = orbit.state_at(t);
        let p = params.at(t);
        let (a11, a22) = (p.b11 * x.x1, p.b22 * x.x2);
        let (a12, a21) = (p.b12 * x.x2, p.b21 * x.x1);
        let s = (a12 + a21).powi(2);
        (s / (4.0 * a11) - a22).max(s / (4.0 * a22) - a11)
    };
    let integral = quadrature::adaptive_simpson(|t| Ok(a12(t)), 0.0, omega, 1e-10 * omega)?;
    let mean = integral / omega;
    let samples = (0..A12_SAMPLES)
        .map(|k| {
            let t = omega * k as f64 / A12_SAMPLES as f64;
            (t, a12(t))
        })
        .collect();
    Ok(E27Report {
        conditions: ConditionReport::new(
            "Global stability of the boundary orbit",
            vec![ConditionEntry::less("E27", "mean(A12) < 0", mean, 0.0)],
        ),
        a12: A12Profile { samples, mean },
        orbit_anchor: anchor,
        orbit_residual: orbit.residual,
    })
}
