//! Lyapunov monitor `V(t) = |ln x1 - ln xbar1| + |ln x2 - ln xbar2| + x3`
//! along a trajectory approaching the boundary orbit `(xbar1, xbar2, 0)`.

use serde::Serialize;

use super::AnalysisError;
use crate::dynamics::{CoefficientSet, State};
use crate::integrator::Trajectory;
use crate::orbits::{OrbitMode, PeriodicOrbit};

/// Allowed total upward drift of `V` over the sampled grid.
pub const ATTRACTION_TOL: f64 = 1e-6;
/// Derivative checks are skipped where `|x_i - xbar_i|` is below this.
pub const KINK_EXCLUSION: f64 = 1e-9;
/// Slack allowed between the difference quotient of `V` and its bound.
const DERIVATIVE_TOL: f64 = 1e-6;
const MIN_SAMPLES_PER_PERIOD: usize = 10;

pub fn lyapunov_v(x: &State, xbar: &State) -> Result<f64, AnalysisError> {
    if !(x.x1 > 0.0 && x.x2 > 0.0) {
        return Err(AnalysisError::Domain(format!("prey densities must be positive, got {x:?}")));
    }
    if !(xbar.x1 > 0.0 && xbar.x2 > 0.0) {
        return Err(AnalysisError::Domain(format!("reference orbit must be positive, got {xbar:?}")));
    }
    if !(x.x3 >= 0.0) {
        return Err(AnalysisError::Domain(format!("predator density must be nonnegative, got {}", x.x3)));
    }
    Ok((x.x1.ln() - xbar.x1.ln()).abs() + (x.x2.ln() - xbar.x2.ln()).abs() + x.x3)
}

/// Upper bound on the upper-right Dini derivative of `V` at time `t`:
/// `sum_{i != j} (b_ij - b_jj)|x_j - xbar_j| + (c1 + c2 + d1 + d2 - beta a3) x3 / beta`.
pub fn dplus_v_bound(params: &CoefficientSet, t: f64, x: &State, xbar: &State) -> f64 {
    let p = params.at(t);
    (p.b12 - p.b22) * (x.x2 - xbar.x2).abs()
        + (p.b21 - p.b11) * (x.x1 - xbar.x1).abs()
        + (p.c1 + p.c2 + p.d1 + p.d2 - p.beta * p.a3) * x.x3 / p.beta
}

fn distance(x: &State, xbar: &State) -> f64 {
    (x.x1 - xbar.x1).abs() + (x.x2 - xbar.x2).abs() + x.x3.abs()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LyapunovSample {
    pub t: f64,
    pub v: f64,
    /// `|x1 - xbar1| + |x2 - xbar2| + x3`.
    pub delta: f64,
    /// Value of [`dplus_v_bound`].
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AttractionReport {
    pub samples: Vec<LyapunovSample>,
    pub max_upward_increment: f64,
    /// Sum of all positive increments of `V` between grid points.
    pub cumulative_upward_drift: f64,
    pub initial_v: f64,
    pub terminal_v: f64,
    pub terminal_delta: f64,
    pub derivative_checked: usize,
    pub derivative_skipped: usize,
    /// Largest `(V(t+h) - V(t-h)) / 2h - bound(t)` over checked points.
    pub max_derivative_excess: f64,
    pub monotone: bool,
    pub derivative_ok: bool,
}

/// Samples `V` on a grid of `samples_per_period` points per period over the
/// whole trajectory, measures its upward drift and compares a centered
/// difference quotient against [`dplus_v_bound`] away from kinks.
pub fn verify_attraction(
    params: &CoefficientSet,
    traj: &Trajectory,
    orbit: &PeriodicOrbit,
    samples_per_period: usize,
) -> Result<AttractionReport, AnalysisError> {
    if orbit.mode != OrbitMode::Boundary {
        return Err(AnalysisError::Precondition(format!(
            "reference orbit must be a boundary orbit, got {}",
            orbit.mode.name()
        )));
    }
    if traj.dim() != 3 {
        return Err(AnalysisError::Precondition(format!(
            "trajectory must be three-dimensional, got {}",
            traj.dim()
        )));
    }
    if samples_per_period < MIN_SAMPLES_PER_PERIOD {
        return Err(AnalysisError::Precondition(format!(
            "at least {MIN_SAMPLES_PER_PERIOD} samples per period are needed, got {samples_per_period}"
        )));
    }
    let (t0, t1) = (traj.t_start(), traj.t_end());
    let dt = params.period() / samples_per_period as f64;
    let h = (dt / 16.0).min(1e-4);
    let at = |t: f64| -> Result<(State, State), AnalysisError> {
        Ok((State::from_slice(&traj.sample(t)?), orbit.state_at(t)))
    };

    let mut times: Vec<f64> = Vec::new();
    let mut k = 0usize;
    loop {
        let t = t0 + dt * k as f64;
        if t > t1 - 1e-12 * dt {
            break;
        }
        times.push(t);
        k += 1;
    }
    times.push(t1);

    let mut samples = Vec::with_capacity(times.len());
    let mut checked = 0usize;
    let mut skipped = 0usize;
    let mut max_excess = f64::NEG_INFINITY;
    for &t in &times {
        let (x, xb) = at(t)?;
        let v = lyapunov_v(&x, &xb)?;
        let bound = dplus_v_bound(params, t, &x, &xb);
        samples.push(LyapunovSample { t, v, delta: distance(&x, &xb), bound });

        if t - h < t0 || t + h > t1 {
            continue;
        }
        let (xm, xbm) = at(t - h)?;
        let (xp, xbp) = at(t + h)?;
        let near_kink = [(x.x1 - xb.x1, xm.x1 - xbm.x1, xp.x1 - xbp.x1), (x.x2 - xb.x2, xm.x2 - xbm.x2, xp.x2 - xbp.x2)]
            .iter()
            .any(|&(d0, dm, dp)| d0.abs() <= KINK_EXCLUSION || dm.signum() != d0.signum() || dp.signum() != d0.signum());
        if near_kink {
            skipped += 1;
            continue;
        }
        let quotient = (lyapunov_v(&xp, &xbp)? - lyapunov_v(&xm, &xbm)?) / (2.0 * h);
        max_excess = max_excess.max(quotient - bound);
        checked += 1;
    }

    let mut max_up = 0.0f64;
    let mut drift = 0.0;
    for w in samples.windows(2) {
        let inc = w[1].v - w[0].v;
        if inc > 0.0 {
            drift += inc;
            max_up = max_up.max(inc);
        }
    }
    let first = samples[0];
    let last = *samples.last().expect("grid is nonempty");
    Ok(AttractionReport {
        max_upward_increment: max_up,
        cumulative_upward_drift: drift,
        initial_v: first.v,
        terminal_v: last.v,
        terminal_delta: last.delta,
        derivative_checked: checked,
        derivative_skipped: skipped,
        max_derivative_excess: max_excess,
        monotone: drift <= ATTRACTION_TOL,
        derivative_ok: checked > 0 && max_excess <= DERIVATIVE_TOL,
        samples,
    })
}
