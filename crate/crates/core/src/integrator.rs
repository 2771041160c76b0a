//! Adaptive Dormand-Prince 5(4) integration with continuous output.
//!
//! Density components are kept nonnegative by snapping roundoff-level
//! negative values to exactly zero and rejecting steps that overshoot
//! further; the coordinate planes are invariant for every field in this
//! crate, so a component that reaches zero stays there.

use serde::Serialize;
use thiserror::Error;

/// Right-hand side of an ODE system `x' = f(t, x)`.
pub trait VectorField {
    fn dim(&self) -> usize;

    fn rate(&self, t: f64, x: &[f64], dx: &mut [f64]);

    /// Number of leading components that are densities (kept nonnegative).
    fn density_components(&self) -> usize {
        self.dim()
    }
}

/// A field with an analytic Jacobian (row-major, `dim * dim`).
pub trait LinearizedField: VectorField {
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut [f64]);
}

impl<T: VectorField + ?Sized> VectorField for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn rate(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        (**self).rate(t, x, dx)
    }

    fn density_components(&self) -> usize {
        (**self).density_components()
    }
}

impl<T: LinearizedField + ?Sized> LinearizedField for &T {
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut [f64]) {
        (**self).jacobian(t, x, jac)
    }
}

/// Wraps a closure as a field. Components are not treated as densities.
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64, &[f64], &mut [f64])> FnField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64, &[f64], &mut [f64])> VectorField for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rate(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        (self.f)(t, x, dx)
    }

    fn density_components(&self) -> usize {
        0
    }
}

/// State plus fundamental matrix: `x' = f(t, x)`, `Phi' = J(t, x) Phi`.
/// The packed state is `[x, Phi (row-major)]`.
pub struct Variational<F>(pub F);

impl<F: LinearizedField> VectorField for Variational<F> {
    fn dim(&self) -> usize {
        let d = self.0.dim();
        d + d * d
    }

    fn rate(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        let d = self.0.dim();
        let (state, phi) = x.split_at(d);
        let (dstate, dphi) = dx.split_at_mut(d);
        self.0.rate(t, state, dstate);
        // Stack buffer; the model's subsystems have at most three components.
        assert!(d <= 3, "variational equations support dimension <= 3, got {d}");
        let mut buf = [0.0; 9];
        let jac = &mut buf[..d * d];
        self.0.jacobian(t, state, jac);
        for i in 0..d {
            for j in 0..d {
                dphi[i * d + j] = (0..d).map(|k| jac[i * d + k] * phi[k * d + j]).sum();
            }
        }
    }

    fn density_components(&self) -> usize {
        self.0.density_components()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// First trial step; chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
    /// Density components in `(-snap, 0)` are set to exactly zero.
    pub snap: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-11,
            initial_step: None,
            max_steps: 200_000,
            snap: 1e-13,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), IntegrationError> {
        let bad = |msg: &str| Err(IntegrationError::InvalidInput(msg.to_owned()));
        if !(self.rtol > 0.0 && self.rtol.is_finite()) {
            return bad("relative tolerance must be positive");
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return bad("absolute tolerance must be positive");
        }
        if self.max_steps < 1 {
            return bad("max steps must be at least 1");
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0 && h.is_finite()) {
                return bad("initial step must be positive");
            }
        }
        if !(self.snap >= 0.0 && self.snap.is_finite()) {
            return bad("snap threshold must be nonnegative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FailureReason {
    #[error("step size underflow")]
    StepSizeUnderflow,
    #[error("maximum number of steps exceeded")]
    MaxStepsExceeded,
    #[error("non-finite state")]
    NonFinite,
}

#[derive(Debug, Clone, Error)]
pub enum IntegrationError {
    #[error("invalid integration request: {0}")]
    InvalidInput(String),
    #[error("integration failed at t = {t}: {reason}")]
    Failed {
        reason: FailureReason,
        t: f64,
        partial: Box<Trajectory>,
    },
    #[error("time {t} outside trajectory span [{start}, {end}]")]
    OutOfRange { t: f64, start: f64, end: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    pub rtol: f64,
    pub atol: f64,
}

/// Piecewise-polynomial solution: step endpoints, states, and the five
/// continuous-extension coefficient vectors of every step.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    densities: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    dense: Vec<f64>,
    stats: IntegratorStats,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one point")
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dim..(i + 1) * self.dim]
    }

    pub fn final_state(&self) -> &[f64] {
        self.state(self.times.len() - 1)
    }

    pub fn stats(&self) -> &IntegratorStats {
        &self.stats
    }

    /// Dense-output value at `t`; exact stored state at step endpoints.
    pub fn sample(&self, t: f64) -> Result<Vec<f64>, IntegrationError> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(t, &mut out)?;
        Ok(out)
    }

    pub fn sample_into(&self, t: f64, out: &mut [f64]) -> Result<(), IntegrationError> {
        let (start, end) = (self.t_start(), self.t_end());
        if !(t >= start && t <= end) {
            return Err(IntegrationError::OutOfRange { t, start, end });
        }
        let idx = self.times.partition_point(|&s| s <= t);
        let i = idx.saturating_sub(1);
        if self.times[i] == t || i == self.steps() {
            out.copy_from_slice(self.state(i));
            return Ok(());
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let theta = (t - t0) / (t1 - t0);
        let theta1 = 1.0 - theta;
        let d = self.dim;
        let r = &self.dense[i * 5 * d..(i + 1) * 5 * d];
        for (j, o) in out.iter_mut().enumerate() {
            let (r1, r2, r3, r4, r5) = (r[j], r[d + j], r[2 * d + j], r[3 * d + j], r[4 * d + j]);
            *o = r1 + theta * (r2 + theta1 * (r3 + theta * (r4 + theta1 * r5)));
        }
        // The interpolant can dip below zero between nonnegative step values.
        for o in out[..self.densities].iter_mut() {
            *o = o.max(0.0);
        }
        Ok(())
    }

    /// `count` uniformly spaced samples `t_start + k * dt`, `k = 0..count`.
    pub fn uniform_samples(&self, dt: f64, count: usize) -> Result<Vec<(f64, Vec<f64>)>, IntegrationError> {
        (0..count)
            .map(|k| {
                let t = self.t_start() + dt * k as f64;
                self.sample(t).map(|x| (t, x))
            })
            .collect()
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension (Hairer, Norsett & Wanner).
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;

fn error_norm(err: &[f64], y0: &[f64], y1: &[f64], cfg: &IntegratorConfig) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = cfg.atol + cfg.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step<F: VectorField>(field: &F, t0: f64, y0: &[f64], f0: &[f64], span: f64, cfg: &IntegratorConfig) -> f64 {
    let scaled = |v: &[f64]| {
        let n = v.len() as f64;
        (v.iter()
            .zip(y0)
            .map(|(x, y)| (x / (cfg.atol + cfg.rtol * y.abs())).powi(2))
            .sum::<f64>()
            / n)
            .sqrt()
    };
    let d0 = scaled(y0);
    let d1 = scaled(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, f)| y + h0 * f).collect();
    let mut f1 = vec![0.0; y0.len()];
    field.rate(t0 + h0, &y1, &mut f1);
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

/// Integrates `field` from `(t0, x0)` to `t_end > t0`.
pub fn integrate<F: VectorField>(
    field: &F,
    t0: f64,
    x0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, IntegrationError> {
    cfg.validate()?;
    let n = field.dim();
    if x0.len() != n {
        return Err(IntegrationError::InvalidInput(format!(
            "initial state has {} components, field has {n}",
            x0.len()
        )));
    }
    if !(t0.is_finite() && t_end.is_finite() && t_end > t0) {
        return Err(IntegrationError::InvalidInput(format!(
            "need t_end > t0, got [{t0}, {t_end}]"
        )));
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(IntegrationError::InvalidInput("initial state is not finite".into()));
    }
    let densities = field.density_components().min(n);
    if x0[..densities].iter().any(|&v| v < 0.0) {
        return Err(IntegrationError::InvalidInput(
            "initial densities must be nonnegative".into(),
        ));
    }

    let mut stats = IntegratorStats {
        accepted: 0,
        rejected: 0,
        evaluations: 0,
        rtol: cfg.rtol,
        atol: cfg.atol,
    };
    let mut times = vec![t0];
    let mut states = x0.to_vec();
    let mut dense = Vec::new();

    let mut t = t0;
    let mut y = x0.to_vec();
    let mut k1 = vec![0.0; n];
    field.rate(t, &y, &mut k1);
    stats.evaluations += 1;

    let span = t_end - t0;
    let mut h = cfg
        .initial_step
        .unwrap_or_else(|| {
            stats.evaluations += 1;
            initial_step(field, t0, &y, &k1, span, cfg)
        })
        .min(span);

    let (mut k2, mut k3, mut k4, mut k5, mut k6, mut k7) =
        (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stage = vec![0.0; n];
    let mut y_new = vec![0.0; n];
    let mut err = vec![0.0; n];
    let mut last_rejected = false;

    let fail = |reason, t, times: Vec<f64>, states: Vec<f64>, dense: Vec<f64>, stats| {
        Err(IntegrationError::Failed {
            reason,
            t,
            partial: Box::new(Trajectory {
                dim: n,
                densities,
                times,
                states,
                dense,
                stats,
            }),
        })
    };

    while t < t_end {
        if stats.accepted + stats.rejected >= cfg.max_steps {
            return fail(FailureReason::MaxStepsExceeded, t, times, states, dense, stats);
        }
        let last = t + 1.01 * h >= t_end;
        if last {
            h = t_end - t;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return fail(FailureReason::StepSizeUnderflow, t, times, states, dense, stats);
        }

        for i in 0..n {
            stage[i] = y[i] + h * A21 * k1[i];
        }
        field.rate(t + C2 * h, &stage, &mut k2);
        for i in 0..n {
            stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        field.rate(t + C3 * h, &stage, &mut k3);
        for i in 0..n {
            stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        field.rate(t + C4 * h, &stage, &mut k4);
        for i in 0..n {
            stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        field.rate(t + C5 * h, &stage, &mut k5);
        for i in 0..n {
            stage[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_new = if last { t_end } else { t + h };
        field.rate(t_new, &stage, &mut k6);
        for i in 0..n {
            y_new[i] = y[i]
                + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
        }
        field.rate(t_new, &y_new, &mut k7);
        stats.evaluations += 6;
        for i in 0..n {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let mut norm = error_norm(&err, &y, &y_new, cfg);
        if !norm.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
            norm = f64::INFINITY;
        }
        // A density overshooting zero by more than roundoff is a step that
        // resolved the decay too coarsely, whatever the error estimate says.
        let overshoot = y_new[..densities].iter().any(|v| *v <= -cfg.snap);
        if norm <= 1.0 && overshoot {
            norm = 2f64.powi(5);
        }

        if norm <= 1.0 {
            let mut snapped = false;
            for v in y_new[..densities].iter_mut() {
                if *v < 0.0 && *v > -cfg.snap {
                    *v = 0.0;
                    snapped = true;
                }
            }
            if snapped {
                field.rate(t_new, &y_new, &mut k7);
                stats.evaluations += 1;
            }
            // Coefficients are stored component-blocked: [r1 | r2 | r3 | r4 | r5].
            let base = dense.len();
            dense.resize(base + 5 * n, 0.0);
            for i in 0..n {
                let r2 = y_new[i] - y[i];
                let r3 = h * k1[i] - r2;
                let r4 = r2 - h * k7[i] - r3;
                let r5 = h
                    * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                dense[base + i] = y[i];
                dense[base + n + i] = r2;
                dense[base + 2 * n + i] = r3;
                dense[base + 3 * n + i] = r4;
                dense[base + 4 * n + i] = r5;
            }
            t = t_new;
            y.copy_from_slice(&y_new);
            k1.copy_from_slice(&k7);
            times.push(t);
            states.extend_from_slice(&y);
            stats.accepted += 1;

            let mut fac = (SAFETY * norm.max(1e-10).powf(-0.2)).clamp(FAC_MIN, FAC_MAX);
            if last_rejected {
                fac = fac.min(1.0);
            }
            last_rejected = false;
            h *= fac;
        } else {
            stats.rejected += 1;
            last_rejected = true;
            let fac = if norm.is_finite() {
                (SAFETY * norm.powf(-0.2)).clamp(FAC_MIN, 1.0)
            } else {
                0.1
            };
            h *= fac;
        }
    }

    Ok(Trajectory {
        dim: n,
        densities,
        times,
        states,
        dense,
        stats,
    })
}

/// End state of the flow from `(t0, x0)` over `duration >= 0`.
pub fn flow<F: VectorField>(
    field: &F,
    t0: f64,
    x0: &[f64],
    duration: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<f64>, IntegrationError> {
    if duration == 0.0 {
        return Ok(x0.to_vec());
    }
    if duration < 0.0 {
        return Err(IntegrationError::InvalidInput(format!(
            "flow duration must be nonnegative, got {duration}"
        )));
    }
    let traj = integrate(field, t0, x0, t0 + duration, cfg)?;
    Ok(traj.final_state().to_vec())
}

/// Dense-output value of `traj` at `t`.
pub fn sample(traj: &Trajectory, t: f64) -> Result<Vec<f64>, IntegrationError> {
    traj.sample(t)
}
