//! Periodic orbits as fixed points of the period map.
//!
//! The period map `P(x) = flow(0, x, omega)` is solved for `P(x) = x` by
//! damped Newton iteration with a forward-difference Jacobian, falling back
//! to plain iteration of `P` when Newton stalls. Stability of an accepted
//! orbit comes from the monodromy matrix, obtained by integrating the
//! variational equations along it.

use nalgebra::{Complex, DMatrix, DVector};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::coefficients::{quadrature, CoefficientError, PeriodicCoefficient, SampledPeriodicFunction};
use crate::dynamics::{BoundarySystem, CoefficientSet, FullSystem, LogisticSystem, State};
use crate::integrator::{
    flow, integrate, IntegrationError, IntegratorConfig, LinearizedField, Trajectory, Variational,
    VectorField,
};

/// Samples per period used for closed-form and orbit-derived functions.
pub const DEFAULT_FUNCTION_SAMPLES: usize = 512;

/// Extra Newton steps taken after the tolerance is met.
const POLISH_STEPS: usize = 2;

#[derive(Debug, Clone, Error)]
pub enum OrbitError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("orbit solver did not converge after {iterations} Newton iterations and {fallback_periods} map iterations (best residual {residual:e})")]
    NoConvergence {
        best: State,
        residual: f64,
        iterations: usize,
        fallback_periods: usize,
    },
    #[error(transparent)]
    Integration(#[from] IntegrationError),
    #[error(transparent)]
    Coefficient(#[from] CoefficientError),
}

/// Which invariant subsystem the orbit lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrbitMode {
    /// All three species.
    Full,
    /// Both prey, no predator.
    Boundary,
    /// Prey 1 alone.
    Logistic1,
    /// Prey 2 alone.
    Logistic2,
}

impl OrbitMode {
    pub fn active(self) -> &'static [usize] {
        match self {
            OrbitMode::Full => &[0, 1, 2],
            OrbitMode::Boundary => &[0, 1],
            OrbitMode::Logistic1 => &[0],
            OrbitMode::Logistic2 => &[1],
        }
    }

    pub fn dimension(self) -> usize {
        self.active().len()
    }

    pub fn name(self) -> &'static str {
        match self {
            OrbitMode::Full => "full",
            OrbitMode::Boundary => "boundary",
            OrbitMode::Logistic1 => "logistic-1",
            OrbitMode::Logistic2 => "logistic-2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "full" => Some(OrbitMode::Full),
            "boundary" => Some(OrbitMode::Boundary),
            "logistic-1" => Some(OrbitMode::Logistic1),
            "logistic-2" => Some(OrbitMode::Logistic2),
            _ => None,
        }
    }

    fn project(self, x: &State) -> Vec<f64> {
        let full = x.to_array();
        self.active().iter().map(|&i| full[i]).collect()
    }

    fn embed(self, y: &[f64]) -> State {
        let mut full = [0.0; 3];
        for (&i, &v) in self.active().iter().zip(y) {
            full[i] = v;
        }
        State::from(full)
    }
}

/// The reduced field for a mode.
#[derive(Clone, Copy)]
pub enum ModeField<'a> {
    Full(FullSystem<'a>),
    Boundary(BoundarySystem<'a>),
    Logistic(LogisticSystem<'a>),
}

impl<'a> ModeField<'a> {
    pub fn new(params: &'a CoefficientSet, mode: OrbitMode) -> Self {
        match mode {
            OrbitMode::Full => ModeField::Full(FullSystem(params)),
            OrbitMode::Boundary => ModeField::Boundary(BoundarySystem(params)),
            OrbitMode::Logistic1 => ModeField::Logistic(LogisticSystem {
                a: &params.a1,
                b: &params.b11,
            }),
            OrbitMode::Logistic2 => ModeField::Logistic(LogisticSystem {
                a: &params.a2,
                b: &params.b22,
            }),
        }
    }
}

impl VectorField for ModeField<'_> {
    fn dim(&self) -> usize {
        match self {
            ModeField::Full(f) => f.dim(),
            ModeField::Boundary(f) => f.dim(),
            ModeField::Logistic(f) => f.dim(),
        }
    }

    fn rate(&self, t: f64, x: &[f64], dx: &mut [f64]) {
        match self {
            ModeField::Full(f) => f.rate(t, x, dx),
            ModeField::Boundary(f) => f.rate(t, x, dx),
            ModeField::Logistic(f) => f.rate(t, x, dx),
        }
    }
}

impl LinearizedField for ModeField<'_> {
    fn jacobian(&self, t: f64, x: &[f64], jac: &mut [f64]) {
        match self {
            ModeField::Full(f) => f.jacobian(t, x, jac),
            ModeField::Boundary(f) => f.jacobian(t, x, jac),
            ModeField::Logistic(f) => f.jacobian(t, x, jac),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrbitSettings {
    /// Acceptance threshold on `max |P(x) - x|`.
    pub tol: f64,
    pub integrator: IntegratorConfig,
    pub max_newton: usize,
    pub max_fallback_periods: usize,
}

impl Default for OrbitSettings {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            integrator: IntegratorConfig::with_tolerances(1e-12, 1e-14),
            max_newton: 50,
            max_fallback_periods: 500,
        }
    }
}

fn serialize_complex<S: Serializer>(v: &[Complex<f64>], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|z| [z.re, z.im]))
}

fn serialize_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(m.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()))
}

/// Linearized period map along an orbit.
#[derive(Debug, Clone, Serialize)]
pub struct Monodromy {
    #[serde(serialize_with = "serialize_matrix")]
    pub matrix: DMatrix<f64>,
    /// Eigenvalues as `[re, im]` pairs when serialized.
    #[serde(serialize_with = "serialize_complex")]
    pub multipliers: Vec<Complex<f64>>,
}

impl Monodromy {
    pub fn spectral_radius(&self) -> f64 {
        self.multipliers.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    pub mode: OrbitMode,
    /// State at `t = 0`, zero in the inactive coordinates.
    pub anchor: State,
    /// One period in the active coordinates.
    pub trajectory: Trajectory,
    pub residual: f64,
    pub monodromy: Monodromy,
    pub newton_iterations: usize,
    pub fallback_periods: usize,
    period: f64,
}

impl PeriodicOrbit {
    pub fn dimension(&self) -> usize {
        self.mode.dimension()
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn multipliers(&self) -> &[Complex<f64>] {
        &self.monodromy.multipliers
    }

    /// Orbit state at any time, using periodicity.
    pub fn state_at(&self, t: f64) -> State {
        let tr = t.rem_euclid(self.period).min(self.trajectory.t_end());
        let y = self
            .trajectory
            .sample(tr)
            .expect("reduced time lies inside the orbit span");
        self.mode.embed(&y)
    }

    /// One component (0-based over x1, x2, x3) as a sampled periodic function
    /// with slopes taken from the vector field.
    pub fn component_function(
        &self,
        params: &CoefficientSet,
        component: usize,
        samples: usize,
    ) -> Result<SampledPeriodicFunction, OrbitError> {
        let h = self.period / samples as f64;
        let mut values = Vec::with_capacity(samples);
        let mut slopes = Vec::with_capacity(samples);
        for k in 0..samples {
            let t = h * k as f64;
            let x = self.state_at(t);
            let dx = crate::dynamics::full_field(params, t, &x);
            values.push(x.to_array()[component]);
            slopes.push(dx[component]);
        }
        Ok(SampledPeriodicFunction::with_slopes(self.period, values, slopes)?)
    }
}

impl Serialize for PeriodicOrbit {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Record<'a> {
            mode: OrbitMode,
            dimension: usize,
            anchor: [f64; 3],
            residual: f64,
            #[serde(serialize_with = "serialize_complex")]
            multipliers: &'a [Complex<f64>],
            newton_iterations: usize,
            fallback_periods: usize,
            steps: usize,
        }
        Record {
            mode: self.mode,
            dimension: self.dimension(),
            anchor: self.anchor.to_array(),
            residual: self.residual,
            multipliers: &self.monodromy.multipliers,
            newton_iterations: self.newton_iterations,
            fallback_periods: self.fallback_periods,
            steps: self.trajectory.steps(),
        }
        .serialize(s)
    }
}

/// Period map of the full system: `flow(0, x0, omega)`.
pub fn poincare(params: &CoefficientSet, x0: &State, cfg: &IntegratorConfig) -> Result<State, OrbitError> {
    if !x0.is_nonnegative() {
        return Err(OrbitError::Precondition(format!(
            "initial state {x0:?} must be nonnegative"
        )));
    }
    let end = flow(&FullSystem(params), 0.0, &x0.to_array(), params.period(), cfg)?;
    Ok(State::from_slice(&end))
}

fn sup_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

struct Shooter<'a> {
    field: ModeField<'a>,
    period: f64,
    cfg: IntegratorConfig,
}

impl Shooter<'_> {
    fn map(&self, x: &[f64]) -> Result<Vec<f64>, IntegrationError> {
        flow(&self.field, 0.0, x, self.period, &self.cfg)
    }

    fn defect(&self, x: &[f64]) -> Result<(Vec<f64>, f64), IntegrationError> {
        let px = self.map(x)?;
        let g: Vec<f64> = px.iter().zip(x).map(|(p, v)| p - v).collect();
        let r = sup_norm(&g);
        Ok((g, r))
    }

    fn jacobian(&self, x: &[f64], px: &[f64]) -> Result<DMatrix<f64>, IntegrationError> {
        let d = x.len();
        let mut jac = DMatrix::zeros(d, d);
        for j in 0..d {
            let h = 1e-7_f64.max(1e-7 * x[j].abs());
            let mut xp = x.to_vec();
            xp[j] += h;
            let pxp = self.map(&xp)?;
            for i in 0..d {
                jac[(i, j)] = (pxp[i] - px[i]) / h;
            }
            jac[(j, j)] -= 1.0;
        }
        Ok(jac)
    }
}

fn check_guess(guess: &State, mode: OrbitMode) -> Result<(), OrbitError> {
    let full = guess.to_array();
    for (i, &v) in full.iter().enumerate() {
        let active = mode.active().contains(&i);
        if active && !(v > 0.0 && v.is_finite()) {
            return Err(OrbitError::Precondition(format!(
                "guess component x{} = {v} must be strictly positive in {} mode",
                i + 1,
                mode.name()
            )));
        }
        if !active && v != 0.0 {
            return Err(OrbitError::Precondition(format!(
                "guess component x{} = {v} must be zero in {} mode",
                i + 1,
                mode.name()
            )));
        }
    }
    Ok(())
}

/// Locates a periodic orbit of the subsystem selected by `mode`.
pub fn find_orbit(
    params: &CoefficientSet,
    guess: &State,
    mode: OrbitMode,
    settings: &OrbitSettings,
) -> Result<PeriodicOrbit, OrbitError> {
    check_guess(guess, mode)?;
    let shooter = Shooter {
        field: ModeField::new(params, mode),
        period: params.period(),
        cfg: settings.integrator,
    };

    let mut x = mode.project(guess);
    let (mut g, mut residual) = shooter.defect(&x)?;
    let mut iterations = 0;
    let mut fallback_periods = 0;
    let mut best = (x.clone(), residual);

    while residual >= settings.tol {
        let mut stalled = iterations >= settings.max_newton;
        if !stalled {
            iterations += 1;
            let px: Vec<f64> = g.iter().zip(&x).map(|(gi, xi)| gi + xi).collect();
            let jac = shooter.jacobian(&x, &px)?;
            let rhs = -DVector::from_column_slice(&g);
            match jac.lu().solve(&rhs) {
                Some(step) => {
                    let mut lambda = 1.0;
                    let mut accepted = false;
                    for _ in 0..40 {
                        let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, s)| xi + lambda * s).collect();
                        if cand.iter().all(|v| *v > 0.0 && v.is_finite()) {
                            if let Ok((gc, rc)) = shooter.defect(&cand) {
                                if rc < residual {
                                    x = cand;
                                    g = gc;
                                    residual = rc;
                                    accepted = true;
                                    break;
                                }
                            }
                        }
                        lambda *= 0.5;
                    }
                    stalled = !accepted;
                }
                None => stalled = true,
            }
        }
        if residual < best.1 {
            best = (x.clone(), residual);
        }
        if residual < settings.tol {
            break;
        }
        if stalled {
            if fallback_periods >= settings.max_fallback_periods {
                break;
            }
            // Plain iteration of the period map; `x` always carries its own
            // residual `|P(x) - x|`.
            while fallback_periods < settings.max_fallback_periods && residual >= settings.tol {
                let next: Vec<f64> = g.iter().zip(&x).map(|(gi, xi)| gi + xi).collect();
                let (gn, rn) = shooter.defect(&next)?;
                fallback_periods += 1;
                x = next;
                g = gn;
                residual = rn;
                if residual < best.1 {
                    best = (x.clone(), residual);
                }
            }
            if iterations >= settings.max_newton && residual >= settings.tol {
                break;
            }
        }
    }

    if best.1 >= settings.tol {
        return Err(OrbitError::NoConvergence {
            best: mode.embed(&best.0),
            residual: best.1,
            iterations,
            fallback_periods,
        });
    }
    let (mut x, mut residual) = best;
    // Newton converges quadratically near the fixed point, so a couple of
    // undamped steps past the tolerance are cheap and often reach roundoff.
    for _ in 0..POLISH_STEPS {
        let (g, _) = shooter.defect(&x)?;
        let px: Vec<f64> = g.iter().zip(&x).map(|(gi, xi)| gi + xi).collect();
        let Some(step) = shooter.jacobian(&x, &px)?.lu().solve(&-DVector::from_column_slice(&g)) else {
            break;
        };
        let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(xi, s)| xi + s).collect();
        if !cand.iter().all(|v| *v > 0.0 && v.is_finite()) {
            break;
        }
        match shooter.defect(&cand) {
            Ok((_, rc)) if rc < residual => {
                x = cand;
                residual = rc;
            }
            _ => break,
        }
    }
    let trajectory = integrate(&shooter.field, 0.0, &x, shooter.period, &settings.integrator)?;
    let end = trajectory.final_state();
    let residual = sup_norm(&end.iter().zip(&x).map(|(a, b)| a - b).collect::<Vec<_>>());
    let anchor = mode.embed(&x);
    let monodromy = monodromy_of(&shooter.field, &x, shooter.period, &settings.integrator)?;
    Ok(PeriodicOrbit {
        mode,
        anchor,
        trajectory,
        residual,
        monodromy,
        newton_iterations: iterations,
        fallback_periods,
        period: shooter.period,
    })
}

/// Integrates `x` over `periods` periods of the mode's field, producing a
/// starting guess on (or near) the attractor.
pub fn settle(
    params: &CoefficientSet,
    start: &State,
    mode: OrbitMode,
    periods: usize,
    cfg: &IntegratorConfig,
) -> Result<State, OrbitError> {
    let x = mode.project(start);
    if x.iter().any(|v| !(*v > 0.0)) {
        return Err(OrbitError::Precondition(format!(
            "start {start:?} must be positive in the active coordinates of {} mode",
            mode.name()
        )));
    }
    if periods == 0 {
        return Ok(mode.embed(&x));
    }
    let field = ModeField::new(params, mode);
    let end = flow(&field, 0.0, &x, params.period() * periods as f64, cfg)?;
    Ok(mode.embed(&end))
}

fn monodromy_of<F: LinearizedField>(
    field: &F,
    x: &[f64],
    period: f64,
    cfg: &IntegratorConfig,
) -> Result<Monodromy, OrbitError> {
    let d = field.dim();
    let mut packed = x.to_vec();
    for i in 0..d {
        for j in 0..d {
            packed.push(if i == j { 1.0 } else { 0.0 });
        }
    }
    let end = flow(&Variational(field), 0.0, &packed, period, cfg)?;
    let matrix = DMatrix::from_row_slice(d, d, &end[d..]);
    let multipliers = matrix.complex_eigenvalues().iter().copied().collect();
    Ok(Monodromy { matrix, multipliers })
}

/// Monodromy matrix of an accepted orbit within its own subsystem.
pub fn monodromy(
    params: &CoefficientSet,
    orbit: &PeriodicOrbit,
    cfg: &IntegratorConfig,
) -> Result<Monodromy, OrbitError> {
    if !(orbit.residual < 1e-6) {
        return Err(OrbitError::Precondition(format!(
            "orbit residual {:e} too large for linearization",
            orbit.residual
        )));
    }
    let field = ModeField::new(params, orbit.mode);
    monodromy_of(&field, &orbit.mode.project(&orbit.anchor), params.period(), cfg)
}

/// Monodromy of the orbit viewed as an orbit of the full three-species system.
pub fn embedded_monodromy(
    params: &CoefficientSet,
    orbit: &PeriodicOrbit,
    cfg: &IntegratorConfig,
) -> Result<Monodromy, OrbitError> {
    if !(orbit.residual < 1e-6) {
        return Err(OrbitError::Precondition(format!(
            "orbit residual {:e} too large for linearization",
            orbit.residual
        )));
    }
    monodromy_of(&FullSystem(params), &orbit.anchor.to_array(), params.period(), cfg)
}

/// `exp` of the period integral of the Jacobian trace along the orbit,
/// which equals `det` of the monodromy matrix.
pub fn liouville_determinant(params: &CoefficientSet, orbit: &PeriodicOrbit) -> Result<f64, OrbitError> {
    let field = ModeField::new(params, orbit.mode);
    let d = orbit.dimension();
    let mut jac = vec![0.0; d * d];
    let integral = quadrature::adaptive_simpson(
        |t| {
            let x = orbit.mode.project(&orbit.state_at(t));
            field.jacobian(t, &x, &mut jac);
            Ok((0..d).map(|i| jac[i * d + i]).sum())
        },
        0.0,
        orbit.period(),
        1e-12,
    )?;
    Ok(integral.exp())
}

/// Pointwise closed form of the positive periodic solution of
/// `X' = X (a - b X)`:
///
/// `X(t) = (exp(int_0^w a) - 1) / int_t^{t+w} b(s) exp(int_t^s a) ds`.
pub fn logistic_closed_form_at(
    a: &PeriodicCoefficient,
    b: &PeriodicCoefficient,
    t: f64,
) -> Result<f64, OrbitError> {
    let (numerator, denominator) = closed_form_parts(a, b, t)?;
    Ok(numerator / denominator)
}

fn closed_form_parts(a: &PeriodicCoefficient, b: &PeriodicCoefficient, t: f64) -> Result<(f64, f64), OrbitError> {
    let period = a.period();
    if !b.same_period(period) {
        return Err(OrbitError::Precondition(format!(
            "growth and self-limitation periods differ ({} vs {})",
            period,
            b.period()
        )));
    }
    if !(a.mean() > 0.0) {
        return Err(OrbitError::Precondition(format!(
            "mean growth rate {} must be positive for a positive periodic solution",
            a.mean()
        )));
    }
    let numerator = a.integral(0.0, period).exp_m1();
    let tol = 1e-11 * numerator.max(1.0);
    let denominator = quadrature::adaptive_simpson(
        |s| Ok(b.eval(s) * a.integral(t, s).exp()),
        t,
        t + period,
        tol,
    )?;
    Ok((numerator, denominator))
}

/// The closed-form periodic logistic solution on a uniform grid.
pub fn logistic_closed_form(
    a: &PeriodicCoefficient,
    b: &PeriodicCoefficient,
) -> Result<SampledPeriodicFunction, OrbitError> {
    logistic_closed_form_sampled(a, b, DEFAULT_FUNCTION_SAMPLES)
}

pub fn logistic_closed_form_sampled(
    a: &PeriodicCoefficient,
    b: &PeriodicCoefficient,
    samples: usize,
) -> Result<SampledPeriodicFunction, OrbitError> {
    let period = a.period();
    let h = period / samples as f64;
    let mut values = Vec::with_capacity(samples);
    let mut slopes = Vec::with_capacity(samples);
    for k in 0..samples {
        let t = h * k as f64;
        let (n, d) = closed_form_parts(a, b, t)?;
        // d'(t) = b(t) n - a(t) d(t), so X' = -n d' / d^2.
        let d_prime = b.eval(t) * n - a.eval(t) * d;
        values.push(n / d);
        slopes.push(-n * d_prime / (d * d));
    }
    Ok(SampledPeriodicFunction::with_slopes(period, values, slopes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios;
    use approx::assert_abs_diff_eq;

    fn constants(a: f64, b: f64) -> CoefficientSet {
        let k = |v| PeriodicCoefficient::constant(1.0, v);
        CoefficientSet {
            a1: k(a),
            a2: k(a),
            a3: k(0.5),
            b11: k(b),
            b12: k(0.1),
            b21: k(0.1),
            b22: k(b),
            c1: k(0.1),
            c2: k(0.1),
            d1: k(0.1),
            d2: k(0.1),
            alpha: k(1.0),
            beta: k(1.0),
            gamma: k(1.0),
        }
    }

    #[test]
    fn logistic_constant_orbit() {
        let p = constants(1.0, 1.0);
        let o = find_orbit(&p, &State::new(0.4, 0.0, 0.0), OrbitMode::Logistic1, &OrbitSettings::default()).unwrap();
        assert_abs_diff_eq!(o.anchor.x1, 1.0, epsilon = 1e-10);
        assert!(o.residual < 1e-12);
        // Linearization X' = -X about the equilibrium.
        assert_abs_diff_eq!(o.multipliers()[0].re, (-1.0f64).exp(), epsilon = 1e-8);
        assert_eq!(o.dimension(), 1);
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [OrbitMode::Full, OrbitMode::Boundary, OrbitMode::Logistic1, OrbitMode::Logistic2] {
            assert_eq!(OrbitMode::parse(m.name()), Some(m));
        }
        assert_eq!(OrbitMode::parse("both"), None);
    }

    #[test]
    fn guess_must_live_in_the_mode() {
        let p = constants(1.0, 1.0);
        let s = OrbitSettings::default();
        assert!(matches!(
            find_orbit(&p, &State::new(1.0, 0.0, 0.0), OrbitMode::Boundary, &s),
            Err(OrbitError::Precondition(_))
        ));
        assert!(matches!(
            find_orbit(&p, &State::new(1.0, 1.0, 1.0), OrbitMode::Boundary, &s),
            Err(OrbitError::Precondition(_))
        ));
    }

    #[test]
    fn exhausted_budget_reports_best_iterate() {
        let p = scenarios::fig1();
        let s = OrbitSettings {
            max_newton: 0,
            max_fallback_periods: 2,
            ..OrbitSettings::default()
        };
        match find_orbit(&p, &State::new(0.5, 0.7, 1.0), OrbitMode::Full, &s) {
            Err(OrbitError::NoConvergence { best, residual, iterations, fallback_periods }) => {
                assert_eq!(iterations, 0);
                assert_eq!(fallback_periods, 2);
                assert!(residual.is_finite() && residual > 1e-9);
                assert!(best.x1 > 0.0 && best.x3 > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn reference_full_orbit_is_positive_and_stable() {
        let p = scenarios::fig1();
        let s = OrbitSettings::default();
        let guess = settle(&p, &scenarios::INITIAL_STATE, OrbitMode::Full, 40, &s.integrator).unwrap();
        let o = find_orbit(&p, &guess, OrbitMode::Full, &s).unwrap();
        assert!(o.residual < 1e-9);
        assert!(o.anchor.x1 > 0.0 && o.anchor.x2 > 0.0 && o.anchor.x3 > 0.0);
        assert!(o.monodromy.spectral_radius() < 1.0 - 1e-4);
        let det = o.monodromy.matrix.determinant();
        assert_abs_diff_eq!(liouville_determinant(&p, &o).unwrap(), det, epsilon = 1e-6);
        // Recomputing the monodromy from the anchor gives the same matrix.
        let m = monodromy(&p, &o, &s.integrator).unwrap();
        assert!((m.matrix - &o.monodromy.matrix).abs().max() < 1e-8);
    }

    #[test]
    fn shifted_coefficients_move_the_anchor_along_the_orbit() {
        let p = scenarios::fig1();
        let s = OrbitSettings::default();
        let guess = settle(&p, &scenarios::INITIAL_STATE, OrbitMode::Full, 40, &s.integrator).unwrap();
        let o = find_orbit(&p, &guess, OrbitMode::Full, &s).unwrap();
        for t0 in [0.1, 0.37, 0.7] {
            let x = State::from_slice(&flow(&FullSystem(&p), 0.0, &o.anchor.to_array(), t0, &s.integrator).unwrap());
            let back = flow(&FullSystem(&p), t0, &x.to_array(), p.period(), &s.integrator).unwrap();
            let defect = State::from_slice(&back).max_abs_diff(&x);
            // A polished residual sits at roundoff, below the re-anchoring
            // flow's own error, so the bound is floored there.
            let bound = 10.0 * o.residual.max(1e-12);
            assert!(defect < bound, "t0 = {t0}: defect {defect:e}, residual {:e}", o.residual);
            // Dense output along the stored period agrees to interpolation accuracy.
            assert!(o.state_at(t0).max_abs_diff(&x) < 1e-9);
            let shifted = find_orbit(&p.shifted(t0), &x, OrbitMode::Full, &s).unwrap();
            assert!(shifted.anchor.max_abs_diff(&x) < 1e-8);
        }
    }

    #[test]
    fn boundary_orbit_of_second_reference_set() {
        let p = scenarios::fig2();
        let s = OrbitSettings::default();
        let o = find_orbit(&p, &State::new(1.5, 1.1, 0.0), OrbitMode::Boundary, &s).unwrap();
        assert!(o.residual < 1e-9);
        assert_eq!(o.anchor.x3, 0.0);
        assert!(o.monodromy.spectral_radius() < 1.0);
        // Inside the full system the predator direction is also contracting.
        let full = embedded_monodromy(&p, &o, &s.integrator).unwrap();
        assert!(full.spectral_radius() < 1.0);
        assert_eq!(full.multipliers.len(), 3);
    }

    #[test]
    fn poincare_requires_nonnegative_state() {
        let p = scenarios::fig1();
        assert!(matches!(
            poincare(&p, &State::new(-1.0, 1.0, 1.0), &IntegratorConfig::default()),
            Err(OrbitError::Precondition(_))
        ));
    }

    #[test]
    fn closed_form_of_constant_logistic() {
        let k = |v| PeriodicCoefficient::constant(0.5, v);
        let x = logistic_closed_form_at(&k(2.0), &k(4.0), 0.2).unwrap();
        assert_abs_diff_eq!(x, 0.5, epsilon = 1e-12);
        assert!(matches!(
            logistic_closed_form_at(&k(-1.0), &k(1.0), 0.0),
            Err(OrbitError::Precondition(_))
        ));
    }
}
