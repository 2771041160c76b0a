use std::path::Path;
use std::time::Instant;

use super::config::ScenarioConfig;
use super::output::{csv_table, line_chart, sample_times, Series};
use super::{parse_list, write_file, write_record, CommandError, ConfigError, RunRecord};
use crate::analysis::{
    boundary_orbit, check_e26, check_e27, check_h2, check_thm2, existence_bounds, integral_identities,
    verify_attraction, AnalysisError,
};
use crate::dynamics::{FullSystem, State};
use crate::integrator::{integrate, IntegrationError, IntegratorConfig, Trajectory};
use crate::orbits::{find_orbit, liouville_determinant, settle, OrbitError, OrbitMode, OrbitSettings};

/// Periods integrated from the initial state to build the default orbit guess.
const SETTLE_PERIODS: usize = 40;

const COLORS: [&str; 3] = ["#1f77b4", "#d62728", "#2ca02c"];

fn state_rows(traj: &Trajectory, times: &[f64]) -> Result<Vec<Vec<f64>>, IntegrationError> {
    times
        .iter()
        .map(|&t| {
            let mut row = vec![t];
            row.extend(traj.sample(t)?);
            Ok(row)
        })
        .collect()
}

fn state_chart(title: &str, rows: &[Vec<f64>]) -> String {
    let series: Vec<Series> = ["x1", "x2", "x3"]
        .iter()
        .enumerate()
        .map(|(i, name)| Series {
            name,
            color: COLORS[i],
            points: rows.iter().map(|r| (r[0], r[i + 1])).collect(),
        })
        .collect();
    line_chart(title, "t", &series)
}

/// Integrates, then writes whatever part of the trajectory exists.
fn integrate_full(cfg: &ScenarioConfig, icfg: &IntegratorConfig) -> Result<(Trajectory, Option<String>), CommandError> {
    match integrate(&FullSystem(&cfg.coefficients), 0.0, &cfg.initial.to_array(), cfg.horizon, icfg) {
        Ok(t) => Ok((t, None)),
        Err(IntegrationError::Failed { reason, t, partial }) => {
            Ok((*partial, Some(format!("integration failed at t = {t}: {reason}"))))
        }
        Err(IntegrationError::InvalidInput(m)) => Err(CommandError::Config(ConfigError::new("integrator", m))),
        Err(e) => Err(CommandError::Numerical(e.to_string())),
    }
}

fn numerical(e: impl std::fmt::Display) -> CommandError {
    CommandError::Numerical(e.to_string())
}

fn finish(out: &Path, mut record: RunRecord, started: Instant, failure: Option<String>) -> Result<RunRecord, CommandError> {
    if let Some(msg) = &failure {
        record.fail(msg.clone());
    }
    write_record(out, &mut record, started)?;
    match failure {
        Some(msg) => Err(CommandError::Numerical(msg)),
        None => Ok(record),
    }
}

pub fn run_simulate(cfg: &ScenarioConfig, out: &Path) -> Result<RunRecord, CommandError> {
    let started = Instant::now();
    let mut record = RunRecord::new("simulate", cfg);
    let icfg = cfg.integrator.apply(IntegratorConfig::default());
    let omega = cfg.coefficients.period();
    let (traj, failure) = integrate_full(cfg, &icfg)?;

    let times = sample_times(0.0, traj.t_end(), omega / cfg.samples_per_period as f64);
    let rows = state_rows(&traj, &times).map_err(numerical)?;
    write_file(out, "trajectory.csv", &csv_table(&["t", "x1", "x2", "x3"], rows.iter().cloned()), &mut record)?;
    write_file(out, "trajectory.svg", &state_chart("Densities", &rows), &mut record)?;

    let end = State::from_slice(traj.final_state());
    record.scalar("t_end", traj.t_end());
    record.scalar("final_x1", end.x1);
    record.scalar("final_x2", end.x2);
    record.scalar("final_x3", end.x3);
    record.scalar("steps", traj.steps() as f64);
    record.report("integrator", traj.stats());

    if failure.is_none() && traj.t_end() >= 2.0 * omega {
        // Periodicity defect and component minima over the last period.
        let t_end = traj.t_end();
        let mut defect = 0.0f64;
        let mut mins = [f64::INFINITY; 3];
        for t in sample_times(t_end - 2.0 * omega, t_end - omega, omega / cfg.samples_per_period as f64) {
            let a = State::from_slice(&traj.sample(t).map_err(numerical)?);
            let b = State::from_slice(&traj.sample(t + omega).map_err(numerical)?);
            defect = defect.max(a.max_abs_diff(&b));
            for (m, v) in mins.iter_mut().zip(b.to_array()) {
                *m = m.min(v);
            }
        }
        record.scalar("last_period_defect", defect);
        record.scalar("last_period_min_x1", mins[0]);
        record.scalar("last_period_min_x2", mins[1]);
        record.scalar("last_period_min_x3", mins[2]);
        println!("last-period defect {defect:.3e}; minima x1 {:.6e}, x2 {:.6e}, x3 {:.6e}", mins[0], mins[1], mins[2]);
    }
    println!(
        "t = {}: x1 = {:.12e}, x2 = {:.12e}, x3 = {:.12e} ({} steps)",
        traj.t_end(),
        end.x1,
        end.x2,
        end.x3,
        traj.steps()
    );
    finish(out, record, started, failure)
}

pub fn run_check(cfg: &ScenarioConfig, out: &Path) -> Result<RunRecord, CommandError> {
    let started = Instant::now();
    let mut record = RunRecord::new("check", cfg);
    let params = &cfg.coefficients;
    let analysis = |e: AnalysisError| match e {
        AnalysisError::Precondition(m) => CommandError::Config(ConfigError::new("coefficients", m)),
        other => numerical(other),
    };

    let bounds = existence_bounds(params).map_err(analysis)?;
    let h2 = check_h2(params).map_err(analysis)?;
    println!("{h2}");
    record.report("existence_bounds", &bounds);
    record.report("h2", &h2);

    let mut failure = None;
    match check_e26(params) {
        Ok(e26) => {
            println!("{e26}");
            record.report("e26", &e26);
        }
        Err(AnalysisError::Precondition(m)) => {
            println!("Coexistence of the prey on the boundary -- not evaluated: {m}\n");
            record.report("e26", &serde_json::json!({"evaluated": false, "reason": m}));
        }
        Err(e) => failure = Some(e.to_string()),
    }
    match check_e27(params) {
        Ok(e27) => {
            println!("{}", e27.conditions);
            record.scalar("e27_mean_a12", e27.a12.mean);
            record.report("e27", &e27);
        }
        Err(AnalysisError::Precondition(m)) => {
            println!("Global stability of the boundary orbit -- not evaluated: {m}\n");
            record.report("e27", &serde_json::json!({"evaluated": false, "reason": m}));
        }
        Err(e) => failure = failure.or(Some(e.to_string())),
    }
    let thm2 = check_thm2(params).map_err(analysis)?;
    println!("{}", thm2.conditions);
    println!(
        "  verdicts: (i) {}  (ii) {}  (iii) {}  mu1 = {:.6e}",
        thm2.verdict_i, thm2.verdict_ii, thm2.verdict_iii, thm2.mu1
    );
    record.scalar("mu1", thm2.mu1);
    record.scalar("min_beta_a3", thm2.min_beta_a3);
    record.scalar("max_cd_sum", thm2.max_cd_sum);
    record.report("thm2", &thm2);

    write_file(
        out,
        "check.txt",
        &format!(
            "{h2}\n{}\nverdicts: (i) {} (ii) {} (iii) {}\n",
            thm2.conditions, thm2.verdict_i, thm2.verdict_ii, thm2.verdict_iii
        ),
        &mut record,
    )?;
    finish(out, record, started, failure)
}

fn embed_guess(mode: OrbitMode, values: &[f64]) -> State {
    let mut full = [0.0; 3];
    for (&i, &v) in mode.active().iter().zip(values) {
        full[i] = v;
    }
    State::from(full)
}

pub fn run_orbit(
    cfg: &ScenarioConfig,
    mode: &str,
    guess: Option<&str>,
    tol: Option<f64>,
    out: &Path,
) -> Result<RunRecord, CommandError> {
    let started = Instant::now();
    let mut record = RunRecord::new("orbit", cfg);
    let params = &cfg.coefficients;
    let mode = OrbitMode::parse(mode).ok_or_else(|| ConfigError::new("--mode", format!("unknown mode `{mode}`")))?;
    let mut settings = OrbitSettings::default();
    if let Some(t) = tol {
        if !(t > 0.0 && t.is_finite()) {
            return Err(ConfigError::new("--tol", format!("must be positive, got {t}")).into());
        }
        settings.tol = t;
    }
    let precondition = |e: OrbitError| match e {
        OrbitError::Precondition(m) => CommandError::Config(ConfigError::new("--guess", m)),
        other => numerical(other),
    };
    let guess = match guess {
        Some(s) => {
            let v = parse_list(s, "--guess")?;
            if v.len() != mode.dimension() {
                return Err(ConfigError::new(
                    "--guess",
                    format!("{} mode needs {} values, got {}", mode.name(), mode.dimension(), v.len()),
                )
                .into());
            }
            embed_guess(mode, &v)
        }
        None => settle(params, &cfg.initial, mode, SETTLE_PERIODS, &settings.integrator).map_err(precondition)?,
    };
    record.report("guess", &guess);

    let orbit = match find_orbit(params, &guess, mode, &settings) {
        Ok(o) => o,
        Err(OrbitError::NoConvergence { best, residual, iterations, fallback_periods }) => {
            record.report("best_iterate", &best);
            record.scalar("residual", residual);
            record.scalar("newton_iterations", iterations as f64);
            record.scalar("fallback_periods", fallback_periods as f64);
            let msg = format!("orbit solver did not converge; best residual {residual:e} at {best:?}");
            println!("{msg}");
            return finish(out, record, started, Some(msg));
        }
        Err(e) => return Err(precondition(e)),
    };

    let omega = params.period();
    let times = sample_times(0.0, omega, omega / cfg.samples_per_period as f64);
    let rows: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| {
            let x = orbit.state_at(t);
            vec![t, x.x1, x.x2, x.x3]
        })
        .collect();
    write_file(out, "orbit.csv", &csv_table(&["t", "x1", "x2", "x3"], rows.iter().cloned()), &mut record)?;
    write_file(out, "orbit.svg", &state_chart(&format!("Periodic orbit ({} mode)", mode.name()), &rows), &mut record)?;

    let liouville = liouville_determinant(params, &orbit).map_err(numerical)?;
    let det = orbit.monodromy.matrix.determinant();
    record.scalar("residual", orbit.residual);
    record.scalar("spectral_radius", orbit.monodromy.spectral_radius());
    record.scalar("monodromy_determinant", det);
    record.scalar("liouville_determinant", liouville);
    record.report("orbit", &orbit);
    record.report("monodromy", &orbit.monodromy);

    let a = orbit.anchor;
    println!("Periodic orbit ({} mode)", mode.name());
    println!("  anchor       x1 = {:.15e}, x2 = {:.15e}, x3 = {:.15e}", a.x1, a.x2, a.x3);
    println!("  residual     {:.3e}", orbit.residual);
    for (i, z) in orbit.multipliers().iter().enumerate() {
        println!("  multiplier {} {:+.12e} {:+.12e}i  |.| = {:.12e}", i + 1, z.re, z.im, z.norm());
    }
    println!("  det M = {det:.12e}, exp(int tr J) = {liouville:.12e}");
    println!("  newton iterations {}, map iterations {}", orbit.newton_iterations, orbit.fallback_periods);

    if mode == OrbitMode::Full {
        match integral_identities(params, &orbit) {
            Ok(ids) => {
                for id in &ids {
                    record.scalar(&format!("identity_{}_residual", id.species), id.residual);
                }
                record.report("integral_identities", &ids);
            }
            Err(AnalysisError::Precondition(m)) => {
                record.report("integral_identities", &serde_json::json!({"evaluated": false, "reason": m}));
            }
            Err(e) => return Err(numerical(e)),
        }
    }
    finish(out, record, started, None)
}

pub fn run_lyapunov(cfg: &ScenarioConfig, out: &Path) -> Result<RunRecord, CommandError> {
    let started = Instant::now();
    let mut record = RunRecord::new("lyapunov", cfg);
    let params = &cfg.coefficients;
    if !(cfg.initial.x1 > 0.0 && cfg.initial.x2 > 0.0) {
        return Err(ConfigError::new("initial", "both prey densities must be positive for the Lyapunov function").into());
    }
    let orbit = match boundary_orbit(params, &OrbitSettings::default()) {
        Ok(o) => o,
        Err(e) => {
            let msg = format!("boundary orbit unavailable: {e}");
            return finish(out, record, started, Some(msg));
        }
    };
    record.report("boundary_orbit", &orbit);

    // The monitor measures drifts far below the default trajectory accuracy.
    let icfg = cfg.integrator.apply(IntegratorConfig::with_tolerances(1e-12, 1e-14));
    let (traj, failure) = integrate_full(cfg, &icfg)?;
    let report = verify_attraction(params, &traj, &orbit, cfg.samples_per_period).map_err(numerical)?;

    let rows = report.samples.iter().map(|s| vec![s.t, s.v, s.delta, s.bound]);
    write_file(out, "lyapunov.csv", &csv_table(&["t", "V", "delta", "bound"], rows), &mut record)?;
    let series = [
        Series { name: "V", color: COLORS[0], points: report.samples.iter().map(|s| (s.t, s.v)).collect() },
        Series { name: "delta", color: COLORS[1], points: report.samples.iter().map(|s| (s.t, s.delta)).collect() },
    ];
    write_file(out, "lyapunov.svg", &line_chart("Lyapunov function", "t", &series), &mut record)?;

    record.scalar("terminal_delta", report.terminal_delta);
    record.scalar("terminal_v", report.terminal_v);
    record.scalar("cumulative_upward_drift", report.cumulative_upward_drift);
    record.scalar("max_upward_increment", report.max_upward_increment);
    record.scalar("max_derivative_excess", report.max_derivative_excess);
    let mut summary = serde_json::to_value(&report).expect("report serializes");
    summary.as_object_mut().expect("struct").remove("samples");
    record.reports.insert("attraction".into(), summary);

    println!(
        "V: {:.6e} -> {:.6e}; upward drift {:.3e}; terminal delta {:.3e}; monotone {}; derivative bound respected {}",
        report.initial_v,
        report.terminal_v,
        report.cumulative_upward_drift,
        report.terminal_delta,
        report.monotone,
        report.derivative_ok
    );
    finish(out, record, started, failure)
}
