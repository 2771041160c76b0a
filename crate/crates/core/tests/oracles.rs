//! Library results against independent test-side computations.

mod common;

use approx::assert_abs_diff_eq;
use common::{derivative, grid_extremes, model_rhs, rk4, simpson};
use perilotka::analysis::{check_thm2, BoundInputs};
use perilotka::coefficients::{extremes, CoefficientExpr};
use perilotka::dynamics::{full_field, State};
use perilotka::integrator::IntegratorConfig;
use perilotka::orbits::{find_orbit, logistic_closed_form, logistic_closed_form_at, poincare, OrbitMode, OrbitSettings};
use perilotka::scenarios;

#[test]
fn field_matches_transcribed_equations() {
    let p = scenarios::fig1();
    for (i, t) in [0.0, 0.3, 1.9, 7.25].into_iter().enumerate() {
        let x = [0.2 + i as f64, 1.1, 0.05 * (i + 1) as f64];
        let lib = full_field(&p, t, &State::from(x));
        let oracle = model_rhs(&p, t, x);
        for k in 0..3 {
            assert_abs_diff_eq!(lib[k], oracle[k], epsilon = 1e-13 * (1.0 + oracle[k].abs()));
        }
    }
}

#[test]
fn period_map_matches_fixed_step_rk4() {
    let omega = scenarios::PERIOD;
    for p in [scenarios::fig1(), scenarios::fig2()] {
        let x0 = scenarios::INITIAL_STATE;
        let lib = poincare(&p, &x0, &IntegratorConfig::default()).unwrap();
        let oracle = rk4(|t, x| model_rhs(&p, t, x), 0.0, x0.to_array(), omega, 100_000);
        for (a, b) in lib.to_array().iter().zip(oracle) {
            assert_abs_diff_eq!(*a, b, epsilon = 1e-6);
        }
    }
}

#[test]
fn ratio_average_matches_fine_simpson() {
    let p = scenarios::fig1();
    let inputs = BoundInputs::compute(&p).unwrap();
    let omega = scenarios::PERIOD;
    let c1g = simpson(|t| p.c1.eval(t) / p.gamma.eval(t), 0.0, omega, 1_000_000) / omega;
    let c2g = simpson(|t| p.c2.eval(t) / p.gamma.eval(t), 0.0, omega, 1_000_000) / omega;
    assert_abs_diff_eq!(inputs.c1_over_gamma_hat, c1g, epsilon = 1e-10);
    assert_abs_diff_eq!(inputs.c2_over_gamma_hat, c2g, epsilon = 1e-10);
}

#[test]
fn pointwise_extremes_match_grid_minimization() {
    let p = scenarios::fig2();
    let omega = scenarios::PERIOD;
    let n = 1_000_000;
    let (ba_lo, ba_hi) = grid_extremes(|t| p.beta.eval(t) * p.a3.eval(t), omega, n);
    let (_, cd_hi) = grid_extremes(|t| p.c1.eval(t) + p.c2.eval(t) + p.d1.eval(t) + p.d2.eval(t), omega, n);
    let r = check_thm2(&p).unwrap();
    assert_abs_diff_eq!(r.min_beta_a3, ba_lo, epsilon = 1e-8);
    assert_abs_diff_eq!(r.max_beta_a3, ba_hi, epsilon = 1e-8);
    assert_abs_diff_eq!(r.max_cd_sum, cd_hi, epsilon = 1e-8);
    assert_abs_diff_eq!(ba_lo, 11.84, epsilon = 1e-8);
    assert_abs_diff_eq!(cd_hi, 7.6, epsilon = 1e-8);

    let e = (CoefficientExpr::coef("beta", &p.beta) * CoefficientExpr::coef("a3", &p.a3))
        .with_period(omega)
        .unwrap();
    let ext = extremes(&e).unwrap();
    assert_abs_diff_eq!(ext.max, ba_hi, epsilon = 1e-8);
}

#[test]
fn closed_form_logistic_matches_period_map_solution() {
    let p = scenarios::fig1();
    let settings = OrbitSettings::default();
    for (mode, a, b, comp) in [
        (OrbitMode::Logistic1, &p.a1, &p.b11, 0usize),
        (OrbitMode::Logistic2, &p.a2, &p.b22, 1usize),
    ] {
        let mut guess = [0.0; 3];
        guess[comp] = a.mean() / b.mean();
        let orbit = find_orbit(&p, &State::from(guess), mode, &settings).unwrap();
        let closed = logistic_closed_form(a, b).unwrap();
        let mut worst = 0.0f64;
        for k in 0..256 {
            let t = scenarios::PERIOD * k as f64 / 256.0;
            let x = orbit.state_at(t).to_array()[comp];
            worst = worst.max((logistic_closed_form_at(a, b, t).unwrap() - x).abs());
            worst = worst.max((closed.eval(t) - x).abs());
        }
        assert!(worst < 1e-8, "{mode:?}: sup difference {worst:e}");
    }
}

#[test]
fn closed_form_satisfies_logistic_equation() {
    let p = scenarios::fig1();
    for (a, b) in [(&p.a1, &p.b11), (&p.a2, &p.b22)] {
        let x = |t: f64| logistic_closed_form_at(a, b, t).unwrap();
        let mut worst = 0.0f64;
        for k in 0..64 {
            let t = scenarios::PERIOD * k as f64 / 64.0;
            let lhs = derivative(x, t, 5e-4);
            let v = x(t);
            worst = worst.max((lhs - v * (a.eval(t) - b.eval(t) * v)).abs());
        }
        assert!(worst < 1e-8, "ODE residual {worst:e}");
    }
}
