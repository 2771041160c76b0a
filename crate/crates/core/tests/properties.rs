//! Randomized invariants of coefficients, fields, the integrator and the
//! condition checks.

mod common;

use perilotka::analysis::{
    boundary_orbit, check_thm2, dplus_v_bound, existence_bounds, lyapunov_v, verify_attraction, ExtendedReal,
};
use perilotka::coefficients::{extremes, hat_mean, CoefficientExpr, PeriodicCoefficient};
use perilotka::dynamics::{full_field, log_field, CoefficientSet, FullSystem, LogState, State};
use perilotka::integrator::{flow, integrate, IntegratorConfig};
use perilotka::orbits::OrbitSettings;
use perilotka::scenarios::{self, PERIOD};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coefficient(lo: f64, hi: f64) -> impl Strategy<Value = PeriodicCoefficient> {
    (lo..hi, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0).prop_map(|(m, s1, c1, s2, c2)| {
        // Keeps the function above 0.2 * mean.
        let scale = 0.8 * m / (s1.abs() + c1.abs() + s2.abs() + c2.abs()).max(1.0);
        PeriodicCoefficient::constant(PERIOD, m)
            .with_sin(1, scale * s1)
            .with_cos(1, scale * c1)
            .with_sin(2, scale * s2)
            .with_cos(2, scale * c2)
    })
}

fn coefficient_set() -> impl Strategy<Value = CoefficientSet> {
    let a = (coefficient(0.5, 6.0), coefficient(0.5, 6.0), coefficient(0.1, 5.0));
    let b = (coefficient(0.5, 5.0), coefficient(0.01, 1.0), coefficient(0.01, 1.0), coefficient(0.5, 5.0));
    let cd = (coefficient(0.1, 1.0), coefficient(0.1, 1.0), coefficient(0.5, 4.0), coefficient(0.5, 4.0));
    let abg = (coefficient(0.01, 1.0), coefficient(0.1, 4.0), coefficient(0.5, 3.0));
    (a, b, cd, abg).prop_map(|((a1, a2, a3), (b11, b12, b21, b22), (c1, c2, d1, d2), (alpha, beta, gamma))| {
        CoefficientSet { a1, a2, a3, b11, b12, b21, b22, c1, c2, d1, d2, alpha, beta, gamma }
    })
}

fn interior_state() -> impl Strategy<Value = State> {
    (1e-3f64..10.0, 1e-3f64..10.0, 1e-3f64..10.0).prop_map(|(a, b, c)| State::new(a, b, c))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn average_is_linear(f in coefficient(-3.0, 3.0), g in coefficient(-3.0, 3.0), a in -4.0f64..4.0, b in -4.0f64..4.0) {
        let e = a * CoefficientExpr::coef("f", &f) + b * CoefficientExpr::coef("g", &g);
        let lhs = hat_mean(&e.with_period(PERIOD).unwrap()).unwrap();
        let rhs = a * hat_mean(&f).unwrap() + b * hat_mean(&g).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn evaluation_is_periodic(f in coefficient(0.1, 5.0), t in -200.0f64..200.0) {
        let d = (f.eval(t) - f.eval(t + PERIOD)).abs();
        prop_assert!(d <= 1e-13 * (1.0 + t.abs()) * 20.0, "difference {d:e} at t = {t}");
    }

    #[test]
    fn extremes_bracket_values_and_average(f in coefficient(-2.0, 5.0), seed in any::<u64>()) {
        let e = extremes(&f).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..1000 {
            let v = f.eval(rng.random_range(0.0..PERIOD));
            prop_assert!(e.min <= v + 1e-12 && v <= e.max + 1e-12);
        }
        let m = hat_mean(&f).unwrap();
        prop_assert!(e.min <= m && m <= e.max);
    }

    #[test]
    fn expression_average_matches_fixed_grid(f in coefficient(0.5, 3.0), g in coefficient(0.5, 3.0), h in coefficient(0.5, 3.0)) {
        let e = CoefficientExpr::coef("f", &f) * CoefficientExpr::coef("g", &g) / CoefficientExpr::coef("h", &h);
        let lib = hat_mean(&e.with_period(PERIOD).unwrap()).unwrap();
        let oracle = common::simpson(|t| f.eval(t) * g.eval(t) / h.eval(t), 0.0, PERIOD, 20_000) / PERIOD;
        prop_assert!((lib - oracle).abs() <= 1e-9, "{lib} vs {oracle}");
    }

    #[test]
    fn coordinate_planes_are_invariant(p in coefficient_set(), x in interior_state(), t in 0.0f64..10.0, i in 0usize..3) {
        let mut arr = x.to_array();
        arr[i] = 0.0;
        prop_assert_eq!(full_field(&p, t, &State::from(arr))[i], 0.0);
    }

    #[test]
    fn per_capita_rates_are_bounded(p in coefficient_set(), x in interior_state(), t in 0.0f64..10.0) {
        let up = |c: &PeriodicCoefficient| extremes(c).unwrap().max;
        let low = |c: &PeriodicCoefficient| extremes(c).unwrap().min;
        let f = full_field(&p, t, &x);
        let s = up(&p.b11).max(up(&p.b12)).max(up(&p.b21)).max(up(&p.b22)) * (x.x1 + x.x2);
        let slack = 1e-9;
        prop_assert!(f[0].abs() <= x.x1 * (up(&p.a1) + s + up(&p.c1) / low(&p.gamma)) * (1.0 + slack));
        prop_assert!(f[1].abs() <= x.x2 * (up(&p.a2) + s + up(&p.c2) / low(&p.gamma)) * (1.0 + slack));
        prop_assert!((f[2] / x.x3).abs() <= (up(&p.a3) + (up(&p.d1) + up(&p.d2)) / low(&p.beta)) * (1.0 + slack));
    }

    #[test]
    fn log_field_is_chain_rule(p in coefficient_set(), x in interior_state(), t in 0.0f64..10.0) {
        let g = log_field(&p, t, &LogState::from_state(&x)).unwrap();
        let f = full_field(&p, t, &x);
        for (i, xi) in x.to_array().iter().enumerate() {
            let expected = f[i] / xi;
            prop_assert!((g[i] - expected).abs() <= 1e-12 * (1.0 + expected.abs()), "{} vs {}", g[i], expected);
        }
    }

    #[test]
    fn ladder_identities_hold_exactly(p in coefficient_set()) {
        let b = existence_bounds(&p).unwrap();
        let w = b.inputs.omega;
        let [a1, a2, a3] = b.inputs.a_hat;
        prop_assert_eq!(b.H11, b.L11 + 2.0 * a1 * w);
        prop_assert_eq!(b.H21, b.L21 + 2.0 * a2 * w);
        prop_assert_eq!(b.H12, b.L12 + (-2.0 * a1 * w));
        prop_assert_eq!(b.H22, b.L22 + (-2.0 * a2 * w));
        prop_assert_eq!(b.H31, b.L31 + 2.0 * a3 * w);
        prop_assert_eq!(b.H32, b.L32 + (-2.0 * a3 * w));
        prop_assert_eq!(b.L11, ExtendedReal::ln(a1 / b.inputs.b11_hat));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn stability_margins_are_shift_invariant(offset in 0.0f64..PERIOD) {
        let p = scenarios::fig2();
        let a = check_thm2(&p).unwrap();
        let b = check_thm2(&p.shifted(offset)).unwrap();
        for (x, y) in [
            (a.margin_b12, b.margin_b12),
            (a.margin_b21, b.margin_b21),
            (a.margin_cd, b.margin_cd),
            (a.margin_d, b.margin_d),
            (a.mu1, b.mu1),
        ] {
            prop_assert!((x - y).abs() <= 1e-9, "{x} vs {y}");
        }
        prop_assert_eq!(a.verdict_i, b.verdict_i);
    }
}

#[test]
fn integration_keeps_densities_nonnegative() {
    let p = scenarios::fig1();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let cfg = IntegratorConfig::default();
    for _ in 0..50 {
        let mut x0 = [0.0; 3];
        for v in &mut x0 {
            // Some starts lie on a coordinate plane.
            *v = if rng.random_bool(0.15) { 0.0 } else { rng.random_range(0.0..5.0) };
        }
        let traj = integrate(&FullSystem(&p), 0.0, &x0, 100.0, &cfg).unwrap();
        for i in 0..=traj.steps() {
            assert!(traj.state(i).iter().all(|v| *v >= 0.0), "negative state from {x0:?}");
        }
        for k in 0..=2000 {
            let s = traj.sample(0.05 * k as f64).unwrap();
            assert!(s.iter().all(|v| *v >= 0.0));
            for (j, v0) in x0.iter().enumerate() {
                if *v0 == 0.0 {
                    assert_eq!(s[j], 0.0);
                }
            }
        }
    }
}

#[test]
fn flow_is_time_periodic_and_a_semigroup() {
    let p = scenarios::fig1();
    let cfg = IntegratorConfig::with_tolerances(1e-11, 1e-13);
    let f = FullSystem(&p);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10 {
        let x0: Vec<f64> = (0..3).map(|_| rng.random_range(0.1..3.0)).collect();
        let t0 = rng.random_range(0.0..PERIOD);
        let d = rng.random_range(0.1..2.0);
        let a = flow(&f, t0, &x0, d, &cfg).unwrap();
        let b = flow(&f, t0 + PERIOD, &x0, d, &cfg).unwrap();
        let once = flow(&f, t0, &x0, PERIOD, &cfg).unwrap();
        let twice = flow(&f, t0 + PERIOD, &once, PERIOD, &cfg).unwrap();
        let direct = flow(&f, t0, &x0, 2.0 * PERIOD, &cfg).unwrap();
        for i in 0..3 {
            assert!((a[i] - b[i]).abs() < 1e-8);
            assert!((twice[i] - direct[i]).abs() < 1e-8);
        }
    }
}

#[test]
fn decrement_bound_is_dominated_by_margin() {
    let p = scenarios::fig2();
    let mu1 = check_thm2(&p).unwrap().mu1;
    assert!(mu1 > 0.0);
    let orbit = boundary_orbit(&p, &OrbitSettings::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10_000 {
        let t = rng.random_range(0.0..10.0 * PERIOD);
        let x = State::new(rng.random_range(1e-3..5.0), rng.random_range(1e-3..5.0), rng.random_range(0.0..5.0));
        let xb = orbit.state_at(t);
        let delta = (x.x1 - xb.x1).abs() + (x.x2 - xb.x2).abs() + x.x3;
        assert!(dplus_v_bound(&p, t, &x, &xb) <= -mu1 * delta + 1e-12);
    }
}

#[test]
fn lyapunov_function_vanishes_only_on_the_orbit() {
    let p = scenarios::fig2();
    let orbit = boundary_orbit(&p, &OrbitSettings::default()).unwrap();
    for k in 0..16 {
        let t = PERIOD * k as f64 / 16.0;
        let xb = orbit.state_at(t);
        assert_eq!(lyapunov_v(&xb, &xb).unwrap(), 0.0);
        for d1 in [-0.1, 0.0, 0.1] {
            for d2 in [-0.1, 0.0, 0.1] {
                for x3 in [0.0, 0.1] {
                    let x = State::new(xb.x1 + d1, xb.x2 + d2, x3);
                    let v = lyapunov_v(&x, &xb).unwrap();
                    let on_orbit = d1 == 0.0 && d2 == 0.0 && x3 == 0.0;
                    assert_eq!(v == 0.0, on_orbit, "V = {v} at offsets ({d1}, {d2}, {x3})");
                }
            }
        }
    }
}

#[test]
fn monitor_is_flat_on_the_orbit() {
    let p = scenarios::fig2();
    let orbit = boundary_orbit(&p, &OrbitSettings::default()).unwrap();
    let cfg = IntegratorConfig::with_tolerances(1e-12, 1e-14);
    let traj = integrate(&FullSystem(&p), 0.0, &orbit.anchor.to_array(), 20.0, &cfg).unwrap();
    let r = verify_attraction(&p, &traj, &orbit, 64).unwrap();
    for s in &r.samples {
        assert!(s.v.abs() < 1e-10 && s.delta < 1e-10, "V = {} at t = {}", s.v, s.t);
    }
    assert!(verify_attraction(&p, &traj, &orbit, 9).is_err());
}
