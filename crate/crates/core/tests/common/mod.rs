//! Test-side oracles written independently of the library's numerics:
//! a fixed-step RK4 integrator, a direct transcription of the model
//! equations, composite Simpson on a fixed grid and brute-force grid
//! extremes.

#![allow(dead_code)]

use perilotka::dynamics::CoefficientSet;

/// Model right-hand side transcribed directly from the equations.
pub fn model_rhs(p: &CoefficientSet, t: f64, x: [f64; 3]) -> [f64; 3] {
    let e = |c: &perilotka::coefficients::PeriodicCoefficient| c.eval(t);
    let d1 = e(&p.alpha) + e(&p.beta) * x[0] + e(&p.gamma) * x[2];
    let d2 = e(&p.alpha) + e(&p.beta) * x[1] + e(&p.gamma) * x[2];
    [
        x[0] * (e(&p.a1) - e(&p.b11) * x[0] - e(&p.b12) * x[1]) - e(&p.c1) * x[0] * x[2] / d1,
        x[1] * (e(&p.a2) - e(&p.b21) * x[0] - e(&p.b22) * x[1]) - e(&p.c2) * x[1] * x[2] / d2,
        x[2] * (-e(&p.a3) + e(&p.d1) * x[0] / d1 + e(&p.d2) * x[1] / d2),
    ]
}

/// Classical fourth-order Runge-Kutta with `steps` equal steps.
pub fn rk4<const N: usize>(f: impl Fn(f64, [f64; N]) -> [f64; N], t0: f64, x0: [f64; N], t1: f64, steps: usize) -> [f64; N] {
    let h = (t1 - t0) / steps as f64;
    let mut x = x0;
    let axpy = |x: [f64; N], a: f64, k: [f64; N]| {
        let mut out = x;
        for i in 0..N {
            out[i] += a * k[i];
        }
        out
    };
    for n in 0..steps {
        let t = t0 + h * n as f64;
        let k1 = f(t, x);
        let k2 = f(t + h / 2.0, axpy(x, h / 2.0, k1));
        let k3 = f(t + h / 2.0, axpy(x, h / 2.0, k2));
        let k4 = f(t + h, axpy(x, h, k3));
        for i in 0..N {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

/// Composite Simpson rule with `n` (even) subintervals.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + h * i as f64);
    }
    s * h / 3.0
}

/// `(min, max)` of `f` on `n` equally spaced points of `[0, period)`.
pub fn grid_extremes(f: impl Fn(f64) -> f64, period: f64, n: usize) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..n {
        let v = f(period * i as f64 / n as f64);
        lo = lo.min(v);
        hi = hi.max(v);
    }
    (lo, hi)
}

/// Five-point centered derivative.
pub fn derivative(f: impl Fn(f64) -> f64, t: f64, h: f64) -> f64 {
    (f(t - 2.0 * h) - 8.0 * f(t - h) + 8.0 * f(t + h) - f(t + 2.0 * h)) / (12.0 * h)
}
