//! Adaptive Simpson quadrature and grid-plus-golden-section minimization.

use super::{CoefficientError, MAX_QUADRATURE_DEPTH};

/// Number of uniform panels the interval is split into before adaptive
/// refinement starts. Periodic integrands can otherwise fool the first
/// Simpson estimate (all three nodes land on zeros of a sinusoid).
const INITIAL_PANELS: usize = 32;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Number of grid extrema handed to golden-section refinement.
const MAX_REFINED_CANDIDATES: usize = 16;

/// Integrates `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<f64, CoefficientError>
where
    F: FnMut(f64) -> Result<f64, CoefficientError>,
{
    if a == b {
        return Ok(0.0);
    }
    let width = (b - a) / INITIAL_PANELS as f64;
    let panel_tol = tol / INITIAL_PANELS as f64;
    let mut total = 0.0;
    let mut converged = true;
    let mut lo = a;
    let mut f_lo = f(lo)?;
    for i in 0..INITIAL_PANELS {
        let hi = if i + 1 == INITIAL_PANELS {
            b
        } else {
            a + width * (i + 1) as f64
        };
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid)?;
        let f_hi = f(hi)?;
        let whole = (hi - lo) / 6.0 * (f_lo + 4.0 * f_mid + f_hi);
        let (value, ok) = refine(
            &mut f,
            Panel { lo, hi, f_lo, f_mid, f_hi, whole },
            panel_tol,
            MAX_QUADRATURE_DEPTH,
        )?;
        total += value;
        converged &= ok;
        lo = hi;
        f_lo = f_hi;
    }
    if converged && total.is_finite() {
        Ok(total)
    } else {
        Err(CoefficientError::Quadrature { estimate: total })
    }
}

struct Panel {
    lo: f64,
    hi: f64,
    f_lo: f64,
    f_mid: f64,
    f_hi: f64,
    whole: f64,
}

fn refine<F>(f: &mut F, p: Panel, tol: f64, depth: u32) -> Result<(f64, bool), CoefficientError>
where
    F: FnMut(f64) -> Result<f64, CoefficientError>,
{
    let mid = 0.5 * (p.lo + p.hi);
    let left_mid = 0.5 * (p.lo + mid);
    let right_mid = 0.5 * (mid + p.hi);
    let f_lm = f(left_mid)?;
    let f_rm = f(right_mid)?;
    let left = (mid - p.lo) / 6.0 * (p.f_lo + 4.0 * f_lm + p.f_mid);
    let right = (p.hi - mid) / 6.0 * (p.f_mid + 4.0 * f_rm + p.f_hi);
    let delta = left + right - p.whole;
    // Roundoff floor: once the correction is at the level of the sum's own
    // rounding, further bisection cannot improve it.
    let floor = 64.0 * f64::EPSILON * (left.abs() + right.abs());
    if delta.abs() <= 15.0 * tol.max(floor) {
        return Ok((left + right + delta / 15.0, true));
    }
    if depth == 0 {
        return Ok((left + right + delta / 15.0, false));
    }
    let (l, lok) = refine(
        f,
        Panel { lo: p.lo, hi: mid, f_lo: p.f_lo, f_mid: f_lm, f_hi: p.f_mid, whole: left },
        0.5 * tol,
        depth - 1,
    )?;
    let (r, rok) = refine(
        f,
        Panel { lo: mid, hi: p.hi, f_lo: p.f_mid, f_mid: f_rm, f_hi: p.f_hi, whole: right },
        0.5 * tol,
        depth - 1,
    )?;
    Ok((l + r, lok && rok))
}

/// Golden-section search for a minimum of `f` inside `[a, b]`.
pub fn golden_section<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64), CoefficientError>
where
    F: FnMut(f64) -> Result<f64, CoefficientError>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let t = 0.5 * (a + b);
    let v = f(t)?;
    let best = [(v, t), (fc, c), (fd, d)]
        .into_iter()
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .unwrap_or((v, t));
    Ok((best.1, best.0))
}

/// Global minimum of a `period`-periodic function: uniform grid of `grid`
/// points, then golden-section refinement around the best local minima.
/// Returns `(min, argmin)` with `argmin` reduced to `[0, period)`.
pub fn periodic_minimum<F>(mut f: F, period: f64, grid: usize, tol: f64) -> Result<(f64, f64), CoefficientError>
where
    F: FnMut(f64) -> Result<f64, CoefficientError>,
{
    let n = grid.max(3);
    let h = period / n as f64;
    let values = (0..n)
        .map(|k| f(h * k as f64))
        .collect::<Result<Vec<_>, _>>()?;

    let mut candidates: Vec<usize> = (0..n)
        .filter(|&k| {
            let prev = values[(k + n - 1) % n];
            let next = values[(k + 1) % n];
            values[k] <= prev && values[k] <= next
        })
        .collect();
    candidates.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    candidates.truncate(MAX_REFINED_CANDIDATES);

    let (mut best, mut arg) = values
        .iter()
        .enumerate()
        .map(|(k, &v)| (v, h * k as f64))
        .min_by(|x, y| x.0.total_cmp(&y.0))
        .expect("grid is non-empty");

    for k in candidates {
        let centre = h * k as f64;
        let (t, v) = golden_section(&mut f, centre - h, centre + h, tol)?;
        if v < best {
            best = v;
            arg = t.rem_euclid(period);
        }
    }
    Ok((best, arg))
}
