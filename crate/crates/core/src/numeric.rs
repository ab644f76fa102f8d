//! Quadrature and root-finding helpers shared by the model and limit code.

use crate::error::{Error, Result};

/// Tanh-sinh quadrature on `[a, b]`, failing when the error estimate
/// exceeds `tol`.
pub(crate) fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let out = quadrature::integrate(f, a, b, tol);
    if !out.integral.is_finite() || out.error_estimate > tol {
        return Err(Error::Numerical(format!(
            "quadrature on [{a}, {b}] missed tolerance {tol:e} (estimate {:e})",
            out.error_estimate
        )));
    }
    Ok(out.integral)
}

/// `∫_a^∞ f`, via `z = a + t/(1-t)` on `[0, 1)`.
pub(crate) fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, a: f64, tol: f64) -> Result<f64> {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let u = 1.0 - t;
        let v = f(a + t / u) / (u * u);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, tol)
}

/// Safeguarded Newton iteration for a strictly monotone `f` with a sign
/// change on `[lo, hi]`; stops at relative step `rel_tol`.
pub(crate) fn solve_monotone<F, D>(f: F, df: D, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let f_lo = f(lo);
    let increasing = f(hi) > f_lo;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if (fx > 0.0) == increasing {
            hi = x;
        } else {
            lo = x;
        }
        let d = df(x);
        let mut next = x - fx / d;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= rel_tol * x.abs().max(f64::MIN_POSITIVE) {
            return next;
        }
        if (hi - lo) <= rel_tol * hi.abs().max(lo.abs()) {
            return 0.5 * (lo + hi);
        }
        x = next;
    }
    x
}
