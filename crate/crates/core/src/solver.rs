//! Bracketed scalar root finding: bisection with secant refinement.

use crate::error::{Error, Result};

pub const MAX_ITERATIONS: usize = 200;

/// Finds a root of `f` inside `[lo, hi]`.
///
/// `f(lo)` and `f(hi)` must differ in sign. Each step tries the secant point
/// of the current bracket and falls back to the midpoint whenever the secant
/// point falls outside the middle of the bracket or the bracket failed to
/// halve on the previous step. Converges when the bracket is narrower than
/// `rel_tol` times the scale of the initial bracket, or `f` hits zero.
pub fn bracketed_root_solve<F>(f: F, lo: f64, hi: f64, rel_tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a);
    let mut fb = f(b);
    if !fa.is_finite() || !fb.is_finite() {
        return Err(Error::NoBracket);
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket);
    }
    let scale = a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    let tol = rel_tol * scale;
    let mut last_width = b - a;

    for _ in 0..MAX_ITERATIONS {
        let width = b - a;
        if width <= tol {
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
        let mid = a + 0.5 * width;
        let secant = b - fb * (b - a) / (fb - fa);
        let quarter = 0.25 * width;
        let use_secant = secant.is_finite()
            && secant > a + quarter * 0.01
            && secant < b - quarter * 0.01
            && width <= 0.5 * last_width + f64::EPSILON * scale;
        let x = if use_secant { secant } else { mid };
        if x <= a || x >= b {
            // Bracket cannot shrink further in floating point.
            return Ok(if fa.abs() < fb.abs() { a } else { b });
        }
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if !fx.is_finite() {
            return Err(Error::SolverNoConverge(MAX_ITERATIONS));
        }
        last_width = width;
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
    }
    Err(Error::SolverNoConverge(MAX_ITERATIONS))
}
