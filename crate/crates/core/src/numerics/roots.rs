//! Root finding for convex functions on the half line.

use crate::error::{Result, ScaleError};

const MAX_DOUBLINGS: usize = 200;
const BISECTION_STEPS: usize = 80;
const NEWTON_STEPS: usize = 50;

/// Largest root of a convex function `g` on `[0, ∞)` with `g(0) <= 0` and
/// `g(λ) → ∞`.
///
/// The root is bracketed by doubling an upper end until `g` turns positive,
/// narrowed by bisection and then polished by Newton steps using `dg`. Newton
/// iterates leaving the current bracket fall back to bisection.
pub fn largest_convex_root<G, D>(g: G, dg: D) -> Result<f64>
where
    G: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let g0 = g(0.0);
    if !(g0 <= 0.0) {
        return Err(ScaleError::Bracketing(format!("g(0) = {g0} is not <= 0")));
    }

    let mut hi = 1.0;
    let mut doublings = 0;
    while !(g(hi) > 0.0) {
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS || !hi.is_finite() {
            return Err(ScaleError::Bracketing(format!("no sign change up to λ = {hi:e}")));
        }
    }
    let mut lo = 0.0;

    // The sublevel set {g <= 0} is an interval containing 0, so the predicate
    // g > 0 splits [lo, hi] cleanly.
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-6 * hi.max(1e-300) {
            break;
        }
    }

    let mut x = hi;
    for _ in 0..NEWTON_STEPS {
        let fx = g(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
        let d = dg(x);
        let mut next = x - fx / d;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}
