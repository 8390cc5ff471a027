//! Adaptive quadrature for expectation values over continuous waiting-time
//! densities.
//!
//! Plain adaptive Simpson with Richardson extrapolation. Callers pre-split
//! the domain into panels (so that integrand oscillations cannot fool the
//! first-level error estimate) and hand each panel an absolute error budget.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error(
        "adaptive quadrature did not converge on [{a}, {b}] \
         (error estimate {estimate:.3e} above budget {budget:.3e})"
    )]
    DidNotConverge { a: f64, b: f64, estimate: f64, budget: f64 },
}

const MAX_DEPTH: u32 = 48;
const MAX_EVALS: u64 = 5_000_000;

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

/// Integrate `f` over `[a, b]` to absolute accuracy `abs_tol`.
///
/// Subintervals that bottom out at the depth cap contribute their leftover
/// error estimates to a running total; the integral is rejected only when
/// that total exceeds the requested budget (or the evaluation budget runs
/// out), so integrable singularities converge while genuinely wild
/// integrands still fail loudly.
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
) -> Result<f64, QuadError> {
    if a == b {
        return Ok(0.0);
    }
    let budget = abs_tol.max(f64::MIN_POSITIVE);
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = simpson(fa, fm, fb, b - a);
    // stack of (a, b, fa, fm, fb, whole, tol, depth)
    let mut stack = vec![(a, b, fa, fm, fb, whole, budget, 0u32)];
    let mut total = 0.0;
    let mut leftover = 0.0;
    let mut evals: u64 = 3;
    while let Some((lo, hi, fa, fm, fb, whole, tol, depth)) = stack.pop() {
        evals += 2;
        if evals > MAX_EVALS {
            return Err(QuadError::DidNotConverge { a, b, estimate: f64::INFINITY, budget });
        }
        let m = 0.5 * (lo + hi);
        let lm = 0.5 * (lo + m);
        let rm = 0.5 * (m + hi);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, m - lo);
        let right = simpson(fm, frm, fb, hi - m);
        let err = (left + right - whole).abs();
        let width_floor = (m - lo) < f64::EPSILON * lo.abs().max(hi.abs());
        if err <= 15.0 * tol {
            total += left + right + (left + right - whole) / 15.0;
        } else if depth >= MAX_DEPTH || width_floor {
            total += left + right + (left + right - whole) / 15.0;
            leftover += err / 15.0;
        } else {
            stack.push((lo, m, fa, flm, fm, left, 0.5 * tol, depth + 1));
            stack.push((m, hi, fm, frm, fb, right, 0.5 * tol, depth + 1));
        }
    }
    if leftover > budget {
        return Err(QuadError::DidNotConverge { a, b, estimate: leftover, budget });
    }
    Ok(total)
}

/// Integrate `f` over consecutive panels bounded by `edges`, splitting the
/// total absolute budget evenly across panels.
pub fn panel_simpson(
    f: &dyn Fn(f64) -> f64,
    edges: &[f64],
    abs_tol_total: f64,
) -> Result<f64, QuadError> {
    assert!(edges.len() >= 2, "need at least one panel");
    let per_panel = abs_tol_total / (edges.len() - 1) as f64;
    let mut total = 0.0;
    for w in edges.windows(2) {
        total += adaptive_simpson(f, w[0], w[1], per_panel)?;
    }
    Ok(total)
}
