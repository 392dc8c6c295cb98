//! One-dimensional problems solved by every coordinate update.
//!
//! All GRESH updates minimise
//!
//! ```text
//! f(b) = ½ curv b² - lin b + kink |b| + smooth Σ_i (b² + s_i²)^{1/2},   s_i > 0
//! ```
//!
//! where `kink` collects the ℓ1 weight and every group term whose other
//! members are all zero, and `s_i` are the norms of the remaining members of
//! the nonzero groups. `f` is strictly convex, so `b = 0` iff
//! `|lin| <= kink`; otherwise the minimiser has the sign of `lin` and is the
//! root of the derivative on that half-line.

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 100;
const BISECTION_MAX_ITER: usize = 400;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarSolution {
    pub value: f64,
    /// Newton did not converge and the bracketing bisection produced the value.
    pub fallback: bool,
}

/// Soft-threshold closed form `S(lin, kink) / curv`.
pub fn soft_threshold(lin: f64, kink: f64, curv: f64) -> f64 {
    if lin > kink {
        (lin - kink) / curv
    } else if lin < -kink {
        (lin + kink) / curv
    } else {
        0.0
    }
}

/// The objective `f(b)` above.
pub fn scalar_objective(b: f64, curv: f64, lin: f64, kink: f64, smooth: f64, norms: &[f64]) -> f64 {
    0.5 * curv * b * b - lin * b
        + kink * b.abs()
        + smooth * norms.iter().map(|s| (b * b + s * s).sqrt()).sum::<f64>()
}

/// Minimises `f`. Newton–Raphson on the active half-line, started at the root
/// of the tangent at 0; the derivative there is increasing and concave so the
/// iterates approach the root monotonically from below. A bracketing
/// bisection takes over if Newton leaves the bracket or stalls.
pub fn minimize_scalar(curv: f64, lin: f64, kink: f64, smooth: f64, norms: &[f64]) -> ScalarSolution {
    let zero = ScalarSolution {
        value: 0.0,
        fallback: false,
    };
    if !(curv > 0.0) {
        return zero;
    }
    if norms.is_empty() || smooth == 0.0 {
        return ScalarSolution {
            value: soft_threshold(lin, kink, curv),
            fallback: false,
        };
    }
    let excess = lin.abs() - kink;
    if excess <= 0.0 {
        return zero;
    }

    // derivative of f along the half-line with the sign of `lin`, in |b|
    let grad = |b: f64| {
        curv * b - excess + smooth * norms.iter().map(|s| b / (b * b + s * s).sqrt()).sum::<f64>()
    };
    let hess = |b: f64| {
        curv + smooth
            * norms
                .iter()
                .map(|s| {
                    let q = b * b + s * s;
                    s * s / (q * q.sqrt())
                })
                .sum::<f64>()
    };

    let (mut lo, mut hi) = (0.0, excess / curv);
    let mut b = excess / (curv + smooth * norms.iter().map(|s| 1.0 / s).sum::<f64>());
    let mut converged = false;
    for _ in 0..NEWTON_MAX_ITER {
        let g = grad(b);
        if g == 0.0 {
            converged = true;
            break;
        }
        if g < 0.0 {
            lo = b;
        } else {
            hi = b;
        }
        let next = b - g / hess(b);
        if !(next > lo && next < hi) {
            // Newton left the bracket; only happens through rounding at the root.
            converged = (hi - lo) <= NEWTON_TOL * hi;
            break;
        }
        let step = (next - b).abs();
        b = next;
        if step <= NEWTON_TOL * b {
            converged = true;
            break;
        }
    }

    let mut fallback = false;
    if !converged {
        fallback = true;
        for _ in 0..BISECTION_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if grad(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        b = 0.5 * (lo + hi);
    }
    ScalarSolution {
        value: lin.signum() * b,
        fallback,
    }
}
