//! Bracketed root finding for monotone scalar functions.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootOptions {
    /// Stop once `|f(x)| <= f_tol`.
    pub f_tol: f64,
    /// Stop once the bracket is narrower than this.
    pub x_tol: f64,
    pub max_iter: usize,
}

impl Default for RootOptions {
    fn default() -> Self {
        Self {
            f_tol: 0.0,
            x_tol: 1e-13,
            max_iter: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub x: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Finds a sign change of `f` in `[lo, hi]` by bisection with secant
/// acceleration (Illinois-style end weighting, bisection fallback when the
/// bracket stalls).
pub fn bracketed_root<F: FnMut(f64) -> f64>(
    mut f: F,
    lo: f64,
    hi: f64,
    opts: RootOptions,
) -> Result<Root> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if !(fa.is_finite() && fb.is_finite()) {
        return Err(Error::SolverFailure(format!(
            "non-finite residual at bracket ends: f({a})={fa}, f({b})={fb}"
        )));
    }
    if fa == 0.0 {
        return Ok(Root { x: a, residual: 0.0, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(Root { x: b, residual: 0.0, iterations: 0 });
    }
    if fa.signum() == fb.signum() {
        return Err(Error::SolverFailure(format!(
            "no sign change on [{a}, {b}]: f(lo)={fa:e}, f(hi)={fb:e}"
        )));
    }

    let mut best = if fa.abs() < fb.abs() { (a, fa) } else { (b, fb) };
    let mut side = 0i8;
    let mut width = (b - a).abs();
    for iter in 1..=opts.max_iter {
        let secant = (a * fb - b * fa) / (fb - fa);
        let bisect = 0.5 * (a + b);
        let lo_end = a.min(b);
        let hi_end = a.max(b);
        let x = if secant.is_finite() && secant > lo_end && secant < hi_end && iter % 4 != 0 {
            secant
        } else {
            bisect
        };
        let fx = f(x);
        if !fx.is_finite() {
            return Err(Error::SolverFailure(format!("non-finite residual at {x}")));
        }
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx == 0.0 || fx.abs() <= opts.f_tol {
            return Ok(Root { x, residual: fx, iterations: iter });
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = x;
            fa = fx;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
        let new_width = (b - a).abs();
        if new_width <= opts.x_tol {
            return Ok(Root { x: best.0, residual: best.1, iterations: iter });
        }
        if new_width > 0.5 * width && iter % 3 == 0 {
            // Stalled: force the next step to halve the bracket.
            let m = 0.5 * (a + b);
            let fm = f(m);
            if fm.abs() < best.1.abs() {
                best = (m, fm);
            }
            if fm.signum() == fb.signum() {
                b = m;
                fb = fm;
            } else {
                a = m;
                fa = fm;
            }
            side = 0;
        }
        width = (b - a).abs();
    }
    Err(Error::SolverFailure(format!(
        "no convergence after {} iterations; best x={} residual={:e}",
        opts.max_iter, best.0, best.1
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_root() {
        let r = bracketed_root(|x| x * x * x - 2.0, 0.0, 3.0, RootOptions::default()).unwrap();
        assert!((r.x - 2f64.cbrt()).abs() < 1e-12);
    }

    #[test]
    fn decreasing_function() {
        let r = bracketed_root(|x: f64| (-x).exp() - 0.25, 0.0, 10.0, RootOptions::default()).unwrap();
        assert!((r.x - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn missing_sign_change_is_an_error() {
        let e = bracketed_root(|x| x * x + 1.0, -1.0, 1.0, RootOptions::default()).unwrap_err();
        assert!(matches!(e, Error::SolverFailure(_)));
    }

    #[test]
    fn flat_tail_converges_by_bisection() {
        // Secant steps are poor on a function this flat near one end.
        let r = bracketed_root(|x: f64| (x - 0.3).powi(9), -1.0, 1.0, RootOptions::default()).unwrap();
        assert!((r.x - 0.3).abs() < 1e-3);
    }
}
