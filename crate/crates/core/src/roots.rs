//! Bracketed scalar root finding.

use crate::error::{Result, SolitonError};

/// Newton's method safeguarded by bisection on a sign-changing bracket.
///
/// `f` returns the function value and its derivative. Iteration stops when
/// the bracket is narrower than `xtol` or `|f| < ftol`.
pub fn safeguarded_newton<F>(f: F, a: f64, b: f64, xtol: f64, ftol: f64) -> Result<f64>
where
    F: Fn(f64) -> (f64, f64),
{
    let (fa, _) = f(a);
    let (fb, _) = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(SolitonError::Root(format!("no sign change on [{a}, {b}]")));
    }
    // orient so that f(lo) < 0 < f(hi)
    let (mut lo, mut hi) = if fa < 0.0 { (a, b) } else { (b, a) };
    let mut x = 0.5 * (a + b);
    let mut dx_old = (b - a).abs();
    let mut dx = dx_old;
    let (mut fx, mut dfx) = f(x);
    for _ in 0..200 {
        if fx.abs() < ftol {
            return Ok(x);
        }
        let newton_leaves = ((x - hi) * dfx - fx) * ((x - lo) * dfx - fx) > 0.0;
        if newton_leaves || (2.0 * fx).abs() > (dx_old * dfx).abs() || dfx == 0.0 {
            dx_old = dx;
            dx = 0.5 * (hi - lo);
            x = lo + dx;
        } else {
            dx_old = dx;
            dx = fx / dfx;
            x -= dx;
        }
        if dx.abs() < xtol {
            return Ok(x);
        }
        let (v, d) = f(x);
        fx = v;
        dfx = d;
        if fx < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        if (hi - lo).abs() < xtol {
            return Ok(x);
        }
    }
    Err(SolitonError::Root(format!("no convergence on [{a}, {b}]")))
}

/// Plain bisection; `f(a)` and `f(b)` must differ in sign.
pub fn bisect<F>(f: F, a: f64, b: f64, xtol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(SolitonError::Root(format!("no sign change on [{a}, {b}]")));
    }
    let (mut lo, mut hi) = (a, b);
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            lo = mid;
            fa = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Inverts a strictly monotone function: finds `x` with `f(x) = target`,
/// growing a bracket geometrically from `guess`.
pub fn invert_monotone<F>(f: F, target: f64, guess: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let g = |x: f64| f(x) - target;
    let mut step = 1.0f64.max(guess.abs());
    let (mut a, mut b) = (guess - step, guess + step);
    for _ in 0..200 {
        let (ga, gb) = (g(a), g(b));
        if ga.is_finite() && gb.is_finite() && ga.signum() != gb.signum() {
            return bisect(g, a, b, 1e-15 * (1.0 + a.abs().max(b.abs())));
        }
        step *= 2.0;
        a = guess - step;
        b = guess + step;
    }
    Err(SolitonError::Root(format!("could not bracket a preimage of {target}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn newton_finds_sqrt2() {
        let x = safeguarded_newton(|x| (x * x - 2.0, 2.0 * x), 0.0, 2.0, 1e-15, 0.0).unwrap();
        assert!((x - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn newton_survives_flat_derivative() {
        let x = safeguarded_newton(|x| (x.powi(3), 3.0 * x * x), -1.0, 0.5, 1e-12, 0.0).unwrap();
        assert!(x.abs() < 1e-4);
    }

    #[test]
    fn bisection_and_inversion() {
        let x = bisect(|x| x.cos() - x, 0.0, 1.0, 1e-14).unwrap();
        assert!((x.cos() - x).abs() < 1e-13);
        let y = invert_monotone(|x| x.powi(3) + x, 10.0, 0.0).unwrap();
        assert!((y.powi(3) + y - 10.0).abs() < 1e-12);
    }

    #[test]
    fn no_sign_change_is_an_error() {
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_err());
    }
}
