//! Bracketed root finding via Brent's method (Numerical Recipes form).
//! Iterates inverse quadratic interpolation / secant steps guarded by
//! bisection, so the iterate never leaves the original bracket.

use crate::error::{Error, Result};

const MAX_ITER: usize = 200;

/// Finds a root of `f` on `[bracket_low, bracket_high]`.
///
/// Requires a sign change over the bracket and terminates once the
/// enclosing interval is below `x_tolerance`.
pub fn find_root<F: Fn(f64) -> f64>(
    f: F,
    bracket_low: f64,
    bracket_high: f64,
    x_tolerance: f64,
) -> Result<f64> {
    find_root_fallible(|x| Ok(f(x)), bracket_low, bracket_high, x_tolerance)
}

/// [`find_root`] for functions whose evaluation can itself fail
/// (quadrature-backed cdfs); the first evaluation error aborts the search.
pub fn find_root_fallible<F: Fn(f64) -> Result<f64>>(
    f: F,
    bracket_low: f64,
    bracket_high: f64,
    x_tolerance: f64,
) -> Result<f64> {
    if !(x_tolerance > 0.0) {
        return Err(Error::InvalidParam(format!(
            "x tolerance must be positive, got {x_tolerance}"
        )));
    }
    if !bracket_low.is_finite() || !bracket_high.is_finite() || bracket_low >= bracket_high {
        return Err(Error::InvalidParam(format!(
            "invalid bracket [{bracket_low}, {bracket_high}]"
        )));
    }

    let mut a = bracket_low;
    let mut b = bracket_high;
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let mut c = b;
    let mut fc = fb;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..MAX_ITER {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * b.abs() + 0.5 * x_tolerance;
        let xm = 0.5 * (c - b);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // Attempt inverse quadratic interpolation.
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        a = b;
        fa = fb;
        if d.abs() > tol1 {
            b += d;
        } else {
            b += tol1.copysign(xm);
        }
        fb = f(b)?;
    }
    // Brent converges superlinearly; reaching here means the tolerance is
    // at the noise floor of f. The bracket is still valid, return it.
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::norm_cdf;

    #[test]
    fn linear_function() {
        let r = find_root(|x| x - 3.0, 0.0, 10.0, 1e-10).unwrap();
        assert!((r - 3.0).abs() < 1e-9);
    }

    #[test]
    fn normal_cdf_median() {
        let r = find_root(|x| norm_cdf(x) - 0.5, -5.0, 5.0, 1e-10).unwrap();
        assert!(r.abs() < 1e-9);
    }

    #[test]
    fn sqrt_two() {
        let r = find_root(|x| x * x - 2.0, 0.0, 2.0, 1e-10).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn endpoint_roots_returned_directly() {
        assert_eq!(find_root(|x| x, 0.0, 1.0, 1e-10).unwrap(), 0.0);
        assert_eq!(find_root(|x| x - 1.0, 0.0, 1.0, 1e-10).unwrap(), 1.0);
    }

    #[test]
    fn no_sign_change_is_reported() {
        match find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-10) {
            Err(Error::NoSignChange { f_lo, f_hi, .. }) => {
                assert!(f_lo > 0.0 && f_hi > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn iterates_stay_inside_bracket() {
        // A nasty flat-then-steep function; record every evaluation.
        let evals = std::cell::RefCell::new(Vec::new());
        let f = |x: f64| {
            evals.borrow_mut().push(x);
            (x - 0.987654321).powi(3) + 1e-12 * x
        };
        let r = find_root(f, -50.0, 60.0, 1e-12).unwrap();
        assert!((r - 0.987654321).abs() < 1e-3);
        for &x in evals.borrow().iter() {
            assert!((-50.0..=60.0).contains(&x), "left bracket: {x}");
        }
    }

    #[test]
    fn invalid_inputs() {
        assert!(find_root(|x| x, 1.0, -1.0, 1e-10).is_err());
        assert!(find_root(|x| x, -1.0, 1.0, 0.0).is_err());
    }
}
