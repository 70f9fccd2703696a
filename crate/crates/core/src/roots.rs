//! Bracketing and bisection for monotone scalar functions.

use crate::error::{Error, Result};

/// Widen `[lo, hi]` until an increasing `f` changes sign across it.
///
/// Each failed side is pushed outward by the current bracket width, so the
/// bracket doubles per step. Gives up after `max_steps` widenings.
pub fn expand_bracket<F>(f: F, mut lo: f64, mut hi: f64, max_steps: usize) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    if !(lo < hi) {
        return Err(Error::Domain(format!("empty bracket [{lo}, {hi}]")));
    }
    for _ in 0..=max_steps {
        let flo = f(lo);
        let fhi = f(hi);
        if flo.is_nan() || fhi.is_nan() {
            break;
        }
        if flo <= 0.0 && fhi >= 0.0 {
            return Ok((lo, hi));
        }
        let width = hi - lo;
        if flo > 0.0 {
            lo -= width;
        }
        if fhi < 0.0 {
            hi += width;
        }
        if !lo.is_finite() || !hi.is_finite() {
            break;
        }
    }
    Err(Error::Numeric(format!(
        "bracket expansion failed, last bracket [{lo:e}, {hi:e}]"
    )))
}

/// Root of an increasing `f` on `[lo, hi]` with `f(lo) <= 0 <= f(hi)`.
///
/// Runs until the midpoint coincides with an endpoint, i.e. to the
/// resolution of `f64`, so the result does not depend on a caller tolerance.
pub fn bisect_increasing<F>(f: F, mut lo: f64, mut hi: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let flo = f(lo);
    let fhi = f(hi);
    if !(flo <= 0.0 && fhi >= 0.0) {
        return Err(Error::Numeric(format!(
            "no sign change on [{lo}, {hi}]: f(lo) = {flo:e}, f(hi) = {fhi:e}"
        )));
    }
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    for _ in 0..2200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm.is_nan() {
            return Err(Error::Numeric(format!("function is NaN at {mid}")));
        }
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Return the endpoint with the smaller residual.
    if f(lo).abs() <= f(hi).abs() {
        Ok(lo)
    } else {
        Ok(hi)
    }
}

/// Expand then bisect: root of an increasing function starting from a guess bracket.
pub fn solve_increasing<F>(f: F, lo: f64, hi: f64, max_steps: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let (lo, hi) = expand_bracket(&f, lo, hi, max_steps)?;
    bisect_increasing(&f, lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two_to_machine_precision() {
        let r = bisect_increasing(|x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() <= 2.0 * f64::EPSILON);
    }

    #[test]
    fn bracket_grows_both_ways() {
        let (lo, hi) = expand_bracket(|x| x - 100.0, -1.0, 2.0, 20).unwrap();
        assert!(lo <= 100.0 && hi >= 100.0);
        let (lo, _) = expand_bracket(|x| x + 50.0, -1.0, 2.0, 20).unwrap();
        assert!(lo <= -50.0);
    }

    #[test]
    fn bracket_failure_is_reported() {
        assert!(matches!(
            expand_bracket(|_| -1.0, 0.0, 1.0, 10),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn no_sign_change_is_an_error() {
        assert!(bisect_increasing(|x| x + 10.0, 0.0, 1.0).is_err());
    }
}
