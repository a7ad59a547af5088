//! Bracketed scalar root finding.

use crate::error::{Error, Result};

/// Bisection on a sign-changing bracket `[lo, hi]`, refined until the
/// bracket width falls below `abs_tol`.
///
/// The midpoint of the final bracket is returned. An exact zero at an
/// endpoint is returned immediately.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, abs_tol: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::domain(format!("invalid bracket [{lo}, {hi}]")));
    }
    if !(abs_tol > 0.0) {
        return Err(Error::domain("bisection tolerance must be positive"));
    }
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() || f_lo.is_nan() || f_hi.is_nan() {
        return Err(Error::NoRoot(format!(
            "f({lo}) = {f_lo} and f({hi}) = {f_hi} do not bracket a root"
        )));
    }
    // 200 halvings exhaust the f64 mantissa for any finite bracket.
    for _ in 0..200 {
        if hi - lo <= abs_tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Grows the right end of `[lo, start]` by doubling until `f` changes sign
/// relative to `f(lo)`, giving up once the end exceeds `cap`.
pub fn expand_right<F>(mut f: F, lo: f64, start: f64, cap: f64) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let sign_lo = f(lo).signum();
    let mut hi = start.max(lo);
    loop {
        let value = f(hi);
        if value == 0.0 || value.signum() != sign_lo {
            return Ok(hi);
        }
        if hi >= cap {
            return Err(Error::SolverFailure(format!(
                "no sign change found in [{lo}, {cap}]"
            )));
        }
        hi = (hi * 2.0).min(cap);
    }
}
