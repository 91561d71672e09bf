//! Bracketing root finder and golden-section minimiser.

use crate::error::{LabError, Result};
use crate::scalar::Real;

/// Bisection on `[lo, hi]` until the bracket is narrower than `xtol`.
pub fn bisect<T: Real, F: FnMut(T) -> T>(mut f: F, mut lo: T, mut hi: T, xtol: T) -> Result<T> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == T::zero() {
        return Ok(lo);
    }
    if fhi == T::zero() {
        return Ok(hi);
    }
    if (flo > T::zero()) == (fhi > T::zero()) {
        return Err(LabError::RootBracket(format!(
            "no sign change on [{:e}, {:e}]",
            lo.as_f64(),
            hi.as_f64()
        )));
    }
    for _ in 0..400 {
        let mid = T::lit(0.5) * (lo + hi);
        if (hi - lo).abs() <= xtol || mid == lo || mid == hi {
            return Ok(mid);
        }
        let fm = f(mid);
        if fm == T::zero() {
            return Ok(mid);
        }
        if (fm > T::zero()) == (flo > T::zero()) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(T::lit(0.5) * (lo + hi))
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`.
/// Returns `(argmin, min)`.
pub fn golden<T: Real, F: FnMut(T) -> T>(mut f: F, mut lo: T, mut hi: T, xtol: T) -> (T, T) {
    let invphi = T::lit(0.618_033_988_749_894_9);
    let mut x1 = hi - invphi * (hi - lo);
    let mut x2 = lo + invphi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo).abs() > xtol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_two() {
        let r = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-15).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn no_bracket() {
        assert!(bisect(|x: f64| x * x + 1.0, 0.0, 2.0, 1e-12).is_err());
    }

    #[test]
    fn parabola_min() {
        // a flat minimum only resolves to about sqrt(eps) in x
        let (x, v) = golden(|x: f64| (x - 0.3).powi(2) + 1.0, -1.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 2e-8 && (v - 1.0).abs() < 1e-15);
    }
}
