use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// Bisection for a root of `f` on `[lo, hi]`.
///
/// `f(lo)` and `f(hi)` must differ in sign (or one must be zero). Stops when
/// the bracket is narrower than `xtol` or after `max_iter` halvings and
/// returns the midpoint of the final bracket.
pub fn bisect<T, F>(mut f: F, lo: T, hi: T, xtol: T, max_iter: usize) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = f(a)?;
    let fb = f(b)?;
    if fa == T::zero() {
        return Ok(a);
    }
    if fb == T::zero() {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(Error::Calibration {
            quantity: "root",
            reason: format!("no sign change on [{a}, {b}]: f = {fa}, {fb}"),
        });
    }
    let half = lit::<T>(0.5);
    for _ in 0..max_iter {
        let mid = a + (b - a) * half;
        if b - a <= xtol || mid == a || mid == b {
            break;
        }
        let fm = f(mid)?;
        if fm == T::zero() {
            return Ok(mid);
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    Ok(a + (b - a) * half)
}
