//! Decibel helpers and number formatting for reports.

use crate::scalar::Real;

/// `10·log10(x)`.
#[inline]
pub fn db<T: Real>(x: T) -> T {
    T::lit(10.0) * x.log10()
}

/// Inverse of [`db`].
#[inline]
pub fn from_db<T: Real>(x_db: T) -> T {
    T::lit(10.0).powf(x_db / T::lit(10.0))
}

/// Nine significant digits, plain notation where it stays short.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if (-5..=9).contains(&e) {
        let d = (8 - e).max(0) as usize;
        let s = format!("{x:.d$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.8e}")
    }
}
