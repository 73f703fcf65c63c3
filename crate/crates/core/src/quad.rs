//! Adaptive Simpson quadrature with a relative error target.

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_DEPTH: u32 = 48;
const SEED_PANELS: usize = 16;

/// Integrates `f` over `[a, b]` to relative tolerance `rel_tol`.
pub fn integrate<T, F>(f: F, a: T, b: T, rel_tol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    integrate_pieces(f, &[a, b], rel_tol)
}

/// Integrates `f` over consecutive intervals of `breaks`, which must be
/// non-decreasing. Placing breakpoints at known features (boundary-layer
/// scale heights, kinks) keeps the recursion shallow.
pub fn integrate_pieces<T, F>(f: F, breaks: &[T], rel_tol: T) -> Result<T>
where
    T: Real,
    F: Fn(T) -> T,
{
    if breaks.len() < 2 {
        return Ok(T::zero());
    }
    // A coarse composite pass fixes the absolute error budget.
    let mut panels = Vec::with_capacity((breaks.len() - 1) * SEED_PANELS);
    let mut coarse = T::zero();
    for w in breaks.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let step = (hi - lo) / T::from_count(SEED_PANELS);
        for k in 0..SEED_PANELS {
            let x0 = lo + step * T::from_count(k);
            let x1 = if k + 1 == SEED_PANELS { hi } else { x0 + step };
            let xm = (x0 + x1) * T::lit(0.5);
            let (f0, fm, f1) = (f(x0), f(xm), f(x1));
            let s = simpson(x0, x1, f0, fm, f1);
            coarse = coarse + s;
            panels.push((x0, x1, f0, fm, f1, s));
        }
    }
    let scale = coarse.abs();
    if scale == T::zero() {
        return Ok(T::zero());
    }
    let budget = rel_tol * scale / T::from_count(panels.len());
    let mut total = T::zero();
    for (x0, x1, f0, fm, f1, s) in panels {
        total = total + refine(&f, x0, x1, f0, fm, f1, s, budget, MAX_DEPTH).ok_or(
            Error::Quadrature {
                a: x0.to_f64_lossy(),
                b: x1.to_f64_lossy(),
                tol: rel_tol.to_f64_lossy(),
            },
        )?;
    }
    Ok(total)
}

#[inline]
fn simpson<T: Real>(a: T, b: T, fa: T, fm: T, fb: T) -> T {
    (b - a) / T::lit(6.0) * (fa + T::lit(4.0) * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<T: Real, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> Option<T> {
    let m = (a + b) * T::lit(0.5);
    let lm = (a + m) * T::lit(0.5);
    let rm = (m + b) * T::lit(0.5);
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= T::lit(15.0) * tol {
        return Some(left + right + delta / T::lit(15.0));
    }
    if depth == 0 || m <= a || m >= b {
        return None;
    }
    let half = tol * T::lit(0.5);
    Some(
        refine(f, a, m, fa, flm, fm, left, half, depth - 1)?
            + refine(f, m, b, fm, frm, fb, right, half, depth - 1)?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let v = integrate(|x: f64| 3.0 * x * x - x, 0.0, 2.0, 1e-10).unwrap();
        assert!((v - 6.0).abs() < 1e-12);
    }

    #[test]
    fn endpoint_power_singularity() {
        // ∫_0^1 x^(5/6) dx = 6/11
        let v = integrate(|x: f64| x.powf(5.0 / 6.0), 0.0, 1.0, 1e-8).unwrap();
        assert!((v - 6.0 / 11.0).abs() / (6.0 / 11.0) < 1e-8);
    }

    #[test]
    fn steep_exponential_with_breaks() {
        let exact = 100.0 * (1.0 - (-5000.0_f64 / 100.0).exp());
        let v = integrate_pieces(|x: f64| (-x / 100.0).exp(), &[0.0, 300.0, 5000.0], 1e-6).unwrap();
        assert!((v - exact).abs() / exact < 1e-6);
    }

    #[test]
    fn single_precision() {
        let v = integrate(|x: f32| x.sin(), 0.0, std::f32::consts::PI, 1e-4).unwrap();
        assert!((v - 2.0).abs() < 1e-4);
    }

    #[test]
    fn zero_integrand() {
        assert_eq!(integrate(|_x: f64| 0.0, 0.0, 1.0, 1e-6).unwrap(), 0.0);
    }
}
