//! Bracketed root finding and one-dimensional minimisation.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Root of `f` on `[lo, hi]` given a sign change, by bisection with secant steps
/// when they stay inside the bracket. Stops once the bracket is narrower than
/// `abs_tol · (1 + |x|)`.
///
/// Returns `(root, iterations)`.
pub fn bisect<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    lo: T,
    hi: T,
    abs_tol: T,
    max_iter: usize,
) -> Result<(T, usize)> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == T::zero() {
        return Ok((a, 0));
    }
    if fb == T::zero() {
        return Ok((b, 0));
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoRootFound(format!(
            "no sign change on [{lo}, {hi}]"
        )));
    }
    let mut fb = fb;
    let two = T::lit(2.0);
    let abs_tol = abs_tol.max(T::epsilon() * T::lit(4.0));
    for it in 1..=max_iter {
        let width = b - a;
        // secant candidate, accepted only well inside the bracket
        let secant = a - fa * width / (fb - fa);
        let quarter = width / T::lit(4.0);
        let x = if secant.is_finite() && secant > a + quarter && secant < b - quarter {
            secant
        } else {
            (a + b) / two
        };
        if x <= a || x >= b {
            // the bracket is at machine resolution
            return Ok((if fa.abs() < fb.abs() { a } else { b }, it));
        }
        let fx = f(x);
        if fx == T::zero() {
            return Ok((x, it));
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
            fb = fx;
        }
        let mid = (a + b) / two;
        if b - a <= abs_tol * (T::one() + mid.abs()) {
            // return the endpoint with the smaller residual
            return Ok((if fa.abs() < fb.abs() { a } else { b }, it));
        }
    }
    Err(Error::NoRootFound(format!(
        "bisection did not converge in {max_iter} iterations"
    )))
}

/// Golden-section search for a minimum of a unimodal `f` on `[lo, hi]`.
///
/// Returns `(argmin, min, iterations)`.
pub fn golden_section<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    lo: T,
    hi: T,
    abs_tol: T,
    max_iter: usize,
) -> (T, T, usize) {
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let abs_tol = abs_tol.max(T::epsilon().sqrt());
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut it = 0;
    while it < max_iter && b - a > abs_tol * (T::one() + ((a + b) / T::lit(2.0)).abs()) {
        it += 1;
        // ties move toward the smaller retention
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        (c, fc, it)
    } else {
        (d, fd, it)
    }
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn geometric_grid<T: Real>(lo: T, hi: T, n: usize) -> Vec<T> {
    assert!(n >= 2 && lo > T::zero() && hi > lo);
    let (llo, lhi) = (lo.ln(), hi.ln());
    let step = (lhi - llo) / T::from_usize_lossy(n - 1);
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == n - 1 {
                hi
            } else {
                (llo + step * T::from_usize_lossy(i)).exp()
            }
        })
        .collect()
}

/// Result of scanning an objective over a grid.
#[derive(Debug, Clone)]
pub struct GridMinimum<T> {
    pub index: usize,
    pub values: Vec<T>,
}

impl<T: Real> GridMinimum<T> {
    /// Evaluates `f` on `grid`; ties keep the smallest index. Non-finite values never win.
    pub fn scan<F: FnMut(T) -> T>(grid: &[T], mut f: F) -> Self {
        let values: Vec<T> = grid.iter().map(|&x| f(x)).collect();
        let mut index = 0;
        let mut best = T::infinity();
        for (i, &v) in values.iter().enumerate() {
            if v.is_finite() && v < best {
                best = v;
                index = i;
            }
        }
        Self { index, values }
    }

    pub fn is_interior(&self) -> bool {
        self.index > 0 && self.index + 1 < self.values.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let (r, _) = bisect(|x: f64| x * x - 2.0, 0.0, 2.0, 1e-14, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn bisect_requires_sign_change() {
        assert!(bisect(|x: f64| x * x + 1.0, -1.0, 1.0, 1e-12, 100).is_err());
    }

    #[test]
    fn golden_finds_parabola_min() {
        let (x, fx, _) = golden_section(|x: f64| (x - 0.3).powi(2) + 1.0, 0.0, 1.0, 1e-12, 500);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_is_log_spaced_with_exact_ends() {
        let g = geometric_grid(0.01_f64, 100.0, 5);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[4], 100.0);
        assert!((g[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_scan_prefers_first_tie() {
        let g = [1.0, 2.0, 3.0, 4.0];
        let m = GridMinimum::scan(&g, |x: f64| if x < 3.5 && x > 1.5 { 0.0 } else { 1.0 });
        assert_eq!(m.index, 1);
        assert!(m.is_interior());
    }
}
