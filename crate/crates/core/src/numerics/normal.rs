//! Standard normal density, distribution and quantile functions.
//!
//! `erfc` is evaluated in double precision (FreeBSD msun via `libm`), which keeps
//! relative accuracy deep into both tails; narrower scalars round the result.

use crate::error::{Error, Result};
use crate::scalar::Real;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn normal_pdf<T: Real>(x: T) -> T {
    let x = x.to_f64_lossy();
    T::lit(FRAC_1_SQRT_2PI * (-0.5 * x * x).exp())
}

/// Φ(x).
pub fn normal_cdf<T: Real>(x: T) -> T {
    T::lit(cdf_f64(x.to_f64_lossy()))
}

/// 1 − Φ(x), accurate in relative terms for large positive `x`.
pub fn normal_survival<T: Real>(x: T) -> T {
    T::lit(cdf_f64(-x.to_f64_lossy()))
}

fn cdf_f64(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Φ⁻¹(p) for p in (0, 1).
///
/// A rational starting value is polished with Halley steps against `normal_cdf`,
/// giving |Φ(Φ⁻¹(p)) − p| at the level of double rounding.
pub fn normal_quantile<T: Real>(p: T) -> Result<T> {
    let p = p.to_f64_lossy();
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::DomainError(format!(
            "normal quantile requires 0 < p < 1, got {p}"
        )));
    }
    Ok(T::lit(quantile_f64(p)))
}

pub(crate) fn quantile_f64(p: f64) -> f64 {
    if p == 0.5 {
        return 0.0;
    }
    // Work in the lower tail: Φ⁻¹(p) = −Φ⁻¹(1 − p).
    let (q, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
    let mut x = initial_upper_tail(q);
    // x solves Φ(−x) = q with x ≥ 0.
    for _ in 0..8 {
        let tail = cdf_f64(-x);
        let dens = FRAC_1_SQRT_2PI * (-0.5 * x * x).exp();
        if dens == 0.0 {
            break;
        }
        // f(x) = q − Φ(−x), f' = φ(x), f'' = −x φ(x)
        let e = (q - tail) / dens;
        let step = e / (1.0 + 0.5 * x * e);
        x -= step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    sign * x
}

/// Abramowitz–Stegun 26.2.23 starting value for the upper-tail quantile (|error| < 4.5e-4).
fn initial_upper_tail(q: f64) -> f64 {
    let t = (-2.0 * q.ln()).sqrt();
    let num = 2.515_517 + 0.802_853 * t + 0.010_328 * t * t;
    let den = 1.0 + 1.432_788 * t + 0.189_269 * t * t + 0.001_308 * t * t * t;
    (t - num / den).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_reference_values() {
        assert_eq!(normal_quantile(0.5_f64).unwrap(), 0.0);
        assert!((normal_quantile(0.75_f64).unwrap() - 0.674_489_750_196_081_7).abs() < 1e-13);
        assert!((normal_quantile(0.975_f64).unwrap() - 1.959_963_984_540_054).abs() < 1e-13);
        assert!((normal_quantile(0.025_f64).unwrap() + 1.959_963_984_540_054).abs() < 1e-13);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for k in 1..2000 {
            let p = k as f64 / 2000.0;
            let x = normal_quantile(p).unwrap();
            assert!((normal_cdf(x) - p).abs() < 1e-12, "p = {p}");
        }
        for &p in &[1e-300, 1e-100, 1e-20, 1e-10] {
            let x: f64 = normal_quantile(p).unwrap();
            assert!(((normal_cdf(x) - p) / p).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn quantile_is_monotone() {
        let mut prev = f64::NEG_INFINITY;
        for k in 1..10_000 {
            let x = normal_quantile(k as f64 / 10_000.0).unwrap();
            assert!(x > prev);
            prev = x;
        }
    }

    #[test]
    fn quantile_rejects_outside_unit_interval() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(normal_quantile(p), Err(Error::DomainError(_))));
        }
    }

    #[test]
    fn tails_are_relatively_accurate() {
        // Mills-ratio bound: φ(x)/x · (1 − 1/x²) < 1 − Φ(x) < φ(x)/x
        let x = 30.0_f64;
        let s = normal_survival(x);
        let upper = normal_pdf(x) / x;
        assert!(s < upper && s > upper * (1.0 - 1.0 / (x * x)));
    }

    #[test]
    fn single_precision_follows() {
        let z: f32 = normal_quantile(0.75_f32).unwrap();
        assert!((z - 0.674_489_8).abs() < 1e-6);
    }
}
