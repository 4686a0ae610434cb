//! Distortion risk measures and their value at a standard normal variable.
//!
//! A distortion `h : [0,1] → [0,1]` acts on survival probabilities, so the distorted
//! expectation of `Z` is `∫ h(P(Z > x)) dx` (signed Choquet integral). Every retention
//! objective only needs the scalar `φ_h(Z)` for `Z ~ N(0,1)`; it plays the role of `Φ⁻¹(p)`.
//!
//! `VaR { p }` is the indicator `I{s > 1 − p}`, whose Choquet integral is the
//! left-continuous `p`-quantile.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::numerics::{integrate, normal_pdf, normal_quantile, QuadratureOptions};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DistortionMeasure<T> {
    VaR { p: T },
    ES { p: T },
    /// `1 − (1 − s)^β`, β ≥ 1
    DualPower { beta: T },
    /// `(1 + β)s − βs²`, β ∈ [0, 1]
    Gini { beta: T },
    /// Proportional hazard transform `s^(1−β)`, β ∈ [0, 1)
    PHT { beta: T },
    /// `Φ(Φ⁻¹(s) + β)`, β ≥ 0
    Wang { beta: T },
}

fn log_normal_survival(u: f64) -> f64 {
    if u < 30.0 {
        crate::numerics::normal_survival(u).ln()
    } else {
        let r = 1.0 / (u * u);
        -0.5 * u * u - u.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            + (1.0 - r + 3.0 * r * r - 15.0 * r * r * r).ln()
    }
}

impl<T: Real> DistortionMeasure<T> {
    pub fn validate(&self) -> Result<()> {
        let (name, v, ok) = match *self {
            DistortionMeasure::VaR { p } => ("p", p, p > T::zero() && p < T::one()),
            DistortionMeasure::ES { p } => ("p", p, p > T::zero() && p < T::one()),
            DistortionMeasure::DualPower { beta } => ("beta", beta, beta >= T::one()),
            DistortionMeasure::Gini { beta } => {
                ("beta", beta, beta >= T::zero() && beta <= T::one())
            }
            DistortionMeasure::PHT { beta } => ("beta", beta, beta >= T::zero() && beta < T::one()),
            DistortionMeasure::Wang { beta } => ("beta", beta, beta >= T::zero()),
        };
        if ok && v.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(
                name,
                format!("{v} is outside the admissible range for {}", self.name()),
            ))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            DistortionMeasure::VaR { .. } => "var",
            DistortionMeasure::ES { .. } => "es",
            DistortionMeasure::DualPower { .. } => "dualpower",
            DistortionMeasure::Gini { .. } => "gini",
            DistortionMeasure::PHT { .. } => "pht",
            DistortionMeasure::Wang { .. } => "wang",
        }
    }

    pub fn parameter(&self) -> T {
        match *self {
            DistortionMeasure::VaR { p } | DistortionMeasure::ES { p } => p,
            DistortionMeasure::DualPower { beta }
            | DistortionMeasure::Gini { beta }
            | DistortionMeasure::PHT { beta }
            | DistortionMeasure::Wang { beta } => beta,
        }
    }

    /// The VaR level when this is a VaR measure.
    pub fn var_level(&self) -> Option<T> {
        match *self {
            DistortionMeasure::VaR { p } => Some(p),
            _ => None,
        }
    }

    /// `h(s)` for `s ∈ [0, 1]`.
    pub fn h(&self, s: T) -> T {
        let s = s.max(T::zero()).min(T::one());
        match *self {
            DistortionMeasure::VaR { p } => {
                if s > T::one() - p {
                    T::one()
                } else {
                    T::zero()
                }
            }
            DistortionMeasure::ES { p } => (s / (T::one() - p)).min(T::one()),
            DistortionMeasure::DualPower { beta } => T::one() - (T::one() - s).powf(beta),
            DistortionMeasure::Gini { beta } => (T::one() + beta) * s - beta * s * s,
            DistortionMeasure::PHT { beta } => s.powf(T::one() - beta),
            DistortionMeasure::Wang { beta } => {
                if s <= T::zero() {
                    T::zero()
                } else if s >= T::one() {
                    T::one()
                } else {
                    crate::numerics::normal_cdf(
                        normal_quantile(s).expect("s in (0,1)") + beta,
                    )
                }
            }
        }
    }

    /// `φ_h(Z)` for a standard normal `Z`.
    ///
    /// VaR and ES use `Φ⁻¹(p)` and `φ(Φ⁻¹(p))/(1 − p)`. The smooth distortions integrate
    /// `u · h′(Φ(−u)) φ(u)` over the real line.
    pub fn phi_h_normal(&self) -> Result<T> {
        self.validate()?;
        match *self {
            DistortionMeasure::VaR { p } => normal_quantile(p),
            DistortionMeasure::ES { p } => {
                let z = normal_quantile(p)?;
                Ok(normal_pdf(z) / (T::one() - p))
            }
            _ => {
                let beta = self.parameter().to_f64_lossy();
                let weight: Box<dyn Fn(f64) -> f64> = match self {
                    DistortionMeasure::Wang { .. } => Box::new(move |u| normal_pdf(u - beta)),
                    DistortionMeasure::DualPower { .. } => Box::new(move |u: f64| {
                        beta * crate::numerics::normal_cdf(u).powf(beta - 1.0) * normal_pdf(u)
                    }),
                    DistortionMeasure::Gini { .. } => Box::new(move |u: f64| {
                        ((1.0 + beta) - 2.0 * beta * crate::numerics::normal_survival(u))
                            * normal_pdf(u)
                    }),
                    DistortionMeasure::PHT { .. } => Box::new(move |u: f64| {
                        let log_phi = -0.5 * u * u - 0.5 * (2.0 * std::f64::consts::PI).ln();
                        (1.0 - beta) * (log_phi - beta * log_normal_survival(u)).exp()
                    }),
                    _ => unreachable!(),
                };
                // the PHT weight decays like exp(−(1 − β)u²/2) on the right
                let spread = match self {
                    DistortionMeasure::PHT { .. } => (1.0 - beta).max(1e-6),
                    _ => 1.0,
                };
                let reach = (2.0 * 745.0 / spread).sqrt() + beta.abs();
                let lower = -40.0_f64.min(reach);
                let opts = QuadratureOptions {
                    abs_tol: 1e-13,
                    rel_tol: 1e-11,
                    max_subdivisions: 4000,
                };
                let breaks = [-8.0, -2.0, 0.0, 2.0, 8.0, beta];
                let value = integrate(|u: f64| u * weight(u), lower, reach, &breaks, opts)?;
                // identity distortions (β = 0) integrate to round-off around E Z = 0
                Ok(T::lit(if value.abs() < 1e-12 { 0.0 } else { value }))
            }
        }
    }

    /// `φ_h(Z)`, refusing measures for which it is not positive.
    pub fn positive_phi(&self) -> Result<T> {
        let phi = self.phi_h_normal()?;
        if phi > T::zero() {
            Ok(phi)
        } else {
            Err(Error::NonpositivePhi {
                phi: phi.to_f64_lossy(),
            })
        }
    }
}

impl<T: Real> fmt::Display for DistortionMeasure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name(), self.parameter())
    }
}

impl<T: Real> FromStr for DistortionMeasure<T> {
    type Err = Error;

    /// Parses `var:0.75`, `es:0.9`, `dualpower:2`, `gini:0.5`, `pht:0.3`, `wang:1.0`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid("measure", format!("expected <kind>:<value>, got {s:?}")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::invalid("measure", format!("bad numeric parameter {value:?}")))?;
        let v = T::lit(v);
        let m = match kind.trim().to_ascii_lowercase().as_str() {
            "var" => DistortionMeasure::VaR { p: v },
            "es" | "cvar" | "tvar" => DistortionMeasure::ES { p: v },
            "dualpower" | "dual-power" => DistortionMeasure::DualPower { beta: v },
            "gini" => DistortionMeasure::Gini { beta: v },
            "pht" => DistortionMeasure::PHT { beta: v },
            "wang" => DistortionMeasure::Wang { beta: v },
            other => {
                return Err(Error::invalid("measure", format!("unknown distortion {other:?}")))
            }
        };
        m.validate()?;
        Ok(m)
    }
}

/// `φ_h(Z)` through the Choquet integral `∫₀^∞ h(Φ(−x)) dx − ∫_{−∞}^0 (1 − h(Φ(−x))) dx`.
/// An independent route used to cross-check [`DistortionMeasure::phi_h_normal`].
pub fn choquet_normal(measure: &DistortionMeasure<f64>) -> Result<f64> {
    let opts = QuadratureOptions {
        abs_tol: 1e-12,
        rel_tol: 1e-10,
        max_subdivisions: 4000,
    };
    let jump = match measure {
        DistortionMeasure::VaR { p } => vec![normal_quantile(*p)?],
        DistortionMeasure::ES { p } => vec![normal_quantile(*p)?],
        _ => vec![],
    };
    let upper_breaks: Vec<f64> = jump.iter().copied().filter(|&x| x > 0.0).collect();
    let lower_breaks: Vec<f64> = jump.iter().copied().filter(|&x| x < 0.0).collect();
    let reach = match measure {
        DistortionMeasure::PHT { beta } => (2.0 * 745.0 / (1.0 - beta).max(1e-6)).sqrt(),
        _ => 40.0,
    };
    let right = integrate(
        |x: f64| measure.h(crate::numerics::normal_survival(x)),
        0.0,
        reach,
        &upper_breaks,
        opts,
    )?;
    let left = integrate(
        |x: f64| 1.0 - measure.h(crate::numerics::normal_survival(x)),
        -40.0,
        0.0,
        &lower_breaks,
        opts,
    )?;
    Ok(right - left)
}
