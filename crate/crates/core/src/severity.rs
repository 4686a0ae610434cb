//! Claim-severity models and their truncated / excess moments.
//!
//! Two models are supported: the Pareto type-II (Lomax) law with survival
//! `(1 + x/λ)^(−α)`, and the empirical law of a loss sample. Both expose the
//! quantities the retention objectives are built from, evaluated at a retention `d`:
//!
//! | symbol | definition |
//! |--------|------------|
//! | `sbar` | P(X > d) |
//! | `mu1`  | E(X ∧ d) |
//! | `mu2`  | E(X² ∧ d²) |
//! | `nu1`  | E(X − d)₊ |
//! | `nu2`  | E(X − d)₊² |
//!
//! The Pareto mean is λ/(α − 1). (Some texts print α/(λ − 1); for α = 9, λ = 8 both equal 1.)

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{integrate, normal_pdf, QuadratureOptions};
use crate::scalar::Real;

/// Sorted loss sample with prefix sums of `x` and `x²`, so every truncated moment
/// costs one binary search.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLosses<T> {
    sorted: Vec<T>,
    sum1: Vec<T>,
    sum2: Vec<T>,
}

impl<T: Real> EmpiricalLosses<T> {
    pub fn new(mut losses: Vec<T>) -> Result<Self> {
        if losses.is_empty() {
            return Err(Error::invalid("losses", "sample is empty"));
        }
        if let Some(bad) = losses.iter().find(|x| !(x.is_finite() && **x >= T::zero())) {
            return Err(Error::invalid(
                "losses",
                format!("losses must be finite and nonnegative, found {bad}"),
            ));
        }
        losses.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let mut sum1 = Vec::with_capacity(losses.len() + 1);
        let mut sum2 = Vec::with_capacity(losses.len() + 1);
        let (mut s1, mut s2) = (T::zero(), T::zero());
        sum1.push(s1);
        sum2.push(s2);
        for &x in &losses {
            s1 = s1 + x;
            s2 = s2 + x * x;
            sum1.push(s1);
            sum2.push(s2);
        }
        Ok(Self {
            sorted: losses,
            sum1,
            sum2,
        })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn as_slice(&self) -> &[T] {
        &self.sorted
    }

    fn n(&self) -> T {
        T::from_usize_lossy(self.sorted.len())
    }

    /// Number of losses `≤ x`.
    pub fn count_le(&self, x: T) -> usize {
        self.sorted.partition_point(|&v| v <= x)
    }

    /// Number of losses `< x`.
    pub fn count_lt(&self, x: T) -> usize {
        self.sorted.partition_point(|&v| v < x)
    }

    pub fn min(&self) -> T {
        self.sorted[0]
    }

    pub fn max(&self) -> T {
        self.sorted[self.sorted.len() - 1]
    }

    pub fn total(&self) -> T {
        self.sum1[self.sorted.len()]
    }

    pub fn mean(&self) -> T {
        self.total() / self.n()
    }

    pub fn second_moment(&self) -> T {
        self.sum2[self.sorted.len()] / self.n()
    }

    fn moments_at(&self, d: T) -> TruncatedMoments<T> {
        let n = self.sorted.len();
        let k = self.count_le(d);
        let above = T::from_usize_lossy(n - k);
        let nn = self.n();
        let tail1 = self.sum1[n] - self.sum1[k];
        let tail2 = self.sum2[n] - self.sum2[k];
        let nu1 = (tail1 - d * above) / nn;
        let nu2 = (tail2 - T::lit(2.0) * d * tail1 + d * d * above) / nn;
        TruncatedMoments {
            d,
            sbar: above / nn,
            mu1: (self.sum1[k] + d * above) / nn,
            mu2: (self.sum2[k] + d * d * above) / nn,
            nu1: nu1.max(T::zero()),
            nu2: nu2.max(T::zero()),
        }
    }
}

/// A claim-severity distribution.
#[derive(Debug, Clone, PartialEq)]
pub enum SeverityModel<T> {
    /// Pareto type II with shape `alpha` and scale `lambda`.
    ParetoII { alpha: T, lambda: T },
    Empirical(EmpiricalLosses<T>),
}

/// Truncated and excess moments at a retention `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedMoments<T> {
    pub d: T,
    pub sbar: T,
    pub mu1: T,
    pub mu2: T,
    pub nu1: T,
    pub nu2: T,
}

impl<T: Real> TruncatedMoments<T> {
    /// Var(X ∧ d).
    pub fn retained_variance(&self) -> T {
        self.mu2 - self.mu1 * self.mu1
    }

    /// Var((X − d)₊).
    pub fn ceded_variance(&self) -> T {
        self.nu2 - self.nu1 * self.nu1
    }
}

/// Third and fourth moments of `X ∧ d` with standardised skewness and excess kurtosis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HigherTruncatedMoments<T> {
    pub d: T,
    /// E(X ∧ d)³
    pub m3: T,
    /// E(X ∧ d)⁴
    pub m4: T,
    pub kappa3: T,
    pub kappa4: T,
}

/// ∫₁ᵘ s^c ds written with expm1/ln1p so small retentions keep full precision.
fn power_integral<T: Real>(log_u: T, c: T) -> T {
    let c1 = c + T::one();
    if c1.abs() < T::lit(1e-12) {
        log_u
    } else {
        (c1 * log_u).exp_m1() / c1
    }
}

impl<T: Real> SeverityModel<T> {
    pub fn pareto(alpha: T, lambda: T) -> Result<Self> {
        if !(alpha > T::zero() && alpha.is_finite()) {
            return Err(Error::invalid("alpha", format!("must be positive, got {alpha}")));
        }
        if !(lambda > T::zero() && lambda.is_finite()) {
            return Err(Error::invalid("lambda", format!("must be positive, got {lambda}")));
        }
        Ok(SeverityModel::ParetoII { alpha, lambda })
    }

    pub fn empirical(losses: Vec<T>) -> Result<Self> {
        EmpiricalLosses::new(losses).map(SeverityModel::Empirical)
    }

    /// The same law for `c·X`.
    pub fn scaled(&self, c: T) -> Result<Self> {
        match self {
            SeverityModel::ParetoII { alpha, lambda } => Self::pareto(*alpha, *lambda * c),
            SeverityModel::Empirical(e) => {
                Self::empirical(e.as_slice().iter().map(|&x| x * c).collect())
            }
        }
    }

    pub fn empirical_losses(&self) -> Option<&EmpiricalLosses<T>> {
        match self {
            SeverityModel::Empirical(e) => Some(e),
            _ => None,
        }
    }

    /// P(X > x). The empirical version counts strictly larger losses.
    pub fn survival(&self, x: T) -> T {
        match self {
            SeverityModel::ParetoII { alpha, lambda } => {
                if x <= T::zero() {
                    T::one()
                } else {
                    (-*alpha * (x / *lambda).ln_1p()).exp()
                }
            }
            SeverityModel::Empirical(e) => {
                T::from_usize_lossy(e.len() - e.count_le(x)) / e.n()
            }
        }
    }

    pub fn cdf(&self, x: T) -> T {
        match self {
            SeverityModel::ParetoII { alpha, lambda } => {
                if x <= T::zero() {
                    T::zero()
                } else {
                    -(-*alpha * (x / *lambda).ln_1p()).exp_m1()
                }
            }
            SeverityModel::Empirical(e) => T::from_usize_lossy(e.count_le(x)) / e.n(),
        }
    }

    /// P(X = 0).
    pub fn atom_at_zero(&self) -> T {
        match self {
            SeverityModel::ParetoII { .. } => T::zero(),
            SeverityModel::Empirical(_) => self.cdf(T::zero()),
        }
    }

    /// Density where one exists.
    pub fn density(&self, x: T) -> Option<T> {
        match self {
            SeverityModel::ParetoII { alpha, lambda } => Some(if x < T::zero() {
                T::zero()
            } else {
                *alpha / *lambda * (-(*alpha + T::one()) * (x / *lambda).ln_1p()).exp()
            }),
            SeverityModel::Empirical(_) => None,
        }
    }

    /// Generalised left-continuous inverse inf{x : F(x) ≥ s}.
    pub fn quantile(&self, s: T) -> T {
        match self {
            SeverityModel::ParetoII { alpha, lambda } => {
                if s <= T::zero() {
                    T::zero()
                } else if s >= T::one() {
                    T::infinity()
                } else {
                    *lambda * (-(-s).ln_1p() / *alpha).exp_m1()
                }
            }
            SeverityModel::Empirical(e) => {
                let n = e.len();
                let rank = (s * e.n()).ceil().to_usize().unwrap_or(0).clamp(1, n);
                e.sorted[rank - 1]
            }
        }
    }

    /// Right-continuous inverse sup{x : F(x) ≤ s}: the right end of any plateau of F at level s.
    pub fn upper_quantile(&self, s: T) -> T {
        match self {
            SeverityModel::ParetoII { .. } => self.quantile(s),
            SeverityModel::Empirical(e) => {
                let n = e.len();
                let j = (s * e.n()).floor().to_usize().unwrap_or(0) + 1;
                if j > n {
                    T::infinity()
                } else {
                    e.sorted[j - 1]
                }
            }
        }
    }

    /// E(X).
    pub fn mean(&self) -> Result<T> {
        match self {
            SeverityModel::ParetoII { alpha, lambda } => {
                if *alpha <= T::one() {
                    Err(Error::NonfiniteMoment(format!("E(X) is infinite for alpha = {alpha} <= 1")))
                } else {
                    Ok(*lambda / (*alpha - T::one()))
                }
            }
            SeverityModel::Empirical(e) => Ok(e.mean()),
        }
    }

    /// E(X²).
    pub fn second_moment(&self) -> Result<T> {
        match self {
            SeverityModel::ParetoII { alpha, lambda } => {
                if *alpha <= T::lit(2.0) {
                    Err(Error::NonfiniteMoment(format!("E(X^2) is infinite for alpha = {alpha} <= 2")))
                } else {
                    let two = T::lit(2.0);
                    Ok(two * *lambda * *lambda / ((*alpha - T::one()) * (*alpha - two)))
                }
            }
            SeverityModel::Empirical(e) => Ok(e.second_moment()),
        }
    }

    /// Tail index for regular-variation checks; `None` when unknown (empirical data).
    pub fn tail_index(&self) -> Option<T> {
        match self {
            SeverityModel::ParetoII { alpha, .. } => Some(*alpha),
            SeverityModel::Empirical(_) => None,
        }
    }

    /// `(sbar, mu1, mu2, nu1)`; requires only E(X) < ∞.
    pub fn retained_moments(&self, d: T) -> Result<(T, T, T, T)> {
        match self {
            SeverityModel::ParetoII { alpha, lambda } => {
                if *alpha <= T::one() {
                    return Err(Error::NonfiniteMoment(format!(
                        "E(X - d)+ is infinite for alpha = {alpha} <= 1"
                    )));
                }
                let d = d.max(T::zero());
                let log_u = (d / *lambda).ln_1p();
                let sbar = (-*alpha * log_u).exp();
                let mu1 = *lambda * power_integral(log_u, -*alpha);
                let mu2 = T::lit(2.0)
                    * *lambda
                    * *lambda
                    * (power_integral(log_u, T::one() - *alpha) - power_integral(log_u, -*alpha));
                let nu1 = *lambda / (*alpha - T::one()) * ((T::one() - *alpha) * log_u).exp();
                Ok((sbar, mu1, mu2.max(T::zero()), nu1))
            }
            SeverityModel::Empirical(e) => {
                let m = e.moments_at(d);
                Ok((m.sbar, m.mu1, m.mu2, m.nu1))
            }
        }
    }

    /// All five truncated/excess moments at `d`. Pareto needs α > 2 for `nu2`.
    pub fn truncated_moments(&self, d: T) -> Result<TruncatedMoments<T>> {
        if !(d >= T::zero()) {
            return Err(Error::DomainError(format!("retention must be >= 0, got {d}")));
        }
        match self {
            SeverityModel::ParetoII { alpha, lambda } => {
                let two = T::lit(2.0);
                if *alpha <= two {
                    return Err(Error::NonfiniteMoment(format!(
                        "E(X - d)+^2 is infinite for alpha = {alpha} <= 2"
                    )));
                }
                let (sbar, mu1, mu2, nu1) = self.retained_moments(d)?;
                let log_u = (d / *lambda).ln_1p();
                let nu2 = two * *lambda * *lambda / ((*alpha - T::one()) * (*alpha - two))
                    * ((two - *alpha) * log_u).exp();
                Ok(TruncatedMoments {
                    d,
                    sbar,
                    mu1,
                    mu2,
                    nu1,
                    nu2,
                })
            }
            SeverityModel::Empirical(e) => Ok(e.moments_at(d)),
        }
    }

    /// Third/fourth moments of `X ∧ d`, plus κ̃₃(d) and κ̃₄(d).
    pub fn higher_truncated_moments(&self, d: T) -> Result<HigherTruncatedMoments<T>> {
        if !(d > T::zero()) {
            return Err(Error::DomainError(format!("retention must be > 0, got {d}")));
        }
        // raw moments E(X∧d)^k and central moments E(X∧d − m)^k, k = 1..4
        let (raw, central) = match self {
            SeverityModel::ParetoII { alpha, lambda } => {
                let (alpha, lambda) = (*alpha, *lambda);
                let opts = QuadratureOptions {
                    abs_tol: 1e-14,
                    rel_tol: 1e-12,
                    max_subdivisions: 4000,
                };
                let density =
                    |x: T| alpha / lambda * (-(alpha + T::one()) * (x / lambda).ln_1p()).exp();
                let sbar = self.survival(d);
                let breaks: Vec<T> = (0..12)
                    .map(|j| lambda * T::lit(10f64.powi(j - 2)))
                    .collect();
                let moment = |g: &dyn Fn(T) -> T| -> Result<T> {
                    let body = integrate(|x| g(x) * density(x), T::zero(), d, &breaks, opts)?;
                    Ok(body + g(d) * sbar)
                };
                let m = moment(&|x| x)?;
                let mut raw = [T::zero(); 4];
                let mut central = [T::zero(); 4];
                raw[0] = m;
                for k in 2..=4 {
                    let kk = k as i32;
                    raw[k - 1] = moment(&|x: T| x.powi(kk))?;
                    central[k - 1] = moment(&|x: T| (x - m).powi(kk))?;
                }
                (raw, central)
            }
            SeverityModel::Empirical(e) => {
                let n = e.n();
                let capped = || e.as_slice().iter().map(|&x| x.min(d));
                let m = capped().fold(T::zero(), |s, x| s + x) / n;
                let mut raw = [T::zero(); 4];
                let mut central = [T::zero(); 4];
                raw[0] = m;
                for k in 2..=4_i32 {
                    raw[k as usize - 1] = capped().fold(T::zero(), |s, x| s + x.powi(k)) / n;
                    central[k as usize - 1] =
                        capped().fold(T::zero(), |s, x| s + (x - m).powi(k)) / n;
                }
                (raw, central)
            }
        };
        let var = central[1];
        if !(var > T::zero()) {
            return Err(Error::DegenerateVariance { d: d.to_f64_lossy() });
        }
        Ok(HigherTruncatedMoments {
            d,
            m3: raw[2],
            m4: raw[3],
            kappa3: central[2] / var.powf(T::lit(1.5)),
            kappa4: central[3] / (var * var) - T::lit(3.0),
        })
    }

    /// Draws `n` independent losses. Pareto uses inverse transform, empirical
    /// resamples with replacement. Deterministic in `(seed, n)`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<T> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = vec![T::zero(); n];
        self.sample_into(&mut rng, &mut out);
        out
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [T]) {
        match self {
            SeverityModel::ParetoII { alpha, lambda } => {
                let inv_alpha = alpha.recip();
                for slot in out.iter_mut() {
                    let u = T::lit(rng.gen::<f64>());
                    // λ((1 − U)^(−1/α) − 1)
                    *slot = *lambda * (-(-u).ln_1p() * inv_alpha).exp_m1();
                }
            }
            SeverityModel::Empirical(e) => {
                let n = e.len();
                for slot in out.iter_mut() {
                    *slot = e.sorted[rng.gen_range(0..n)];
                }
            }
        }
    }
}

/// Gaussian kernel density estimate `(1/(N h)) Σ φ((x − Xᵢ)/h)`.
pub fn kde_density<T: Real>(losses: &[T], x: T, bandwidth: T) -> Result<T> {
    if losses.is_empty() {
        return Err(Error::invalid("losses", "sample is empty"));
    }
    if !(bandwidth > T::zero()) {
        return Err(Error::invalid("bandwidth", format!("must be positive, got {bandwidth}")));
    }
    let sum = losses
        .iter()
        .fold(T::zero(), |s, &xi| s + normal_pdf((x - xi) / bandwidth));
    Ok(sum / (T::from_usize_lossy(losses.len()) * bandwidth))
}

/// Descriptive statistics of a loss sample with its Lorenz curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossSummary<T> {
    pub count: usize,
    pub mean: T,
    pub median: T,
    pub max: T,
    /// `(k/N, share of the k smallest losses)` for k = 0..=N.
    pub lorenz: Vec<(T, T)>,
}

impl<T: Real> LossSummary<T> {
    /// Share of the total carried by the `k` largest losses.
    pub fn top_share(&self, k: usize) -> T {
        let n = self.count;
        let k = k.min(n);
        T::one() - self.lorenz[n - k].1
    }

    /// Gini coefficient from the Lorenz curve (trapezoidal area).
    pub fn gini(&self) -> T {
        let area = self.lorenz.windows(2).fold(T::zero(), |acc, w| {
            acc + (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / T::lit(2.0)
        });
        T::one() - T::lit(2.0) * area
    }
}

pub fn summary_and_lorenz<T: Real>(losses: &[T]) -> Result<LossSummary<T>> {
    let e = EmpiricalLosses::new(losses.to_vec())?;
    let total = e.total();
    if total <= T::zero() {
        return Err(Error::AllZero);
    }
    let n = e.len();
    let s = e.as_slice();
    let median = if n % 2 == 1 {
        s[n / 2]
    } else {
        (s[n / 2 - 1] + s[n / 2]) / T::lit(2.0)
    };
    let nn = e.n();
    let lorenz = (0..=n)
        .map(|k| {
            let u = T::from_usize_lossy(k) / nn;
            let share = if k == n { T::one() } else { e.sum1[k] / total };
            (u, share)
        })
        .collect();
    Ok(LossSummary {
        count: n,
        mean: e.mean(),
        median,
        max: e.max(),
        lorenz,
    })
}
