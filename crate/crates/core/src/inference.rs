//! Plug-in estimation of the optimal retention from a loss sample, with delta-method
//! standard errors and Wald intervals.
//!
//! The estimator solves the model problem with the empirical law in place of `F`. Its
//! sampling variance comes from linearising the stationarity equation in the sample
//! means of
//!
//! * `(X ∧ d, X² ∧ d²)` for the Decreasing rule, with coefficients `c₀, c₁, c₂`;
//! * `(I(X > d), X ∧ d, X² ∧ d², (X − d)₊, (X − d)₊²)` for the StdDev (`b₀..b₅`) and
//!   Sharpe (`a₀..a₅`) rules, which also need a density estimate at `d̂`.
//!
//! `b₅` is `∂/∂ν₂` of the StdDev stationarity function,
//! `−ρ₀[F̄/(2√v) − (1 − F̄)ν₁²/(2v^{3/2})]` with `v = ν₂ − ν₁²`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::distortion::DistortionMeasure;
use crate::error::{Error, Result};
use crate::numerics::normal_quantile;
use crate::retention::{
    nominal_for_effective, solve_retention_with, LoadingRule, RetentionSolution, SolverOptions,
};
use crate::scalar::Real;
use crate::severity::{kde_density, SeverityModel, TruncatedMoments};

/// Smallest sample accepted by the estimators.
pub const MIN_SAMPLE: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimationOptions<T> {
    /// Gaussian KDE bandwidth in loss units (StdDev and Sharpe rules).
    pub bandwidth: T,
    pub grid_points: usize,
}

impl<T: Real> Default for EstimationOptions<T> {
    fn default() -> Self {
        Self {
            bandwidth: T::lit(0.1),
            grid_points: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimationResult<T> {
    pub rule: LoadingRule<T>,
    pub measure: String,
    pub n: usize,
    pub d_hat: T,
    pub std_error: T,
    pub ci: (T, T),
    pub level: T,
    pub coefficients: BTreeMap<String, T>,
    pub sigma_hat: Vec<Vec<T>>,
    pub effective_rho: T,
    pub warnings: Vec<String>,
}

/// Stationarity function of the StdDev rule as a function of `d` and the moment vector
/// `θ = (F̄, μ₁, μ₂, ν₁, ν₂)`.
pub fn sd_stationarity<T: Real>(z: T, rho0: T, d: T, th: [T; 5]) -> T {
    let [sbar, mu1, mu2, nu1, nu2] = th;
    let vm = mu2 - mu1 * mu1;
    let vn = nu2 - nu1 * nu1;
    z * sbar * (d - mu1) / vm.sqrt()
        - rho0 * sbar * vn.sqrt()
        - rho0 * (T::one() - sbar) * nu1 * nu1 / vn.sqrt()
}

/// Stationarity function of the Sharpe rule, same arguments as [`sd_stationarity`].
pub fn sharpe_stationarity<T: Real>(z: T, rho0: T, d: T, th: [T; 5]) -> T {
    let [sbar, mu1, mu2, nu1, nu2] = th;
    let vm = mu2 - mu1 * mu1;
    let vn = nu2 - nu1 * nu1;
    z * sbar * (d - mu1) / vm.sqrt() - rho0 * sbar / vn.sqrt()
        + rho0 * (T::one() - sbar) * nu1 * nu1 / (vn * vn.sqrt())
}

/// `H` of the expected-value rules with `k = (√Nρ/z)²`, as a function of `(μ₁, μ₂)`.
pub fn h_stationarity<T: Real>(k: T, d: T, mu: [T; 2]) -> T {
    let [mu1, mu2] = mu;
    (d - mu1) * (d - mu1) - k * (mu2 - mu1 * mu1)
}

/// `(c₀, c₁, c₂)` at `d` for `H` with `k = (δ/z)²`. `c₁, c₂` carry the opposite sign of
/// `∂H/∂μ₁, ∂H/∂μ₂`; only the quadratic form matters.
pub fn decreasing_coefficients<T: Real>(k: T, d: T, m: &TruncatedMoments<T>) -> [T; 3] {
    let two = T::lit(2.0);
    let c0 = two * (d - m.mu1) * (T::one() - m.sbar) - k * (two * d * m.sbar - two * m.mu1 * m.sbar);
    let c1 = two * (d - m.mu1) - k * two * m.mu1;
    [c0, c1, k]
}

/// `(b₀, b₁, …, b₅)` for the StdDev rule at `d`, with density value `f`.
pub fn sd_coefficients<T: Real>(z: T, rho0: T, d: T, m: &TruncatedMoments<T>, f: T) -> [T; 6] {
    let two = T::lit(2.0);
    let (sbar, mu1, nu1, nu2) = (m.sbar, m.mu1, m.nu1, m.nu2);
    let big_f = T::one() - sbar;
    let vm = m.retained_variance();
    let vn = m.ceded_variance();
    let (svm, svn) = (vm.sqrt(), vn.sqrt());
    let b1 = z * (d - mu1) / svm - rho0 * (nu2 - two * nu1 * nu1) / svn;
    let (b2, b3) = retained_partials(z, d, m);
    let b4 = rho0 * nu1 * ((T::lit(3.0) * sbar - two) / svn - big_f * nu1 * nu1 / (vn * svn));
    let b5 = -rho0 * (sbar / (two * svn) - big_f * nu1 * nu1 / (two * vn * svn));
    let b0 = total_derivative(z, d, m, f, [b1, b2, b3, b4, b5]);
    [b0, b1, b2, b3, b4, b5]
}

/// `(a₀, a₁, …, a₅)` for the Sharpe rule at `d`, with density value `f`.
pub fn sharpe_coefficients<T: Real>(z: T, rho0: T, d: T, m: &TruncatedMoments<T>, f: T) -> [T; 6] {
    let two = T::lit(2.0);
    let three = T::lit(3.0);
    let (sbar, mu1, nu1, nu2) = (m.sbar, m.mu1, m.nu1, m.nu2);
    let big_f = T::one() - sbar;
    let vm = m.retained_variance();
    let vn = m.ceded_variance();
    let vn32 = vn * vn.sqrt();
    let vn52 = vn32 * vn;
    let a1 = z * (d - mu1) / vm.sqrt() - rho0 * nu2 / vn32;
    let (a2, a3) = retained_partials(z, d, m);
    let a4 = rho0 * nu1 * ((two - three * sbar) / vn32 + three * big_f * nu1 * nu1 / vn52);
    let a5 = rho0 * (sbar / (two * vn32) - three * big_f * nu1 * nu1 / (two * vn52));
    let a0 = total_derivative(z, d, m, f, [a1, a2, a3, a4, a5]);
    [a0, a1, a2, a3, a4, a5]
}

/// Partials of `z F̄ (d − μ₁)/√(μ₂ − μ₁²)` with respect to `μ₁` and `μ₂`.
fn retained_partials<T: Real>(z: T, d: T, m: &TruncatedMoments<T>) -> (T, T) {
    let vm = m.retained_variance();
    let vm32 = vm * vm.sqrt();
    let p2 = z * (-m.sbar / vm.sqrt() + m.mu1 * m.sbar * (d - m.mu1) / vm32);
    let p3 = -z * m.sbar * (d - m.mu1) / (T::lit(2.0) * vm32);
    (p2, p3)
}

/// `d/dd` of the stationarity function using `F̄′ = −f`, `μ₁′ = F̄`, `μ₂′ = 2dF̄`,
/// `ν₁′ = −F̄` and `ν₂′ = −2ν₁`.
fn total_derivative<T: Real>(z: T, d: T, m: &TruncatedMoments<T>, f: T, g: [T; 5]) -> T {
    let two = T::lit(2.0);
    z * m.sbar / m.retained_variance().sqrt() - g[0] * f
        + g[1] * m.sbar
        + g[2] * two * d * m.sbar
        - g[3] * m.sbar
        - g[4] * two * m.nu1
}

/// Sample covariance (divisor `N`) of the rows produced by `row`.
fn sample_covariance<T: Real, const K: usize>(data: &[T], row: impl Fn(T) -> [T; K]) -> Vec<Vec<T>> {
    let n = T::from_usize_lossy(data.len());
    let mut mean = [T::zero(); K];
    for &x in data {
        let r = row(x);
        for k in 0..K {
            mean[k] = mean[k] + r[k];
        }
    }
    for v in mean.iter_mut() {
        *v = *v / n;
    }
    let mut cov = vec![vec![T::zero(); K]; K];
    for &x in data {
        let r = row(x);
        for i in 0..K {
            let di = r[i] - mean[i];
            for j in i..K {
                cov[i][j] = cov[i][j] + di * (r[j] - mean[j]);
            }
        }
    }
    for i in 0..K {
        for j in i..K {
            cov[i][j] = cov[i][j] / n;
            cov[j][i] = cov[i][j];
        }
    }
    cov
}

fn quadratic_form<T: Real>(b: &[T], sigma: &[Vec<T>]) -> T {
    let mut acc = T::zero();
    for (i, row) in sigma.iter().enumerate() {
        for (j, &s) in row.iter().enumerate() {
            acc = acc + b[i] * s * b[j];
        }
    }
    acc
}

/// Covariance of `(X ∧ d, X² ∧ d²)`.
pub fn sigma_decreasing<T: Real>(data: &[T], d: T) -> Vec<Vec<T>> {
    sample_covariance(data, |x| {
        let c = x.min(d);
        [c, c * c]
    })
}

/// Covariance of `(I(X > d), X ∧ d, X² ∧ d², (X − d)₊, (X − d)₊²)`.
pub fn sigma_five<T: Real>(data: &[T], d: T) -> Vec<Vec<T>> {
    sample_covariance(data, |x| {
        let c = x.min(d);
        let e = (x - d).max(T::zero());
        let ind = if x > d { T::one() } else { T::zero() };
        [ind, c, c * c, e, e * e]
    })
}

fn named<T: Copy>(prefix: &str, values: &[T]) -> BTreeMap<String, T> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| (format!("{prefix}{i}"), v))
        .collect()
}

/// Estimate under any rule. Constant loading is treated like Decreasing with
/// `δ = ρ√N` (the same equation at the observed `N`).
pub fn estimate<T: Real>(
    model: &SeverityModel<T>,
    rule: LoadingRule<T>,
    measure: &DistortionMeasure<T>,
    level: T,
    opts: &EstimationOptions<T>,
) -> Result<EstimationResult<T>> {
    let e = model
        .empirical_losses()
        .ok_or_else(|| Error::invalid("model", "estimation needs an empirical sample"))?;
    let n = e.len();
    if n < MIN_SAMPLE {
        return Err(Error::invalid(
            "losses",
            format!("need at least {MIN_SAMPLE} losses, got {n}"),
        ));
    }
    if !(level > T::zero() && level < T::one()) {
        return Err(Error::invalid("level", format!("must lie in (0,1), got {level}")));
    }
    let solver = SolverOptions {
        grid_points: opts.grid_points,
        ..SolverOptions::default()
    };
    let sol = solve_retention_with(model, rule, measure, n, &solver).map_err(|err| match err {
        Error::GridBoundaryMinimum { d } => Error::NoInteriorMinimum { d },
        other => other,
    })?;
    finish(model, sol, level, opts)
}

fn finish<T: Real>(
    model: &SeverityModel<T>,
    sol: RetentionSolution<T>,
    level: T,
    opts: &EstimationOptions<T>,
) -> Result<EstimationResult<T>> {
    let e = model.empirical_losses().expect("empirical");
    let data = e.as_slice();
    let n = e.len();
    let n_t = T::from_usize_lossy(n);
    let d = sol.d_star;
    let z = sol.diagnostics.phi;
    let m = model.truncated_moments(d)?;
    if !(m.retained_variance() > T::zero()) {
        return Err(Error::DegenerateVariance { d: d.to_f64_lossy() });
    }
    let (coef, sigma, b0, b): (BTreeMap<String, T>, Vec<Vec<T>>, T, Vec<T>) = match sol.rule {
        LoadingRule::Constant { .. } | LoadingRule::Decreasing { .. } => {
            let rho = sol.rule.expected_value_rho(n).expect("expected-value rule");
            let k = n_t * rho * rho / (z * z);
            let c = decreasing_coefficients(k, d, &m);
            (named("c", &c), sigma_decreasing(data, d), c[0], c[1..].to_vec())
        }
        LoadingRule::StdDev { rho0 } | LoadingRule::Sharpe { rho0 } => {
            if !(m.ceded_variance() > T::zero()) {
                return Err(Error::DegenerateVariance { d: d.to_f64_lossy() });
            }
            let f = kde_density(data, d, opts.bandwidth)?;
            let (c, prefix) = if matches!(sol.rule, LoadingRule::StdDev { .. }) {
                (sd_coefficients(z, rho0, d, &m, f), "b")
            } else {
                (sharpe_coefficients(z, rho0, d, &m, f), "a")
            };
            (named(prefix, &c), sigma_five(data, d), c[0], c[1..].to_vec())
        }
    };
    let q = quadratic_form(&b, &sigma).max(T::zero());
    let std_error = q.sqrt() / (b0.abs() * n_t.sqrt());
    if !(std_error.is_finite() && std_error > T::zero()) {
        return Err(Error::NumericalFailure {
            error: std_error.to_f64_lossy(),
        });
    }
    let zq = normal_quantile((T::one() + level) / T::lit(2.0))?;
    let mut warnings = sol.diagnostics.warnings.clone();
    if !sol.diagnostics.is_global_grid_min
        && matches!(sol.rule, LoadingRule::StdDev { .. } | LoadingRule::Sharpe { .. })
    {
        warnings.push(format!(
            "grid minimum differs from the smallest stationary point {:?}",
            sol.diagnostics.smallest_stationary_point.map(|v| v.to_f64_lossy())
        ));
    }
    Ok(EstimationResult {
        rule: sol.rule,
        measure: sol.measure,
        n,
        d_hat: d,
        std_error,
        ci: (d - zq * std_error, d + zq * std_error),
        level,
        coefficients: coef,
        sigma_hat: sigma,
        effective_rho: sol.diagnostics.effective_rho,
        warnings,
    })
}

pub fn estimate_decreasing<T: Real>(
    losses: &[T],
    delta: T,
    measure: &DistortionMeasure<T>,
    level: T,
) -> Result<EstimationResult<T>> {
    let model = SeverityModel::empirical(losses.to_vec())?;
    estimate(
        &model,
        LoadingRule::Decreasing { delta },
        measure,
        level,
        &EstimationOptions::default(),
    )
}

pub fn estimate_sd<T: Real>(
    losses: &[T],
    rho0: T,
    measure: &DistortionMeasure<T>,
    level: T,
    bandwidth: T,
) -> Result<EstimationResult<T>> {
    let model = SeverityModel::empirical(losses.to_vec())?;
    let opts = EstimationOptions {
        bandwidth,
        ..EstimationOptions::default()
    };
    estimate(&model, LoadingRule::StdDev { rho0 }, measure, level, &opts)
}

pub fn estimate_sharpe<T: Real>(
    losses: &[T],
    rho0: T,
    measure: &DistortionMeasure<T>,
    level: T,
    bandwidth: T,
) -> Result<EstimationResult<T>> {
    let model = SeverityModel::empirical(losses.to_vec())?;
    let opts = EstimationOptions {
        bandwidth,
        ..EstimationOptions::default()
    };
    estimate(&model, LoadingRule::Sharpe { rho0 }, measure, level, &opts)
}

/// What a retention curve sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SweepParameter {
    /// Effective loading ρ at fixed measure.
    EffectiveRho,
    /// Level `p` of a VaR/ES measure at fixed effective loading.
    Level,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint<T> {
    pub param: T,
    /// The nominal rule parameter (δ or ρ₀) that produced the effective loading.
    pub nominal: Option<T>,
    pub estimate: Option<EstimationResult<T>>,
    /// Set instead of `estimate` when this grid point failed.
    pub error: Option<String>,
}

/// Estimated retention with confidence band along a parameter grid. `rule` selects the
/// family (its parameter is ignored); `fixed_rho` is the effective loading for level
/// sweeps and `measure` the measure template (its level is replaced for level sweeps).
#[allow(clippy::too_many_arguments)]
pub fn retention_curve<T: Real>(
    model: &SeverityModel<T>,
    rule: LoadingRule<T>,
    sweep: SweepParameter,
    grid: &[T],
    fixed_rho: T,
    measure: &DistortionMeasure<T>,
    level: T,
    opts: &EstimationOptions<T>,
) -> Result<Vec<CurvePoint<T>>> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "sweep grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("grid", "sweep grid must be strictly increasing"));
    }
    let e = model
        .empirical_losses()
        .ok_or_else(|| Error::invalid("model", "estimation needs an empirical sample"))?;
    let n = e.len();
    let solver = SolverOptions {
        grid_points: opts.grid_points,
        ..SolverOptions::default()
    };
    let point = |param: T| -> Result<(T, EstimationResult<T>)> {
        let (rho, m) = match sweep {
            SweepParameter::EffectiveRho => (param, *measure),
            SweepParameter::Level => {
                let m = match measure {
                    DistortionMeasure::VaR { .. } => DistortionMeasure::VaR { p: param },
                    DistortionMeasure::ES { .. } => DistortionMeasure::ES { p: param },
                    _ => {
                        return Err(Error::invalid(
                            "measure",
                            "level sweeps need a VaR or ES measure",
                        ))
                    }
                };
                (fixed_rho, m)
            }
        };
        let (nominal, sol) = nominal_for_effective(model, rule, rho, &m, n, &solver)
            .map_err(|err| match err {
                Error::GridBoundaryMinimum { d } => Error::NoInteriorMinimum { d },
                other => other,
            })?;
        Ok((nominal, finish(model, sol, level, opts)?))
    };
    Ok(grid
        .par_iter()
        .map(|&param| match point(param) {
            Ok((nominal, est)) => CurvePoint {
                param,
                nominal: Some(nominal),
                estimate: Some(est),
                error: None,
            },
            Err(err) => CurvePoint {
                param,
                nominal: None,
                estimate: None,
                error: Some(err.to_string()),
            },
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments() -> TruncatedMoments<f64> {
        SeverityModel::pareto(9.0, 8.0)
            .unwrap()
            .truncated_moments(0.8)
            .unwrap()
    }

    fn theta(m: &TruncatedMoments<f64>) -> [f64; 5] {
        [m.sbar, m.mu1, m.mu2, m.nu1, m.nu2]
    }

    fn partials(f: impl Fn([f64; 5]) -> f64, th: [f64; 5]) -> [f64; 5] {
        let mut out = [0.0; 5];
        for k in 0..5 {
            let h = 1e-6 * th[k].abs().max(1e-3);
            let (mut up, mut dn) = (th, th);
            up[k] += h;
            dn[k] -= h;
            out[k] = (f(up) - f(dn)) / (2.0 * h);
        }
        out
    }

    #[test]
    fn sd_coefficients_are_partial_derivatives() {
        let m = moments();
        let (z, rho0, d) = (0.674_489_750_196_081_7, 0.5, 0.8);
        let b = sd_coefficients(z, rho0, d, &m, 0.0);
        let fd = partials(|th| sd_stationarity(z, rho0, d, th), theta(&m));
        for k in 0..5 {
            assert!((b[k + 1] - fd[k]).abs() < 1e-6 * (1.0 + fd[k].abs()), "b{}: {} vs {}", k + 1, b[k + 1], fd[k]);
        }
    }

    #[test]
    fn sharpe_coefficients_are_partial_derivatives() {
        let m = moments();
        let (z, rho0, d) = (0.674_489_750_196_081_7, 0.5, 0.8);
        let a = sharpe_coefficients(z, rho0, d, &m, 0.0);
        let fd = partials(|th| sharpe_stationarity(z, rho0, d, th), theta(&m));
        for k in 0..5 {
            assert!((a[k + 1] - fd[k]).abs() < 1e-6 * (1.0 + fd[k].abs()), "a{}: {} vs {}", k + 1, a[k + 1], fd[k]);
        }
    }

    #[test]
    fn leading_coefficients_are_total_derivatives() {
        // along the Pareto model, d/dd S(d, θ(d)) with f the true density
        let model = SeverityModel::pareto(9.0, 8.0).unwrap();
        let (z, rho0) = (0.674_489_750_196_081_7, 0.5);
        let th = |d: f64| theta(&model.truncated_moments(d).unwrap());
        for d in [0.3, 0.8, 2.0] {
            let m = model.truncated_moments(d).unwrap();
            let f = model.density(d).unwrap();
            let h = 1e-6;
            let sd = |d: f64| sd_stationarity(z, rho0, d, th(d));
            let sh = |d: f64| sharpe_stationarity(z, rho0, d, th(d));
            let fd_sd = (sd(d + h) - sd(d - h)) / (2.0 * h);
            let fd_sh = (sh(d + h) - sh(d - h)) / (2.0 * h);
            assert!((sd_coefficients(z, rho0, d, &m, f)[0] - fd_sd).abs() < 1e-6);
            assert!((sharpe_coefficients(z, rho0, d, &m, f)[0] - fd_sh).abs() < 1e-6);
            let k = (0.5 / z).powi(2);
            let hh = |d: f64| {
                let t = th(d);
                h_stationarity(k, d, [t[1], t[2]])
            };
            let fd_h = (hh(d + h) - hh(d - h)) / (2.0 * h);
            assert!((decreasing_coefficients(k, d, &m)[0] - fd_h).abs() < 1e-6);
        }
    }

    #[test]
    fn decreasing_coefficients_match_partials_up_to_sign() {
        let m = moments();
        let k = 0.55;
        let c = decreasing_coefficients(k, 0.8, &m);
        let f = |mu: [f64; 2]| h_stationarity(k, 0.8, mu);
        let h = 1e-7;
        let d1 = (f([m.mu1 + h, m.mu2]) - f([m.mu1 - h, m.mu2])) / (2.0 * h);
        let d2 = (f([m.mu1, m.mu2 + h]) - f([m.mu1, m.mu2 - h])) / (2.0 * h);
        assert!((c[1] + d1).abs() < 1e-6);
        assert!((c[2] + d2).abs() < 1e-6);
    }

    #[test]
    fn sigma_is_symmetric_psd() {
        let data = SeverityModel::pareto(9.0, 8.0).unwrap().sample(500, 1);
        let s = sigma_five(&data, 0.8);
        for i in 0..5 {
            assert!(s[i][i] >= 0.0);
            for j in 0..5 {
                assert_eq!(s[i][j], s[j][i]);
            }
        }
        // a few random directions
        for v in [[1.0, -1.0, 0.5, 2.0, -0.3], [0.1, 0.2, 0.3, 0.4, 0.5]] {
            assert!(quadratic_form(&v, &s) >= -1e-12);
        }
    }

    #[test]
    fn estimators_run_and_bracket() {
        let data: Vec<f64> = SeverityModel::pareto(9.0, 8.0).unwrap().sample(2000, 5);
        let v = DistortionMeasure::VaR { p: 0.75 };
        let r = estimate_decreasing(&data, 0.5, &v, 0.95).unwrap();
        assert!(r.ci.0 < r.d_hat && r.d_hat < r.ci.1);
        assert!((r.std_error - 0.0196).abs() < 0.004, "{}", r.std_error);
        let r = estimate_sd(&data, 0.5, &v, 0.95, 0.1).unwrap();
        assert!(r.std_error > 0.0 && r.coefficients.len() == 6);
        let r = estimate_sharpe(&data, 0.5, &v, 0.95, 0.1).unwrap();
        assert!(r.std_error > 0.0 && r.sigma_hat.len() == 5);
    }

    #[test]
    fn scaling_doubles_estimate_and_se() {
        let data: Vec<f64> = SeverityModel::pareto(9.0, 8.0).unwrap().sample(800, 9);
        let v = DistortionMeasure::VaR { p: 0.75 };
        let a = estimate_decreasing(&data, 0.5, &v, 0.95).unwrap();
        let scaled: Vec<f64> = data.iter().map(|x| 2.0 * x).collect();
        let b = estimate_decreasing(&scaled, 0.5, &v, 0.95).unwrap();
        assert!((b.d_hat - 2.0 * a.d_hat).abs() < 1e-8 * a.d_hat);
        assert!((b.std_error - 2.0 * a.std_error).abs() < 1e-8 * a.std_error);
    }

    #[test]
    fn duplicated_sample_shrinks_se() {
        let data: Vec<f64> = SeverityModel::pareto(9.0, 8.0).unwrap().sample(600, 2);
        let v = DistortionMeasure::VaR { p: 0.75 };
        let a = estimate_sd(&data, 0.5, &v, 0.95, 0.1).unwrap();
        let twice: Vec<f64> = data.iter().chain(data.iter()).copied().collect();
        let b = estimate_sd(&twice, 0.5, &v, 0.95, 0.1).unwrap();
        // same objective; rounding in the sums only moves the golden-section path
        assert!((a.d_hat - b.d_hat).abs() < 1e-6, "{} {}", a.d_hat, b.d_hat);
        assert!((a.std_error / b.std_error - 2f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn constant_sample_has_no_interior_minimum() {
        let data = vec![3.0; 50];
        let v = DistortionMeasure::VaR { p: 0.75 };
        assert!(matches!(
            estimate_sharpe(&data, 0.5, &v, 0.95, 0.1),
            Err(Error::NoInteriorMinimum { .. })
        ));
    }

    #[test]
    fn small_samples_rejected() {
        let v = DistortionMeasure::VaR { p: 0.75 };
        assert!(estimate_decreasing(&[1.0, 2.0, 3.0], 0.5, &v, 0.95).is_err());
    }
}
