//! Approximately optimal per-claim retentions.
//!
//! With `N` claims, retention `d`, `z = φ_h(Z)` and the moments of [`TruncatedMoments`], the
//! normal approximation of the risk of total cost is
//!
//! * expected-value premium with loading ρ (Constant: ρ, Decreasing: δ/√N):
//!   `G(d) = N·EX + Nρ·ν₁ + √N·z·√(μ₂ − μ₁²)`
//! * standard-deviation principle: `G̃(d) = N·EX + √N·{z√(μ₂ − μ₁²) + ρ₀ν₁√(ν₂ − ν₁²)}`
//! * Sharpe-ratio principle: `Ḡ(d) = N·EX + √N·{z√(μ₂ − μ₁²) + ρ₀ν₁/√(ν₂ − ν₁²)}`
//!
//! For the expected-value rules the minimiser is the unique root of
//! `H(d) = (d − μ₁)² − (√Nρ/z)²(μ₂ − μ₁²)` beyond `d₂ = F⁻(Nρ²/(Nρ² + z²))`.
//! The other two rules are solved by a grid scan plus local refinement.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::distortion::DistortionMeasure;
use crate::error::{Error, Result};
use crate::numerics::{bisect, geometric_grid, golden_section, normal_quantile, GridMinimum};
use crate::scalar::Real;
use crate::severity::{SeverityModel, TruncatedMoments};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LoadingRule<T> {
    Constant { rho: T },
    /// ρ_N = δ/√N
    Decreasing { delta: T },
    /// ρ = ρ₀·SD of the mean ceded loss
    StdDev { rho0: T },
    /// Sharpe-ratio premium, ρ = ρ₀/SD of the total ceded loss
    Sharpe { rho0: T },
}

impl<T: Real> LoadingRule<T> {
    pub fn validate(&self) -> Result<()> {
        let v = self.parameter();
        if v > T::zero() && v.is_finite() {
            Ok(())
        } else {
            Err(Error::invalid(
                "loading",
                format!("{} parameter must be positive, got {v}", self.name()),
            ))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            LoadingRule::Constant { .. } => "constant",
            LoadingRule::Decreasing { .. } => "decreasing",
            LoadingRule::StdDev { .. } => "sd",
            LoadingRule::Sharpe { .. } => "sharpe",
        }
    }

    pub fn parameter(&self) -> T {
        match *self {
            LoadingRule::Constant { rho } => rho,
            LoadingRule::Decreasing { delta } => delta,
            LoadingRule::StdDev { rho0 } | LoadingRule::Sharpe { rho0 } => rho0,
        }
    }

    /// Same rule with a new parameter value.
    pub fn with_parameter(&self, v: T) -> Self {
        match self {
            LoadingRule::Constant { .. } => LoadingRule::Constant { rho: v },
            LoadingRule::Decreasing { .. } => LoadingRule::Decreasing { delta: v },
            LoadingRule::StdDev { .. } => LoadingRule::StdDev { rho0: v },
            LoadingRule::Sharpe { .. } => LoadingRule::Sharpe { rho0: v },
        }
    }

    /// Loading of the expected-value rules at portfolio size `n`.
    pub fn expected_value_rho(&self, n: usize) -> Option<T> {
        match *self {
            LoadingRule::Constant { rho } => Some(rho),
            LoadingRule::Decreasing { delta } => Some(delta / T::from_usize_lossy(n).sqrt()),
            _ => None,
        }
    }
}

/// Solver tuning. Defaults: 1000 log-spaced grid points and a relative root tolerance of 1e-12.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions<T> {
    pub grid_points: usize,
    pub tolerance: T,
    /// Overrides the scan range used by the grid-based rules.
    pub grid_range: Option<(T, T)>,
}

impl<T: Real> Default for SolverOptions<T> {
    fn default() -> Self {
        Self {
            grid_points: 1000,
            tolerance: T::lit(1e-12),
            grid_range: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics<T> {
    pub bracket: (T, T),
    pub iterations: usize,
    pub stationarity_residual: T,
    pub is_global_grid_min: bool,
    pub smallest_stationary_point: Option<T>,
    /// `None` means the condition cannot be decided (tail index of data).
    pub condition_checks: BTreeMap<String, Option<bool>>,
    pub warnings: Vec<String>,
    pub phi: T,
    /// Loading actually charged at `d_star`.
    pub effective_rho: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetentionSolution<T> {
    pub d_star: T,
    pub objective_value: T,
    pub rule: LoadingRule<T>,
    pub measure: String,
    pub n: usize,
    pub diagnostics: Diagnostics<T>,
}

struct Problem<'a, T> {
    model: &'a SeverityModel<T>,
    rule: LoadingRule<T>,
    phi: T,
    n: T,
    sqrt_n: T,
}

impl<'a, T: Real> Problem<'a, T> {
    fn new(
        model: &'a SeverityModel<T>,
        rule: LoadingRule<T>,
        measure: &DistortionMeasure<T>,
        n: usize,
    ) -> Result<Self> {
        rule.validate()?;
        if n == 0 {
            return Err(Error::invalid("n", "portfolio size must be positive"));
        }
        let phi = measure.positive_phi()?;
        let n = T::from_usize_lossy(n);
        Ok(Self {
            model,
            rule,
            phi,
            n,
            sqrt_n: n.sqrt(),
        })
    }

    fn rho(&self) -> Option<T> {
        match self.rule {
            LoadingRule::Constant { rho } => Some(rho),
            LoadingRule::Decreasing { delta } => Some(delta / self.sqrt_n),
            _ => None,
        }
    }

    fn moments(&self, d: T) -> Result<TruncatedMoments<T>> {
        self.model.truncated_moments(d)
    }

    fn objective(&self, d: T) -> Result<T> {
        if let Some(rho) = self.rho() {
            let (_, mu1, mu2, nu1) = self.model.retained_moments(d)?;
            let vm = (mu2 - mu1 * mu1).max(T::zero());
            return Ok(self.n * (mu1 + nu1) + self.n * rho * nu1 + self.sqrt_n * self.phi * vm.sqrt());
        }
        let m = self.moments(d)?;
        let vm = m.retained_variance().max(T::zero());
        let vn = m.ceded_variance().max(T::zero());
        let loading = match self.rule {
            LoadingRule::StdDev { rho0 } => rho0 * m.nu1 * vn.sqrt(),
            LoadingRule::Sharpe { rho0 } => {
                if vn > T::zero() {
                    rho0 * m.nu1 / vn.sqrt()
                } else {
                    T::infinity()
                }
            }
            _ => unreachable!(),
        };
        Ok(self.n * (m.mu1 + m.nu1) + self.sqrt_n * (self.phi * vm.sqrt() + loading))
    }

    fn stationarity(&self, d: T) -> Result<T> {
        if let Some(rho) = self.rho() {
            let (_, mu1, mu2, _) = self.model.retained_moments(d)?;
            let c = self.sqrt_n * rho / self.phi;
            return Ok((d - mu1) * (d - mu1) - c * c * (mu2 - mu1 * mu1));
        }
        let m = self.moments(d)?;
        let vm = m.retained_variance();
        let vn = m.ceded_variance();
        if !(vm > T::zero() && vn > T::zero()) {
            return Err(Error::DegenerateVariance {
                d: d.to_f64_lossy(),
            });
        }
        let f = T::one() - m.sbar;
        let lead = self.phi * m.sbar * (d - m.mu1) / vm.sqrt();
        Ok(match self.rule {
            LoadingRule::StdDev { rho0 } => {
                lead - rho0 * m.sbar * vn.sqrt() - rho0 * f * m.nu1 * m.nu1 / vn.sqrt()
            }
            LoadingRule::Sharpe { rho0 } => {
                lead - rho0 * m.sbar / vn.sqrt() + rho0 * f * m.nu1 * m.nu1 / (vn * vn.sqrt())
            }
            _ => unreachable!(),
        })
    }

    fn effective_rho(&self, d: T) -> Result<T> {
        if let Some(rho) = self.rho() {
            return Ok(rho);
        }
        let vn = self.moments(d)?.ceded_variance().max(T::zero());
        Ok(match self.rule {
            LoadingRule::StdDev { rho0 } => rho0 * vn.sqrt() / self.sqrt_n,
            LoadingRule::Sharpe { rho0 } => rho0 / (self.sqrt_n * vn.sqrt()),
            _ => unreachable!(),
        })
    }
}

/// The approximate risk of total cost at retention `d`.
pub fn objective<T: Real>(
    model: &SeverityModel<T>,
    rule: LoadingRule<T>,
    measure: &DistortionMeasure<T>,
    n: usize,
    d: T,
) -> Result<T> {
    positive_retention(d)?;
    Problem::new(model, rule, measure, n)?.objective(d)
}

/// `H(d)` for the expected-value rules, `G̃′(d)/√N` or `Ḡ′(d)/√N` otherwise.
pub fn stationarity_function<T: Real>(
    model: &SeverityModel<T>,
    rule: LoadingRule<T>,
    measure: &DistortionMeasure<T>,
    n: usize,
    d: T,
) -> Result<T> {
    positive_retention(d)?;
    Problem::new(model, rule, measure, n)?.stationarity(d)
}

/// Loading charged at retention `d` (ρ, δ/√N, ρ₀√Var((X−d)₊)/√N or ρ₀/(√N·√Var((X−d)₊))).
pub fn effective_loading<T: Real>(
    model: &SeverityModel<T>,
    rule: LoadingRule<T>,
    n: usize,
    d: T,
) -> Result<T> {
    rule.validate()?;
    let n_t = T::from_usize_lossy(n.max(1));
    if let Some(rho) = rule.expected_value_rho(n.max(1)) {
        return Ok(rho);
    }
    let vn = model.truncated_moments(d)?.ceded_variance().max(T::zero());
    Ok(match rule {
        LoadingRule::StdDev { rho0 } => rho0 * vn.sqrt() / n_t.sqrt(),
        LoadingRule::Sharpe { rho0 } => rho0 / (n_t.sqrt() * vn.sqrt()),
        _ => unreachable!(),
    })
}

fn positive_retention<T: Real>(d: T) -> Result<()> {
    if d > T::zero() && d.is_finite() {
        Ok(())
    } else {
        Err(Error::DomainError(format!("retention must be positive and finite, got {d}")))
    }
}

/// Existence conditions for the rule, by name. `None` marks conditions that cannot be
/// decided from the model (regular variation of a data sample).
pub fn condition_report<T: Real>(
    model: &SeverityModel<T>,
    rule: LoadingRule<T>,
    measure: &DistortionMeasure<T>,
    n: usize,
) -> BTreeMap<String, Option<bool>> {
    let mut out = BTreeMap::new();
    let phi = measure.phi_h_normal().ok();
    out.insert("positive_phi".to_string(), Some(phi.is_some_and(|z| z > T::zero())));
    let mean = model.mean().ok();
    out.insert("finite_mean".to_string(), Some(mean.is_some()));
    let f0 = model.atom_at_zero();
    let sbar0 = T::one() - f0;
    let n_t = T::from_usize_lossy(n.max(1));
    let tail = model.tail_index();
    match rule {
        LoadingRule::Constant { .. } | LoadingRule::Decreasing { .. } => {
            let rho = rule.expected_value_rho(n.max(1)).expect("expected-value rule");
            let atom = phi.map(|z| {
                let level = n_t * rho * rho / (n_t * rho * rho + z * z);
                f0 < level
            });
            out.insert("atom_condition".to_string(), atom);
        }
        LoadingRule::StdDev { rho0 } | LoadingRule::Sharpe { rho0 } => {
            out.insert("tail_index_above_2".to_string(), tail.map(|a| a > T::lit(2.0)));
            if matches!(rule, LoadingRule::Sharpe { .. }) {
                out.insert(
                    "tail_index_in_2_4".to_string(),
                    tail.map(|a| a > T::lit(2.0) && a < T::lit(4.0)),
                );
            }
            let atom = if f0 == T::zero() {
                Some(true)
            } else {
                match (phi, mean, model.second_moment().ok()) {
                    (Some(z), Some(m), Some(m2)) => {
                        let var = m2 - m * m;
                        let lhs = z * (sbar0 * f0).sqrt();
                        let rhs = if matches!(rule, LoadingRule::StdDev { .. }) {
                            rho0 * sbar0 * var.sqrt() + rho0 * f0 * m * m / var.sqrt()
                        } else {
                            rho0 * sbar0 / var.sqrt() - rho0 * f0 * m * m / (var * var.sqrt())
                        };
                        Some(lhs < rhs)
                    }
                    _ => None,
                }
            };
            out.insert("atom_condition".to_string(), atom);
        }
    }
    out
}

fn warnings_for<T: Real>(
    rule: LoadingRule<T>,
    checks: &BTreeMap<String, Option<bool>>,
) -> Vec<String> {
    let mut w = Vec::new();
    if matches!(rule, LoadingRule::Sharpe { .. }) {
        match checks.get("tail_index_in_2_4") {
            Some(Some(false)) => w.push(
                "tail index outside (2,4): existence of a minimiser is not guaranteed".to_string(),
            ),
            Some(None) => w.push("tail index of the data is unknown".to_string()),
            _ => {}
        }
    }
    if let Some(Some(false)) = checks.get("atom_condition") {
        w.push("atom-at-zero condition fails".to_string());
    }
    w
}

/// Default scan range for the grid-based rules.
fn scan_range<T: Real>(model: &SeverityModel<T>) -> Result<(T, T)> {
    let (lo, hi) = match model {
        SeverityModel::ParetoII { .. } => (
            model.quantile(T::lit(1e-4)),
            model.quantile(T::one() - T::lit(1e-6)),
        ),
        SeverityModel::Empirical(e) => {
            let data = e.as_slice();
            let first_positive = data.iter().copied().find(|&x| x > T::zero());
            let lo = first_positive.ok_or(Error::AllZero)?;
            let hi = model.quantile(T::lit(0.999)).max(lo);
            if hi > lo {
                (lo, hi)
            } else {
                (lo, e.max())
            }
        }
    };
    if !(hi > lo) {
        return Err(Error::GridBoundaryMinimum { d: lo.to_f64_lossy() });
    }
    Ok((lo, hi))
}

pub fn solve_retention<T: Real>(
    model: &SeverityModel<T>,
    rule: LoadingRule<T>,
    measure: &DistortionMeasure<T>,
    n: usize,
) -> Result<RetentionSolution<T>> {
    solve_retention_with(model, rule, measure, n, &SolverOptions::default())
}

pub fn solve_retention_with<T: Real>(
    model: &SeverityModel<T>,
    rule: LoadingRule<T>,
    measure: &DistortionMeasure<T>,
    n: usize,
    opts: &SolverOptions<T>,
) -> Result<RetentionSolution<T>> {
    let problem = Problem::new(model, rule, measure, n)?;
    let checks = condition_report(model, rule, measure, n);
    let warnings = warnings_for(rule, &checks);
    let (d_star, bracket, iterations, smallest, global) = match problem.rho() {
        Some(rho) => {
            if let Some(Some(false)) = checks.get("atom_condition") {
                return Err(Error::ConditionViolated(format!(
                    "F(0) = {} is not below N rho^2/(N rho^2 + phi^2)",
                    model.atom_at_zero()
                )));
            }
            let (d, bracket, it) = root_of_h(&problem, rho, opts.tolerance)?;
            (d, bracket, it, Some(d), true)
        }
        None => grid_solve(&problem, opts)?,
    };
    let residual = problem.stationarity(d_star)?.abs();
    Ok(RetentionSolution {
        d_star,
        objective_value: problem.objective(d_star)?,
        rule,
        measure: measure.to_string(),
        n,
        diagnostics: Diagnostics {
            bracket,
            iterations,
            stationarity_residual: residual,
            is_global_grid_min: global,
            smallest_stationary_point: smallest,
            condition_checks: checks,
            warnings,
            phi: problem.phi,
            effective_rho: problem.effective_rho(d_star)?,
        },
    })
}

fn root_of_h<T: Real>(problem: &Problem<'_, T>, rho: T, tol: T) -> Result<(T, (T, T), usize)> {
    let level = problem.n * rho * rho / (problem.n * rho * rho + problem.phi * problem.phi);
    let d2 = problem.model.upper_quantile(level);
    if !d2.is_finite() {
        return Err(Error::NoRootFound(format!("d2 = F^-1({level}) is infinite")));
    }
    let h = |d: T| problem.stationarity(d);
    // H(0) = 0 and H decreases on (0, d₂), so start just inside
    let lo = if d2 > T::zero() { d2 } else { T::lit(1e-12) };
    let cap = T::lit(1e12);
    let mut hi = (lo * T::lit(2.0)).max(T::one());
    while h(hi)? <= T::zero() {
        hi = hi * T::lit(2.0);
        if hi > cap {
            return Err(Error::NoRootFound(format!(
                "H stays nonpositive up to {cap}: the retention is unbounded"
            )));
        }
    }
    // bisect needs an infallible closure; moment failures are impossible on (lo, hi]
    let mut failure = None;
    let (d, it) = bisect(
        |d| match h(d) {
            Ok(v) => v,
            Err(e) => {
                failure = Some(e);
                T::zero()
            }
        },
        lo,
        hi,
        tol,
        500,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((d, (lo, hi), it))
}

#[allow(clippy::type_complexity)]
fn grid_solve<T: Real>(
    problem: &Problem<'_, T>,
    opts: &SolverOptions<T>,
) -> Result<(T, (T, T), usize, Option<T>, bool)> {
    let (lo, hi) = match opts.grid_range {
        Some(r) => r,
        None => scan_range(problem.model)?,
    };
    let grid = geometric_grid(lo, hi, opts.grid_points.max(3));
    let obj = |d: T| problem.objective(d).unwrap_or(T::infinity());
    let scan = GridMinimum::scan(&grid, obj);
    if !scan.is_interior() {
        return Err(Error::GridBoundaryMinimum {
            d: grid[scan.index].to_f64_lossy(),
        });
    }
    let (a, b) = (grid[scan.index - 1], grid[scan.index + 1]);
    let continuous = matches!(problem.model, SeverityModel::ParetoII { .. });
    let stat = |d: T| problem.stationarity(d).unwrap_or(T::nan());
    let (mut d_star, mut iterations) = (T::nan(), 0);
    if continuous {
        let (sa, sb) = (stat(a), stat(b));
        if sa < T::zero() && sb > T::zero() {
            let (d, it) = bisect(stat, a, b, opts.tolerance, 500)?;
            d_star = d;
            iterations = it;
        }
    }
    if !d_star.is_finite() {
        let (d, _, it) = golden_section(obj, a, b, opts.tolerance, 500);
        d_star = d;
        iterations = it;
    }
    // smallest solution of the stationarity equation, crossing from below
    let mut smallest = None;
    let mut prev = stat(grid[0]);
    for w in grid.windows(2) {
        let next = stat(w[1]);
        if prev < T::zero() && next >= T::zero() {
            smallest = bisect(stat, w[0], w[1], opts.tolerance, 500).ok().map(|r| r.0);
            break;
        }
        prev = next;
    }
    let global = smallest.is_some_and(|s| {
        (s - d_star).abs() <= T::lit(1e-6) * (T::one() + d_star)
            || (s >= a && s <= b)
    });
    Ok((d_star, (a, b), iterations, smallest, global))
}

/// Target an effective loading with the StdDev or Sharpe rule by damped fixed-point
/// iteration on ρ₀ (at most 100 steps, relative tolerance 1e-8). `rule` supplies the
/// variant; its parameter is ignored.
pub fn nominal_for_effective<T: Real>(
    model: &SeverityModel<T>,
    rule: LoadingRule<T>,
    target_rho: T,
    measure: &DistortionMeasure<T>,
    n: usize,
    opts: &SolverOptions<T>,
) -> Result<(T, RetentionSolution<T>)> {
    if !(target_rho > T::zero()) {
        return Err(Error::invalid("rho", format!("target loading must be positive, got {target_rho}")));
    }
    let n_t = T::from_usize_lossy(n.max(1));
    if rule.expected_value_rho(n.max(1)).is_some() {
        let rule = match rule {
            LoadingRule::Constant { .. } => LoadingRule::Constant { rho: target_rho },
            _ => LoadingRule::Decreasing {
                delta: target_rho * n_t.sqrt(),
            },
        };
        let sol = solve_retention_with(model, rule, measure, n, opts)?;
        return Ok((rule.parameter(), sol));
    }
    // ρ₀ that produces `target_rho` at retention d
    let implied = |d: T| -> Result<T> {
        let vn = model.truncated_moments(d)?.ceded_variance().max(T::zero());
        Ok(match rule {
            LoadingRule::StdDev { .. } => target_rho * n_t.sqrt() / vn.sqrt(),
            _ => target_rho * n_t.sqrt() * vn.sqrt(),
        })
    };
    let start = solve_retention_with(
        model,
        LoadingRule::Decreasing {
            delta: target_rho * n_t.sqrt(),
        },
        measure,
        n,
        opts,
    )?;
    let mut rho0 = implied(start.d_star)?;
    let damping = T::lit(0.5);
    for _ in 0..100 {
        let sol = solve_retention_with(model, rule.with_parameter(rho0), measure, n, opts)?;
        let next = rho0 + damping * (implied(sol.d_star)? - rho0);
        if (next - rho0).abs() <= T::lit(1e-8) * (T::one() + rho0.abs()) {
            let sol = solve_retention_with(model, rule.with_parameter(next), measure, n, opts)?;
            return Ok((next, sol));
        }
        rho0 = next;
    }
    Err(Error::NumericalFailure {
        error: rho0.to_f64_lossy(),
    })
}

/// Retention of a stop-loss treaty on the aggregate, `F⁻(ρ/(1 + ρ))`, defined when
/// `1 − p < 1/(1 + ρ)`.
pub fn stop_loss_retention<T: Real>(model: &SeverityModel<T>, rho: T, p: T) -> Result<T> {
    if !(rho > T::zero()) {
        return Err(Error::invalid("rho", format!("must be positive, got {rho}")));
    }
    if !(p > T::zero() && p < T::one()) {
        return Err(Error::invalid("p", format!("must lie in (0,1), got {p}")));
    }
    if T::one() - p >= (T::one() + rho).recip() {
        return Err(Error::ConditionNotMet(format!(
            "1 - p = {} is not below 1/(1 + rho) = {}",
            T::one() - p,
            (T::one() + rho).recip()
        )));
    }
    Ok(model.quantile(rho / (T::one() + rho)))
}

// ---------------------------------------------------------------------------
// Edgeworth / Cornish–Fisher corrections

pub fn hermite_h2<T: Real>(x: T) -> T {
    x * x - T::one()
}

pub fn hermite_h3<T: Real>(x: T) -> T {
    x * x * x - T::lit(3.0) * x
}

pub fn hermite_h5<T: Real>(x: T) -> T {
    let x2 = x * x;
    x * (x2 * x2 - T::lit(10.0) * x2 + T::lit(15.0))
}

/// Where the Hermite polynomials of the quantile correction are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum HermiteArgument {
    /// At the probability level `p` itself.
    Level,
    /// At `z_p = Φ⁻¹(p)`, the textbook Cornish–Fisher argument.
    NormalQuantile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SkewSign {
    Positive,
    Negative,
}

/// Convention for `p̃₁ = ±κ̃₃·H₂(x)/6` and `p̃₂ = κ̃₄H₃(x)/24 + κ̃₃²(H₅ + 2H₂′H₂ − xH₂²)(x)/72`.
///
/// The default (`Level`, `Positive`) is the one used throughout; the other three are kept
/// for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EdgeworthConvention {
    pub argument: HermiteArgument,
    pub skew_sign: SkewSign,
}

impl Default for EdgeworthConvention {
    fn default() -> Self {
        Self {
            argument: HermiteArgument::Level,
            skew_sign: SkewSign::Positive,
        }
    }
}

impl EdgeworthConvention {
    pub const ALL: [EdgeworthConvention; 4] = [
        EdgeworthConvention {
            argument: HermiteArgument::Level,
            skew_sign: SkewSign::Positive,
        },
        EdgeworthConvention {
            argument: HermiteArgument::Level,
            skew_sign: SkewSign::Negative,
        },
        EdgeworthConvention {
            argument: HermiteArgument::NormalQuantile,
            skew_sign: SkewSign::Positive,
        },
        EdgeworthConvention {
            argument: HermiteArgument::NormalQuantile,
            skew_sign: SkewSign::Negative,
        },
    ];
}

/// `G⁽²⁾` (order 2) or `G⁽³⁾` (order 3) for the Constant rule under VaR at level `p`.
pub fn edgeworth_objective<T: Real>(
    model: &SeverityModel<T>,
    rho: T,
    p: T,
    n: usize,
    order: u8,
    convention: EdgeworthConvention,
    d: T,
) -> Result<T> {
    positive_retention(d)?;
    if !(order == 2 || order == 3) {
        return Err(Error::invalid("order", format!("must be 2 or 3, got {order}")));
    }
    let z = normal_quantile(p)?;
    let x = match convention.argument {
        HermiteArgument::Level => p,
        HermiteArgument::NormalQuantile => z,
    };
    let n_t = T::from_usize_lossy(n);
    let (_, mu1, mu2, nu1) = model.retained_moments(d)?;
    let higher = model.higher_truncated_moments(d)?;
    let (k3, k4) = (higher.kappa3, higher.kappa4);
    let sign = match convention.skew_sign {
        SkewSign::Positive => T::one(),
        SkewSign::Negative => -T::one(),
    };
    let h2 = hermite_h2(x);
    let p1 = sign * k3 / T::lit(6.0) * h2;
    let mut q = z + p1 / n_t.sqrt();
    if order == 3 {
        let p2 = k4 / T::lit(24.0) * hermite_h3(x)
            + k3 * k3 / T::lit(72.0)
                * (hermite_h5(x) + T::lit(4.0) * x * h2 - x * h2 * h2);
        q = q + p2 / n_t;
    }
    let vm = (mu2 - mu1 * mu1).max(T::zero());
    Ok(n_t * (mu1 + nu1) + n_t * rho * nu1 + n_t.sqrt() * vm.sqrt() * q)
}

pub fn solve_retention_edgeworth<T: Real>(
    model: &SeverityModel<T>,
    rho: T,
    p: T,
    n: usize,
    order: u8,
) -> Result<RetentionSolution<T>> {
    solve_retention_edgeworth_with(model, rho, p, n, order, EdgeworthConvention::default(), 400)
}

/// Grid scan of `G⁽ᵏ⁾` followed by golden-section refinement of the best cell.
pub fn solve_retention_edgeworth_with<T: Real>(
    model: &SeverityModel<T>,
    rho: T,
    p: T,
    n: usize,
    order: u8,
    convention: EdgeworthConvention,
    grid_points: usize,
) -> Result<RetentionSolution<T>> {
    let rule = LoadingRule::Constant { rho };
    let measure = DistortionMeasure::VaR { p };
    let problem = Problem::new(model, rule, &measure, n)?;
    let checks = condition_report(model, rule, &measure, n);
    if let Some(Some(false)) = checks.get("atom_condition") {
        return Err(Error::ConditionViolated(format!(
            "F(0) = {} is not below N rho^2/(N rho^2 + phi^2)",
            model.atom_at_zero()
        )));
    }
    let (lo, hi) = scan_range(model)?;
    let grid = geometric_grid(lo, hi, grid_points.max(3));
    let g = |d: T| edgeworth_objective(model, rho, p, n, order, convention, d).unwrap_or(T::infinity());
    let scan = GridMinimum::scan(&grid, g);
    if !scan.is_interior() {
        return Err(Error::GridBoundaryMinimum {
            d: grid[scan.index].to_f64_lossy(),
        });
    }
    let (a, b) = (grid[scan.index - 1], grid[scan.index + 1]);
    let (d_star, value, iterations) = golden_section(g, a, b, T::lit(1e-10), 500);
    let step = T::lit(1e-5) * (T::one() + d_star);
    let slope = (g(d_star + step) - g(d_star - step)) / (T::lit(2.0) * step);
    Ok(RetentionSolution {
        d_star,
        objective_value: value,
        rule,
        measure: measure.to_string(),
        n,
        diagnostics: Diagnostics {
            bracket: (a, b),
            iterations,
            stationarity_residual: slope.abs() / problem.sqrt_n,
            is_global_grid_min: true,
            smallest_stationary_point: None,
            warnings: warnings_for(rule, &checks),
            condition_checks: checks,
            phi: problem.phi,
            effective_rho: rho,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pareto() -> SeverityModel<f64> {
        SeverityModel::pareto(9.0, 8.0).unwrap()
    }

    fn var75() -> DistortionMeasure<f64> {
        DistortionMeasure::VaR { p: 0.75 }
    }

    #[test]
    fn objective_at_zero_is_full_premium() {
        let rule = LoadingRule::Constant { rho: 0.3 };
        let g = objective(&pareto(), rule, &var75(), 100, 1e-12).unwrap();
        assert!((g - 130.0).abs() < 1e-6);
    }

    #[test]
    fn h_grows_like_d_squared() {
        let rule = LoadingRule::Constant { rho: 0.3 };
        let h = stationarity_function(&pareto(), rule, &var75(), 100, 1e6).unwrap();
        assert!((h / 1e12 - 1.0).abs() < 1e-2);
    }

    #[test]
    fn decreasing_rule_optimum() {
        let sol = solve_retention(&pareto(), LoadingRule::Decreasing { delta: 0.5 }, &var75(), 100)
            .unwrap();
        assert!((sol.d_star - 0.5472).abs() < 1e-3, "{}", sol.d_star);
        assert!(sol.diagnostics.stationarity_residual < 1e-9);
        assert!(sol.diagnostics.bracket.0 <= sol.d_star && sol.d_star <= sol.diagnostics.bracket.1);
    }

    #[test]
    fn sd_and_sharpe_optima() {
        let sd = solve_retention(&pareto(), LoadingRule::StdDev { rho0: 0.5 }, &var75(), 100).unwrap();
        assert!((sd.d_star - 0.8189).abs() < 1e-3, "{}", sd.d_star);
        assert!(sd.diagnostics.is_global_grid_min);
        let sh = solve_retention(&pareto(), LoadingRule::Sharpe { rho0: 0.5 }, &var75(), 100).unwrap();
        assert!((sh.d_star - 0.3218).abs() < 1e-3, "{}", sh.d_star);
        assert!(!sh.diagnostics.warnings.is_empty());
        for s in [&sd, &sh] {
            assert!(s.diagnostics.stationarity_residual < 1e-9);
        }
    }

    #[test]
    fn optimum_beats_neighbours() {
        let rules = [
            LoadingRule::Constant { rho: 0.3 },
            LoadingRule::Decreasing { delta: 0.5 },
            LoadingRule::StdDev { rho0: 0.5 },
            LoadingRule::Sharpe { rho0: 0.5 },
        ];
        for rule in rules {
            let s = solve_retention(&pareto(), rule, &var75(), 25).unwrap();
            let g = |d| objective(&pareto(), rule, &var75(), 25, d).unwrap();
            assert!(g(s.d_star * 0.99) > g(s.d_star), "{rule:?}");
            assert!(g(s.d_star * 1.01) > g(s.d_star), "{rule:?}");
        }
    }

    #[test]
    fn stop_loss_values() {
        let d = stop_loss_retention(&pareto(), 0.2, 0.75).unwrap();
        assert!((d - 8.0 * (1.2_f64.powf(1.0 / 9.0) - 1.0)).abs() < 1e-12);
        assert!(matches!(
            stop_loss_retention(&pareto(), 0.2, 0.1),
            Err(Error::ConditionNotMet(_))
        ));
        let e = SeverityModel::empirical(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(stop_loss_retention(&e, 1.0, 0.9).unwrap(), 2.0);
    }

    #[test]
    fn conditions() {
        let c = condition_report(&pareto(), LoadingRule::Sharpe { rho0: 0.5 }, &var75(), 100);
        assert_eq!(c["tail_index_in_2_4"], Some(false));
        let c = condition_report(&pareto(), LoadingRule::Constant { rho: 0.3 }, &var75(), 100);
        assert_eq!(c["atom_condition"], Some(true));
        let mut data = vec![0.0; 30];
        data.extend((1..=70).map(|i| i as f64 / 10.0));
        let e = SeverityModel::empirical(data).unwrap();
        let rule = LoadingRule::Decreasing { delta: 0.1 };
        let c = condition_report(&e, rule, &var75(), 100);
        assert_eq!(c["atom_condition"], Some(false));
        assert!(matches!(
            solve_retention(&e, rule, &var75(), 100),
            Err(Error::ConditionViolated(_))
        ));
        let c = condition_report(&e, LoadingRule::StdDev { rho0: 0.5 }, &var75(), 100);
        assert_eq!(c["tail_index_above_2"], None);
    }

    #[test]
    fn nonpositive_phi_refused() {
        let r = solve_retention(
            &pareto(),
            LoadingRule::Constant { rho: 0.3 },
            &DistortionMeasure::VaR { p: 0.5 },
            10,
        );
        assert!(matches!(r, Err(Error::NonpositivePhi { .. })));
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite_h2(0.0), -1.0);
        assert_eq!(hermite_h3(2.0), 2.0);
        assert_eq!(hermite_h5(1.0), 6.0);
    }

    #[test]
    fn effective_loading_round_trip() {
        let opts = SolverOptions::default();
        let (rho0, sol) = nominal_for_effective(
            &pareto(),
            LoadingRule::StdDev { rho0: 1.0 },
            0.05,
            &var75(),
            100,
            &opts,
        )
        .unwrap();
        assert!((sol.diagnostics.effective_rho - 0.05).abs() < 1e-6, "{rho0}");
    }

    #[test]
    fn empirical_solver_runs() {
        let data = pareto().sample(2000, 11);
        let e = SeverityModel::empirical(data).unwrap();
        let s = solve_retention(&e, LoadingRule::Decreasing { delta: 0.5 }, &var75(), 2000).unwrap();
        assert!((s.d_star - 0.5472).abs() < 0.15);
        let s = solve_retention(&e, LoadingRule::StdDev { rho0: 0.5 }, &var75(), 2000).unwrap();
        assert!((s.d_star - 0.8189).abs() < 0.3);
    }
}
