//! Monte Carlo oracle: simulated VaR of the total cost, brute-force optimal retentions,
//! the excess-of-loss insolvency study and the two simulation tables.
//!
//! Every portfolio draw `r` comes from its own ChaCha stream keyed by `(seed, r)`, and all
//! reductions run in a fixed order, so results do not depend on the rayon pool size.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distortion::DistortionMeasure;
use crate::error::{Error, Result};
use crate::inference::{estimate, EstimationOptions};
use crate::numerics::{golden_section, GridMinimum};
use crate::retention::{solve_retention, solve_retention_edgeworth, LoadingRule};
use crate::severity::SeverityModel;

/// Stream offset separating the probability sample of the insolvency study.
const VALIDATION_STREAM: u64 = 1 << 40;
/// Stream offset for the loss samples of the estimator study.
const ESTIMATION_STREAM: u64 = 1 << 41;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McConfig {
    /// Portfolio draws per VaR estimate.
    pub b: usize,
    /// Outer replications of the estimator study.
    pub m: usize,
    pub seed: u64,
    /// Retention grid for brute-force searches; empty means "derive from the model optimum".
    pub d_grid: Vec<f64>,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            b: 20_000,
            m: 500,
            seed: 20_240_917,
            d_grid: Vec::new(),
        }
    }
}

impl McConfig {
    /// B = 50000, M = 5000.
    pub fn full_scale(seed: u64) -> Self {
        Self {
            b: 50_000,
            m: 5_000,
            seed,
            d_grid: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.b < 1000 {
            return Err(Error::invalid("b", format!("need at least 1000 draws, got {}", self.b)));
        }
        if self.m < 100 {
            return Err(Error::invalid("m", format!("need at least 100 replications, got {}", self.m)));
        }
        if self.d_grid.iter().any(|&d| !(d > 0.0 && d.is_finite()))
            || self.d_grid.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(Error::invalid("d_grid", "must be positive and strictly increasing"));
        }
        Ok(())
    }
}

pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// `b` simulated portfolios of `n` claims each, reused across retentions (common random numbers).
#[derive(Debug, Clone)]
pub struct PortfolioDraws {
    n: usize,
    b: usize,
    x: Vec<f64>,
}

impl PortfolioDraws {
    pub fn generate(model: &SeverityModel<f64>, n: usize, b: usize, seed: u64, stream_offset: u64) -> Self {
        let mut x = vec![0.0; n * b];
        x.par_chunks_mut(n.max(1)).enumerate().for_each(|(r, row)| {
            let mut rng = substream(seed, stream_offset + r as u64);
            model.sample_into(&mut rng, row);
        });
        Self { n, b, x }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn b(&self) -> usize {
        self.b
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.x[r * self.n..(r + 1) * self.n]
    }

    /// `Σᵢ (Xᵢ ∧ d)` per portfolio, written as `(#capped)·d + Σ uncapped` so that fully
    /// capped portfolios equal `n·d` exactly.
    pub fn retained_totals(&self, d: f64) -> Vec<f64> {
        (0..self.b)
            .into_par_iter()
            .map(|r| {
                let (mut capped, mut rest) = (0usize, 0.0);
                for &v in self.row(r) {
                    if v >= d {
                        capped += 1;
                    } else {
                        rest += v;
                    }
                }
                capped as f64 * d + rest
            })
            .collect()
    }

    /// Pooled means of `(X − d)₊` and `(X − d)₊²` over all simulated claims.
    pub fn pooled_excess(&self, d: f64) -> (f64, f64) {
        let per_row: Vec<(f64, f64)> = (0..self.b)
            .into_par_iter()
            .map(|r| {
                self.row(r).iter().fold((0.0, 0.0), |(s1, s2), &v| {
                    let e = (v - d).max(0.0);
                    (s1 + e, s2 + e * e)
                })
            })
            .collect();
        let (s1, s2) = per_row
            .iter()
            .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x, b + y));
        let total = (self.n * self.b) as f64;
        (s1 / total, s2 / total)
    }
}

/// Order statistic `⌈pB⌉` (1-based) of `values`.
pub fn empirical_quantile(values: &mut [f64], p: f64) -> f64 {
    let b = values.len();
    let k = ((p * b as f64).ceil() as usize).clamp(1, b) - 1;
    let (_, v, _) = values.select_nth_unstable_by(k, |a, c| a.total_cmp(c));
    *v
}

fn loading_at(rule: LoadingRule<f64>, n: usize, nu1: f64, nu2: f64) -> f64 {
    let sn = (n as f64).sqrt();
    let vn = (nu2 - nu1 * nu1).max(0.0);
    match rule {
        LoadingRule::Constant { rho } => rho,
        LoadingRule::Decreasing { delta } => delta / sn,
        LoadingRule::StdDev { rho0 } => rho0 / sn * vn.sqrt(),
        LoadingRule::Sharpe { rho0 } => rho0 / (sn * vn.sqrt()),
    }
}

/// Simulated VaR_p of the total cost `Σ(Xᵢ ∧ d) + (1 + ρ)·N·ν̂₁(d)` on fixed draws.
pub fn var_total_cost_on(draws: &PortfolioDraws, rule: LoadingRule<f64>, p: f64, d: f64) -> f64 {
    let mut totals = draws.retained_totals(d);
    let q = empirical_quantile(&mut totals, p);
    let (nu1, nu2) = draws.pooled_excess(d);
    if nu1 == 0.0 {
        // nothing ceded; the Sharpe loading would otherwise turn 0·∞ into NaN
        return q;
    }
    q + (1.0 + loading_at(rule, draws.n(), nu1, nu2)) * draws.n() as f64 * nu1
}

pub fn mc_var_total_cost(
    model: &SeverityModel<f64>,
    rule: LoadingRule<f64>,
    n: usize,
    p: f64,
    d: f64,
    cfg: &McConfig,
) -> Result<f64> {
    check_common(n, p, d)?;
    let draws = PortfolioDraws::generate(model, n, cfg.b, cfg.seed, 0);
    Ok(var_total_cost_on(&draws, rule, p, d))
}

fn check_common(n: usize, p: f64, d: f64) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("n", "portfolio size must be positive"));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("p", format!("must lie in (0,1), got {p}")));
    }
    if !(d > 0.0) {
        return Err(Error::DomainError(format!("retention must be positive, got {d}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BruteForceOptimum {
    pub d_actual: f64,
    pub var_at_optimum: f64,
    pub grid_index: usize,
}

/// Grid argmin of the simulated VaR with common random numbers, then one golden-section
/// pass over the neighbouring cells.
pub fn brute_force_on(
    draws: &PortfolioDraws,
    rule: LoadingRule<f64>,
    p: f64,
    grid: &[f64],
) -> Result<BruteForceOptimum> {
    if grid.len() < 3 {
        return Err(Error::invalid("d_grid", "need at least three grid points"));
    }
    let f = |d: f64| var_total_cost_on(draws, rule, p, d);
    let scan = GridMinimum::scan(grid, f);
    if !scan.is_interior() {
        return Err(Error::GridBoundaryMinimum { d: grid[scan.index] });
    }
    let i = scan.index;
    let (d, v, _) = golden_section(f, grid[i - 1], grid[i + 1], 1e-6, 60);
    // the golden pass may only improve on the grid value
    let (d, v) = if v <= scan.values[i] { (d, v) } else { (grid[i], scan.values[i]) };
    Ok(BruteForceOptimum {
        d_actual: d,
        var_at_optimum: v,
        grid_index: i,
    })
}

/// Linear grid around a reference retention, `[d/4, 3d]` with 300 points.
pub fn grid_around(d_ref: f64) -> Vec<f64> {
    let (lo, hi) = (d_ref / 4.0, 3.0 * d_ref);
    (0..300).map(|i| lo + (hi - lo) * i as f64 / 299.0).collect()
}

pub fn brute_force_optimal(
    model: &SeverityModel<f64>,
    rule: LoadingRule<f64>,
    n: usize,
    p: f64,
    cfg: &McConfig,
) -> Result<BruteForceOptimum> {
    cfg.validate()?;
    check_common(n, p, 1.0)?;
    let grid = if cfg.d_grid.is_empty() {
        let approx = solve_retention(model, rule, &DistortionMeasure::VaR { p }, n)?;
        grid_around(approx.d_star)
    } else {
        cfg.d_grid.clone()
    };
    let draws = PortfolioDraws::generate(model, n, cfg.b, cfg.seed, 0);
    brute_force_on(&draws, rule, p, &grid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InsolvencyResult {
    pub n: usize,
    pub d_star: f64,
    /// Simulated VaR_p of `Σ(Xᵢ ∧ d*)` from the search sample.
    pub var_retained: f64,
    /// P(T(d*) > VaR̂_p(T(d*))) from an independent sample.
    pub prob: f64,
    pub prob_std_error: f64,
    /// `P(X ≥ d*) ≤ (1 − p)^(1/N)`: the exceedance probability is then `1 − p`, else 0.
    pub analytic_criterion: bool,
    pub first_turning_point: Option<f64>,
}

/// Default search grid for the insolvency study: 400 points on `[0.01, 4]`.
pub fn insolvency_grid() -> Vec<f64> {
    (0..400).map(|i| 0.01 + 3.99 * i as f64 / 399.0).collect()
}

pub fn insolvency_probability(
    model: &SeverityModel<f64>,
    n: usize,
    rho: f64,
    p: f64,
    cfg: &McConfig,
) -> Result<InsolvencyResult> {
    cfg.validate()?;
    check_common(n, p, 1.0)?;
    if !(rho > 0.0) {
        return Err(Error::invalid("rho", format!("must be positive, got {rho}")));
    }
    let rule = LoadingRule::Constant { rho };
    let grid = if cfg.d_grid.is_empty() { insolvency_grid() } else { cfg.d_grid.clone() };
    let search = PortfolioDraws::generate(model, n, cfg.b, cfg.seed, 0);
    let opt = brute_force_on(&search, rule, p, &grid)?;
    let d = opt.d_star_or(opt.d_actual);
    let mut totals = search.retained_totals(d);
    let var_retained = empirical_quantile(&mut totals, p);
    // the premium is deterministic given d, so exceedance of T reduces to exceedance of the sum
    let check = PortfolioDraws::generate(model, n, cfg.b, cfg.seed, VALIDATION_STREAM);
    let exceed = check
        .retained_totals(d)
        .iter()
        .filter(|&&s| s > var_retained)
        .count();
    let prob = exceed as f64 / cfg.b as f64;
    let criterion = model.survival(d) <= (1.0 - p).powf(1.0 / n as f64);
    let first = if n >= 2 {
        turning_point_on(&search, p, &grid, 1).ok()
    } else {
        None
    };
    Ok(InsolvencyResult {
        n,
        d_star: d,
        var_retained,
        prob,
        prob_std_error: (prob * (1.0 - prob) / cfg.b as f64).sqrt(),
        analytic_criterion: criterion,
        first_turning_point: first,
    })
}

impl BruteForceOptimum {
    fn d_star_or(&self, d: f64) -> f64 {
        if self.d_actual.is_finite() {
            self.d_actual
        } else {
            d
        }
    }
}

/// Fraction of portfolios with `Σ(Xᵢ ∧ d) ≥ m·d`.
fn tail_fraction(draws: &PortfolioDraws, d: f64, m: usize) -> f64 {
    let level = m as f64 * d;
    let hits = draws.retained_totals(d).iter().filter(|&&s| s >= level).count();
    hits as f64 / draws.b() as f64
}

/// `d̃_N(i)`: the retention where `P(Σ(Xⱼ ∧ d) ≥ (N − i + 1)d)` crosses `1 − p`, located on
/// `grid` and refined by bisection on the same draws.
pub fn turning_point_on(draws: &PortfolioDraws, p: f64, grid: &[f64], i: usize) -> Result<f64> {
    let n = draws.n();
    if n < 2 || i == 0 || i >= n {
        return Err(Error::invalid("i", format!("need 1 <= i < N, got i = {i}, N = {n}")));
    }
    let m = n - i + 1;
    let g = |d: f64| tail_fraction(draws, d, m) - (1.0 - p);
    // first grid cell where the tail fraction drops below the target
    let mut bracket = None;
    if let Some(&d0) = grid.first() {
        let mut prev = d0;
        if g(d0) >= 0.0 {
            for &d in &grid[1..] {
                if g(d) < 0.0 {
                    bracket = Some((prev, d));
                    break;
                }
                prev = d;
            }
        }
    }
    let (mut lo, mut hi) = bracket.ok_or_else(|| {
        Error::NotBracketed(format!("turning point {i} of N = {n} is outside the grid"))
    })?;
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if g(mid) >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-10 * (1.0 + lo) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// All of `d̃_N(1), …, d̃_N(N − 1)`.
pub fn turning_points_on(draws: &PortfolioDraws, p: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if draws.n() < 2 {
        return Err(Error::invalid("n", "turning points need N >= 2"));
    }
    (1..draws.n()).map(|i| turning_point_on(draws, p, grid, i)).collect()
}

pub fn turning_points(model: &SeverityModel<f64>, n: usize, p: f64, cfg: &McConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_common(n, p, 1.0)?;
    let grid = if cfg.d_grid.is_empty() {
        let hi = model.quantile(0.999);
        (1..=400).map(|i| hi * i as f64 / 400.0).collect::<Vec<_>>()
    } else {
        cfg.d_grid.clone()
    };
    let draws = PortfolioDraws::generate(model, n, cfg.b, cfg.seed, 0);
    turning_points_on(&draws, p, &grid)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McTableRow {
    pub rule: String,
    pub n: usize,
    /// 1: normal approximation; 2, 3: Edgeworth orders.
    pub approx_order: u8,
    pub d_actual: f64,
    pub d_approx: f64,
    pub rel_diff_pct: f64,
}

/// Rules and parameters of the first simulation table.
pub fn table1_rules() -> Vec<LoadingRule<f64>> {
    vec![
        LoadingRule::Constant { rho: 0.3 },
        LoadingRule::Decreasing { delta: 0.5 },
        LoadingRule::StdDev { rho0: 0.5 },
        LoadingRule::Sharpe { rho0: 0.5 },
    ]
}

/// All (rule, N, order) rows at `p`; Edgeworth orders only for the Constant rule.
pub fn replicate_table1(
    model: &SeverityModel<f64>,
    rules: &[LoadingRule<f64>],
    ns: &[usize],
    p: f64,
    cfg: &McConfig,
) -> Result<Vec<McTableRow>> {
    cfg.validate()?;
    let measure = DistortionMeasure::VaR { p };
    let mut rows = Vec::new();
    for &rule in rules {
        for &n in ns {
            let approx = solve_retention(model, rule, &measure, n)?;
            let grid = if cfg.d_grid.is_empty() { grid_around(approx.d_star) } else { cfg.d_grid.clone() };
            let draws = PortfolioDraws::generate(model, n, cfg.b, cfg.seed, 0);
            let actual = brute_force_on(&draws, rule, p, &grid)?.d_actual;
            let mut orders = vec![(1u8, approx.d_star)];
            if let LoadingRule::Constant { rho } = rule {
                for order in [2u8, 3] {
                    orders.push((order, solve_retention_edgeworth(model, rho, p, n, order)?.d_star));
                }
            }
            for (order, d_approx) in orders {
                rows.push(McTableRow {
                    rule: rule.name().to_string(),
                    n,
                    approx_order: order,
                    d_actual: actual,
                    d_approx,
                    rel_diff_pct: 100.0 * (d_approx - actual) / actual,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table2Row {
    pub rule: String,
    pub n: usize,
    pub d_true: f64,
    pub mean_d_hat: f64,
    pub bias_pct: f64,
    pub theoretical_se: f64,
    pub empirical_se: f64,
    /// `100·(empirical − theoretical)/theoretical`.
    pub se_diff_pct: f64,
    pub coverage: f64,
    pub replications: usize,
    pub failures: usize,
}

/// `M` replications of sample → estimate for each rule and sample size.
pub fn replicate_table2(
    model: &SeverityModel<f64>,
    rules: &[LoadingRule<f64>],
    ns: &[usize],
    p: f64,
    cfg: &McConfig,
    opts: &EstimationOptions<f64>,
) -> Result<Vec<Table2Row>> {
    cfg.validate()?;
    let measure = DistortionMeasure::VaR { p };
    let mut rows = Vec::new();
    for &n in ns {
        for &rule in rules {
            let d_true = solve_retention(model, rule, &measure, n)?.d_star;
            let results: Vec<Option<(f64, f64, bool)>> = (0..cfg.m)
                .into_par_iter()
                .map(|r| {
                    let mut rng = substream(cfg.seed, ESTIMATION_STREAM + r as u64);
                    let mut losses = vec![0.0; n];
                    model.sample_into(&mut rng, &mut losses);
                    let sample = SeverityModel::empirical(losses).ok()?;
                    let est = estimate(&sample, rule, &measure, 0.95, opts).ok()?;
                    Some((est.d_hat, est.std_error, est.ci.0 <= d_true && d_true <= est.ci.1))
                })
                .collect();
            let ok: Vec<(f64, f64, bool)> = results.iter().flatten().copied().collect();
            let k = ok.len();
            if k < 2 {
                return Err(Error::NumericalFailure { error: k as f64 });
            }
            let kf = k as f64;
            let mean = ok.iter().map(|r| r.0).sum::<f64>() / kf;
            let theo = ok.iter().map(|r| r.1).sum::<f64>() / kf;
            let emp = (ok.iter().map(|r| (r.0 - mean).powi(2)).sum::<f64>() / (kf - 1.0)).sqrt();
            let cover = ok.iter().filter(|r| r.2).count() as f64 / kf;
            rows.push(Table2Row {
                rule: rule.name().to_string(),
                n,
                d_true,
                mean_d_hat: mean,
                bias_pct: 100.0 * (mean - d_true) / d_true,
                theoretical_se: theo,
                empirical_se: emp,
                se_diff_pct: 100.0 * (emp - theo) / theo,
                coverage: cover,
                replications: cfg.m,
                failures: cfg.m - k,
            });
        }
    }
    Ok(rows)
}

/// Heavy-tailed stand-in for a commercial fire-loss portfolio: Pareto II(2.2, 1.6)
/// draws capped at 250, with a handful of injected extreme claims (largest 315.54).
pub fn synthetic_fire_losses(n: usize, seed: u64) -> Vec<f64> {
    let model: SeverityModel<f64> = SeverityModel::pareto(2.2, 1.6).expect("valid parameters");
    let mut losses: Vec<f64> = model.sample(n, seed).into_iter().map(|x: f64| x.min(250.0)).collect();
    let extremes = [315.54, 182.3, 97.6, 64.2, 48.9];
    for (k, &x) in extremes.iter().enumerate().take(n) {
        losses[(k * 1987 + 13) % n] = x;
    }
    losses.iter_mut().for_each(|x| *x = (*x * 1e4).round() / 1e4);
    losses
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pareto() -> SeverityModel<f64> {
        SeverityModel::pareto(9.0, 8.0).unwrap()
    }

    #[test]
    fn quantile_is_order_statistic() {
        let mut v = vec![5.0, 1.0, 4.0, 2.0, 3.0];
        assert_eq!(empirical_quantile(&mut v, 0.5), 3.0);
        let mut v = vec![4.0, 3.0, 2.0, 1.0];
        assert_eq!(empirical_quantile(&mut v, 0.75), 3.0);
        assert_eq!(empirical_quantile(&mut v, 0.76), 4.0);
    }

    #[test]
    fn draws_are_deterministic_across_pools() {
        let m = pareto();
        let a = PortfolioDraws::generate(&m, 7, 1500, 3, 0);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| PortfolioDraws::generate(&m, 7, 1500, 3, 0));
        assert_eq!(a.x, b.x);
        let v1 = var_total_cost_on(&a, LoadingRule::Decreasing { delta: 0.5 }, 0.75, 0.6);
        let v2 = pool.install(|| var_total_cost_on(&b, LoadingRule::Decreasing { delta: 0.5 }, 0.75, 0.6));
        assert_eq!(v1.to_bits(), v2.to_bits());
    }

    #[test]
    fn retained_totals_nondecreasing_in_d() {
        let draws = PortfolioDraws::generate(&pareto(), 5, 1000, 1, 0);
        let a = draws.retained_totals(0.3);
        let b = draws.retained_totals(0.6);
        assert!(a.iter().zip(&b).all(|(x, y)| x <= y));
    }

    #[test]
    fn large_retention_gives_plain_var() {
        let draws = PortfolioDraws::generate(&pareto(), 4, 2000, 9, 0);
        let v = var_total_cost_on(&draws, LoadingRule::Constant { rho: 0.3 }, 0.75, 1e9);
        let mut sums: Vec<f64> = (0..2000).map(|r| draws.row(r).iter().sum()).collect();
        let q = empirical_quantile(&mut sums, 0.75);
        assert!((v - q).abs() < 1e-9 * q);
    }

    #[test]
    fn two_claim_turning_point() {
        let cfg = McConfig {
            b: 40_000,
            ..McConfig::default()
        };
        let t = turning_points(&pareto(), 2, 0.75, &cfg).unwrap();
        let exact = 8.0 * (2f64.powf(1.0 / 9.0) - 1.0);
        // P(X ≥ d)² = 1/4; delta method on the estimated tail fraction
        let f = pareto().density(exact).unwrap();
        let se = (0.25 * 0.75 / 40_000.0_f64).sqrt() / (2.0 * 0.5 * f);
        assert!((t[0] - exact).abs() < 2.0 * se, "{} vs {exact} (se {se})", t[0]);
    }

    #[test]
    fn turning_points_increase() {
        let cfg = McConfig {
            b: 5_000,
            ..McConfig::default()
        };
        let t = turning_points(&pareto(), 5, 0.75, &cfg).unwrap();
        assert_eq!(t.len(), 4);
        assert!(t.windows(2).all(|w| w[0] < w[1]), "{t:?}");
    }

    #[test]
    fn single_claim_insolvency_is_zero() {
        let cfg = McConfig {
            b: 5_000,
            ..McConfig::default()
        };
        let r = insolvency_probability(&pareto(), 1, 0.2, 0.75, &cfg).unwrap();
        assert_eq!(r.prob, 0.0);
        assert!(!r.analytic_criterion);
        assert!((r.d_star - 8.0 * (1.2_f64.powf(1.0 / 9.0) - 1.0)).abs() < 0.02);
    }

    #[test]
    fn config_validation() {
        assert!(McConfig { b: 10, ..McConfig::default() }.validate().is_err());
        assert!(McConfig { d_grid: vec![1.0, 0.5], ..McConfig::default() }.validate().is_err());
        assert!(McConfig::default().validate().is_ok());
    }

    #[test]
    fn synthetic_data_shape() {
        let x = synthetic_fire_losses(10_000, 1);
        assert_eq!(x.len(), 10_000);
        assert!(x.iter().all(|&v| v >= 0.0));
        assert_eq!(x.iter().cloned().fold(0.0, f64::max), 315.54);
    }
}
