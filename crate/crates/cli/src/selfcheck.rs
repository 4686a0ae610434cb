//! Fast invariant checks run by `eolopt selfcheck`.

use std::f64::consts::PI;

use eol_core::distortion::{choquet_normal, DistortionMeasure};
use eol_core::montecarlo::{var_total_cost_on, PortfolioDraws};
use eol_core::numerics::{integrate, normal_quantile, QuadratureOptions};
use eol_core::retention::{solve_retention, stop_loss_retention, LoadingRule};
use eol_core::severity::SeverityModel;
use serde::Serialize;

/// Reference standard normal quantiles `(p, z)`.
pub const NORMAL_QUANTILES: [(f64, f64); 6] = [
    (0.5, 0.0),
    (0.75, 0.674_489_750_196_081_7),
    (0.9, 1.281_551_565_544_600_5),
    (0.95, 1.644_853_626_951_472_2),
    (0.99, 2.326_347_874_040_840_8),
    (0.001, -3.090_232_306_167_813_5),
];

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub passed: bool,
    pub checks: Vec<Check>,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<String, String>) -> Check {
    match f() {
        Ok(detail) => Check { name, passed: true, detail },
        Err(detail) => Check { name, passed: false, detail },
    }
}

fn within(label: &str, got: f64, want: f64, tol: f64) -> Result<(), String> {
    if (got - want).abs() <= tol * (1.0 + want.abs()) {
        Ok(())
    } else {
        Err(format!("{label}: got {got}, expected {want}"))
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn run(quantile_table: &[(f64, f64)]) -> Report {
    let checks = vec![
        check("normal_quantile", || {
            for &(p, z) in quantile_table {
                within(&format!("z({p})"), normal_quantile(p).map_err(err)?, z, 1e-12)?;
            }
            Ok(format!("{} reference points", quantile_table.len()))
        }),
        check("pareto_moments_vs_quadrature", || {
            let m = SeverityModel::pareto(9.0_f64, 8.0).map_err(err)?;
            let opts = QuadratureOptions { abs_tol: 1e-14, rel_tol: 1e-13, max_subdivisions: 2000 };
            for d in [0.1, 0.5472, 2.0, 10.0] {
                let t = m.truncated_moments(d).map_err(err)?;
                let mu1 = integrate(|x| m.survival(x), 0.0, d, &[], opts).map_err(err)?;
                let mu2 = integrate(|x| 2.0 * x * m.survival(x), 0.0, d, &[], opts).map_err(err)?;
                within("mu1", t.mu1, mu1, 1e-10)?;
                within("mu2", t.mu2, mu2, 1e-10)?;
                within("nu1", t.nu1, 1.0 - mu1, 1e-10)?;
            }
            Ok("mu1, mu2, nu1 at four retentions".into())
        }),
        check("phi_closed_forms", || {
            let wang = DistortionMeasure::Wang { beta: 0.7 }.phi_h_normal().map_err(err)?;
            within("wang", wang, 0.7, 1e-9)?;
            let dp = DistortionMeasure::DualPower { beta: 2.0 }.phi_h_normal().map_err(err)?;
            within("dualpower", dp, 1.0 / PI.sqrt(), 1e-9)?;
            let es = DistortionMeasure::ES { p: 0.75 };
            within("es", es.phi_h_normal().map_err(err)?, choquet_normal(&es).map_err(err)?, 1e-8)?;
            Ok("Wang, dual power, ES".into())
        }),
        check("stop_loss_closed_form", || {
            let m = SeverityModel::pareto(9.0_f64, 8.0).map_err(err)?;
            let d = stop_loss_retention(&m, 0.2, 0.75).map_err(err)?;
            within("d_SL", d, 8.0 * (1.2_f64.powf(1.0 / 9.0) - 1.0), 1e-10)?;
            Ok(format!("d = {d:.6}"))
        }),
        check("decreasing_optimum", || {
            let m = SeverityModel::pareto(9.0_f64, 8.0).map_err(err)?;
            let s = solve_retention(&m, LoadingRule::Decreasing { delta: 0.5 }, &DistortionMeasure::VaR { p: 0.75 }, 100)
                .map_err(err)?;
            within("d*", s.d_star, 0.547_247, 1e-5)?;
            Ok(format!("d* = {:.6}", s.d_star))
        }),
        check("mc_determinism", || {
            let m = SeverityModel::pareto(9.0_f64, 8.0).map_err(err)?;
            let run = || {
                let draws = PortfolioDraws::generate(&m, 10, 2000, 42, 0);
                var_total_cost_on(&draws, LoadingRule::Constant { rho: 0.3 }, 0.75, 1.0)
            };
            let a = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(err)?.install(run);
            let b = rayon::ThreadPoolBuilder::new().num_threads(3).build().map_err(err)?.install(run);
            if a.to_bits() == b.to_bits() {
                Ok(format!("VaR = {a:.6} with 1 and 3 threads"))
            } else {
                Err(format!("1 thread: {a}, 3 threads: {b}"))
            }
        }),
    ];
    Report {
        passed: checks.iter().all(|c| c.passed),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresh_build_passes() {
        let r = run(&NORMAL_QUANTILES);
        assert!(r.passed, "{:#?}", r.checks);
    }

    #[test]
    fn corrupted_table_names_the_check() {
        let mut table = NORMAL_QUANTILES;
        table[2].1 = 1.28;
        let r = run(&table);
        assert!(!r.passed);
        let failed: Vec<_> = r.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        assert_eq!(failed, vec!["normal_quantile"]);
    }
}
