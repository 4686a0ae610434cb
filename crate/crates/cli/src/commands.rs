use std::io::Write;
use std::path::{Path, PathBuf};

use eol_core::distortion::DistortionMeasure;
use eol_core::inference::{estimate, retention_curve, CurvePoint, EstimationOptions, SweepParameter};
use eol_core::montecarlo::{
    insolvency_probability, replicate_table1, replicate_table2, table1_rules, McConfig,
};
use eol_core::retention::{
    solve_retention_edgeworth, solve_retention_with, stop_loss_retention, LoadingRule, SolverOptions,
};
use eol_core::severity::{kde_density, summary_and_lorenz, SeverityModel};
use serde::Serialize;

use crate::args::*;
use crate::format::{opt6, sig6};
use crate::manifest::{write_atomic, ManifestBuilder};
use crate::svg::{Band, Chart, Line};
use crate::{data, selfcheck, usage, CliError};

type Res<T> = Result<T, CliError>;

pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> Res<()> {
    let g = &cli.global;
    match &cli.command {
        Command::Optimize(a) => optimize(g, a, out),
        Command::Estimate(a) => estimate_cmd(g, a, out),
        Command::Simulate(s) => simulate(g, s, out),
        Command::Analyze(a) => analyze(g, a, out),
        Command::Selfcheck(a) => selfcheck_cmd(g, a, out),
    }
}

fn to_json<S: Serialize>(v: &S) -> Res<String> {
    serde_json::to_string_pretty(v).map_err(|e| CliError::Io(e.into()))
}

fn read_input(path: &Path) -> Res<(Vec<u8>, Vec<f64>)> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data {
        line: 0,
        message: format!("cannot read {}: {e}", path.display()),
    })?;
    let losses = data::parse_losses(bytes.as_slice())?;
    Ok((bytes, losses))
}

fn build_model(m: &ModelArgs) -> Res<(SeverityModel<f64>, Option<Vec<u8>>)> {
    match (&m.input, m.model) {
        (Some(_), Some(_)) => Err(usage("give either --input or --model, not both")),
        (Some(path), None) => {
            let (bytes, losses) = read_input(path)?;
            Ok((SeverityModel::empirical(losses)?, Some(bytes)))
        }
        (None, Some(ModelKind::Pareto)) => {
            let (Some(a), Some(l)) = (m.alpha, m.lambda) else {
                return Err(usage("--model pareto needs --alpha and --lambda"));
            };
            Ok((SeverityModel::pareto(a, l)?, None))
        }
        (None, None) => Err(usage("no severity model: use --model pareto --alpha A --lambda L or --input FILE")),
    }
}

fn build_measure(r: &RuleArgs) -> Res<DistortionMeasure<f64>> {
    match (&r.measure, r.p) {
        (Some(s), _) => Ok(s.parse()?),
        (None, Some(p)) => {
            let m = DistortionMeasure::VaR { p };
            m.validate()?;
            Ok(m)
        }
        (None, None) => Err(usage("give --p or --measure")),
    }
}

fn required(v: Option<f64>, flag: &str, rule: &str) -> Res<f64> {
    v.ok_or_else(|| usage(format!("--rule {rule} needs {flag}")))
}

fn build_rule(r: &RuleArgs) -> Res<LoadingRule<f64>> {
    let rule = match r.rule {
        RuleKind::Constant => LoadingRule::Constant { rho: required(r.rho, "--rho", "constant")? },
        RuleKind::Decreasing => LoadingRule::Decreasing { delta: required(r.delta, "--delta", "decreasing")? },
        RuleKind::Sd => LoadingRule::StdDev { rho0: required(r.rho0, "--rho0", "sd")? },
        RuleKind::Sharpe => LoadingRule::Sharpe { rho0: required(r.rho0, "--rho0", "sharpe")? },
        RuleKind::Sl => return Err(usage("--rule sl is only available in optimize")),
    };
    rule.validate()?;
    Ok(rule)
}

fn out_dir(g: &GlobalArgs) -> PathBuf {
    g.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn params<S: Serialize>(s: &S) -> serde_json::Value {
    serde_json::to_value(s).unwrap_or(serde_json::Value::Null)
}

fn emit(path: &Path, bytes: &[u8], manifest: &mut ManifestBuilder) -> Res<()> {
    write_atomic(path, bytes)?;
    manifest.output(path);
    Ok(())
}

fn finish_manifest(dir: &Path, stem: &str, manifest: ManifestBuilder) -> Res<()> {
    let m = manifest.finish();
    write_atomic(&dir.join(format!("{stem}.manifest.json")), format!("{}\n", to_json(&m)?).as_bytes())?;
    Ok(())
}

#[derive(Serialize)]
struct StopLoss {
    rule: &'static str,
    rho: f64,
    p: f64,
    d_star: f64,
}

fn optimize(g: &GlobalArgs, a: &OptimizeArgs, out: &mut dyn Write) -> Res<()> {
    let (model, input) = build_model(&a.model)?;
    let json = if a.rule.rule == RuleKind::Sl {
        let rho = required(a.rule.rho, "--rho", "sl")?;
        let p = match (a.rule.p, &a.rule.measure) {
            (Some(p), _) => p,
            (None, Some(_)) => build_measure(&a.rule)?
                .var_level()
                .ok_or_else(|| usage("--rule sl needs a VaR level"))?,
            (None, None) => return Err(usage("--rule sl needs --p")),
        };
        to_json(&StopLoss {
            rule: "sl",
            rho,
            p,
            d_star: stop_loss_retention(&model, rho, p)?,
        })?
    } else {
        let rule = build_rule(&a.rule)?;
        let measure = build_measure(&a.rule)?;
        let n = a.n.ok_or_else(|| usage("--N (portfolio size) is required"))?;
        if n == 0 {
            return Err(usage("--N must be positive"));
        }
        let sol = match a.edgeworth {
            None => solve_retention_with(
                &model,
                rule,
                &measure,
                n,
                &SolverOptions {
                    grid_points: a.grid_points,
                    ..SolverOptions::default()
                },
            )?,
            Some(order @ (2 | 3)) => {
                let (LoadingRule::Constant { rho }, Some(p)) = (rule, measure.var_level()) else {
                    return Err(usage("--edgeworth needs --rule constant and a VaR measure"));
                };
                solve_retention_edgeworth(&model, rho, p, n, order)?
            }
            Some(o) => return Err(usage(format!("--edgeworth must be 2 or 3, got {o}"))),
        };
        to_json(&sol)?
    };
    writeln!(out, "{json}")?;
    if let Some(dir) = &g.out {
        let mut m = ManifestBuilder::start("optimize", params(a), None);
        if let Some(b) = &input {
            m.input(b);
        }
        emit(&dir.join("optimize.json"), json.as_bytes(), &mut m)?;
        finish_manifest(dir, "optimize", m)?;
    }
    Ok(())
}

fn estimate_cmd(g: &GlobalArgs, a: &EstimateArgs, out: &mut dyn Write) -> Res<()> {
    let (bytes, losses) = read_input(&a.input)?;
    let rule = build_rule(&a.rule)?;
    let measure = build_measure(&a.rule)?;
    let model = SeverityModel::empirical(losses)?;
    let opts = EstimationOptions {
        bandwidth: a.bandwidth,
        ..EstimationOptions::default()
    };
    let est = estimate(&model, rule, &measure, a.level, &opts)?;
    let json = to_json(&est)?;
    writeln!(out, "{json}")?;
    if let Some(dir) = &g.out {
        let mut m = ManifestBuilder::start("estimate", params(a), None);
        m.input(&bytes);
        emit(&dir.join("estimate.json"), json.as_bytes(), &mut m)?;
        finish_manifest(dir, "estimate", m)?;
    }
    Ok(())
}

fn mc_config(g: &GlobalArgs, mc: &McArgs, m: Option<usize>) -> Res<McConfig> {
    let seed = g.seed.unwrap_or(McConfig::default().seed);
    let mut cfg = if mc.full_scale {
        McConfig::full_scale(seed)
    } else {
        McConfig { seed, ..McConfig::default() }
    };
    if let Some(b) = mc.b {
        cfg.b = b;
    }
    if let Some(m) = m {
        cfg.m = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn rule_kind(rule: &LoadingRule<f64>) -> RuleKind {
    match rule {
        LoadingRule::Constant { .. } => RuleKind::Constant,
        LoadingRule::Decreasing { .. } => RuleKind::Decreasing,
        LoadingRule::StdDev { .. } => RuleKind::Sd,
        LoadingRule::Sharpe { .. } => RuleKind::Sharpe,
    }
}

fn select_rules(all: Vec<LoadingRule<f64>>, only: &[RuleKind]) -> Res<Vec<LoadingRule<f64>>> {
    if only.contains(&RuleKind::Sl) {
        return Err(usage("stop-loss is not part of the simulation tables"));
    }
    if only.is_empty() {
        return Ok(all);
    }
    Ok(all.into_iter().filter(|r| only.contains(&rule_kind(r))).collect())
}

fn order_label(order: u8) -> &'static str {
    match order {
        1 => "o(sqrt(N))",
        2 => "o(1)",
        _ => "o(1/sqrt(N))",
    }
}

fn csv_bytes(header: &[&str], rows: Vec<Vec<String>>) -> Res<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(std::io::Error::other(e.to_string()));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(std::io::Error::other(e.to_string())))
}

fn check_ns(ns: &[usize]) -> Res<()> {
    if ns.is_empty() || ns.contains(&0) {
        return Err(usage("--N needs positive portfolio sizes"));
    }
    Ok(())
}

fn simulate(g: &GlobalArgs, s: &SimulateCommand, out: &mut dyn Write) -> Res<()> {
    let dir = out_dir(g);
    let mut manifest = ManifestBuilder::start("simulate", params(s), None);
    let (stem, csv, json, cfg) = match s {
        SimulateCommand::Table1 { mc, only, n, p } => {
            check_ns(n)?;
            let cfg = mc_config(g, mc, None)?;
            let model = SeverityModel::pareto(mc.alpha, mc.lambda)?;
            let rules = select_rules(table1_rules(), only)?;
            let rows = replicate_table1(&model, &rules, n, *p, &cfg)?;
            let body = rows
                .iter()
                .map(|r| {
                    vec![
                        r.rule.clone(),
                        r.n.to_string(),
                        order_label(r.approx_order).to_string(),
                        sig6(r.d_actual),
                        sig6(r.d_approx),
                        sig6(r.rel_diff_pct),
                    ]
                })
                .collect();
            let csv = csv_bytes(&["rule", "N", "approx_order", "d_actual", "d_approx", "rel_diff_pct"], body)?;
            ("table1", csv, to_json(&rows)?, cfg)
        }
        SimulateCommand::Table2 { mc, only, n, m, p, bandwidth } => {
            check_ns(n)?;
            let cfg = mc_config(g, mc, *m)?;
            let model = SeverityModel::pareto(mc.alpha, mc.lambda)?;
            let all = vec![
                LoadingRule::Decreasing { delta: 0.5 },
                LoadingRule::StdDev { rho0: 0.5 },
                LoadingRule::Sharpe { rho0: 0.5 },
            ];
            let all = if only.contains(&RuleKind::Constant) {
                [vec![LoadingRule::Constant { rho: 0.3 }], all].concat()
            } else {
                all
            };
            let rules = select_rules(all, only)?;
            let opts = EstimationOptions {
                bandwidth: *bandwidth,
                ..EstimationOptions::default()
            };
            let rows = replicate_table2(&model, &rules, n, *p, &cfg, &opts)?;
            let body = rows
                .iter()
                .map(|r| {
                    vec![
                        r.rule.clone(),
                        r.n.to_string(),
                        sig6(r.d_true),
                        sig6(r.mean_d_hat),
                        sig6(r.bias_pct),
                        sig6(r.theoretical_se),
                        sig6(r.empirical_se),
                        sig6(r.se_diff_pct),
                        sig6(r.coverage),
                        r.failures.to_string(),
                    ]
                })
                .collect();
            let header = [
                "rule", "N", "true", "estimated", "bias_pct", "theoretical_se", "empirical_se", "diff_pct",
                "coverage", "failures",
            ];
            ("table2", csv_bytes(&header, body)?, to_json(&rows)?, cfg)
        }
        SimulateCommand::Insolvency { mc, n, rho, p } => {
            check_ns(n)?;
            let cfg = mc_config(g, mc, None)?;
            let model = SeverityModel::pareto(mc.alpha, mc.lambda)?;
            let rows = n
                .iter()
                .map(|&k| insolvency_probability(&model, k, *rho, *p, &cfg))
                .collect::<Result<Vec<_>, _>>()?;
            let body = rows
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        sig6(r.d_star),
                        sig6(r.var_retained),
                        sig6(r.prob),
                        sig6(r.prob_std_error),
                        r.analytic_criterion.to_string(),
                        opt6(r.first_turning_point),
                    ]
                })
                .collect();
            let header = ["N", "d_star", "var_retained", "prob", "prob_se", "analytic_criterion", "first_turning_point"];
            ("insolvency", csv_bytes(&header, body)?, to_json(&rows)?, cfg)
        }
    };
    manifest.param("mc_config", params(&cfg));
    manifest.seed(cfg.seed);
    emit(&dir.join(format!("{stem}.csv")), &csv, &mut manifest)?;
    finish_manifest(&dir, stem, manifest)?;
    if g.json {
        writeln!(out, "{json}")?;
    } else {
        out.write_all(&csv)?;
    }
    Ok(())
}

fn parse_grid(spec: &str) -> Res<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || usage(format!("--grid expects lo:hi:count, got {spec:?}"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let k: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if !lo.is_finite() || !hi.is_finite() || lo >= hi || k < 2 {
        return Err(bad());
    }
    Ok((0..k).map(|i| lo + (hi - lo) * i as f64 / (k - 1) as f64).collect())
}

#[derive(Serialize)]
struct AnalyzeSummary {
    count: usize,
    mean: f64,
    median: f64,
    max: f64,
    gini: f64,
    top_10_share: f64,
    top_1pct_share: f64,
    input_digest: String,
    failed_points: usize,
    outputs: Vec<String>,
}

fn analyze(g: &GlobalArgs, a: &AnalyzeArgs, out: &mut dyn Write) -> Res<()> {
    let dir = out_dir(g);
    let (bytes, losses) = read_input(&a.input)?;
    if a.rules.contains(&RuleKind::Sl) {
        return Err(usage("--rules takes constant, decreasing, sd or sharpe"));
    }
    let mut manifest = ManifestBuilder::start("analyze", params(a), None);
    manifest.input(&bytes);
    let summary = summary_and_lorenz(&losses)?;
    let model = SeverityModel::empirical(losses.clone())?;

    let lorenz: Vec<Vec<String>> = summary.lorenz.iter().map(|&(u, l)| vec![sig6(u), sig6(l)]).collect();
    emit(&dir.join("lorenz.csv"), &csv_bytes(&["u", "L"], lorenz)?, &mut manifest)?;

    let hi = model.quantile(0.99).max(a.bandwidth);
    let xs: Vec<f64> = (0..512).map(|i| hi * i as f64 / 511.0).collect();
    let dens = xs
        .iter()
        .map(|&x| kde_density(&losses, x, a.bandwidth).map(|f| (x, f)))
        .collect::<Result<Vec<_>, _>>()?;
    let body = dens.iter().map(|&(x, f)| vec![sig6(x), sig6(f)]).collect();
    emit(&dir.join("density.csv"), &csv_bytes(&["x", "density"], body)?, &mut manifest)?;

    let (sweep, grid) = match a.sweep {
        Sweep::Rho => (SweepParameter::EffectiveRho, a.grid.as_deref().map_or_else(|| parse_grid("0.001:0.03:30"), parse_grid)?),
        Sweep::P => (SweepParameter::Level, a.grid.as_deref().map_or_else(|| parse_grid("0.8:0.99:20"), parse_grid)?),
    };
    let measure = if a.es {
        DistortionMeasure::ES { p: a.fixed_p }
    } else {
        DistortionMeasure::VaR { p: a.fixed_p }
    };
    measure.validate()?;
    let opts = EstimationOptions {
        bandwidth: a.bandwidth,
        ..EstimationOptions::default()
    };
    let mut chart = Chart {
        title: match a.sweep {
            Sweep::Rho => format!("Optimal retention vs effective loading (p = {})", a.fixed_p),
            Sweep::P => format!("Optimal retention vs risk level (rho = {})", a.fixed_rho),
        },
        x_label: if a.sweep == Sweep::Rho { "effective loading".into() } else { "risk level".into() },
        y_label: "retention".into(),
        ..Chart::default()
    };
    let mut failed = 0;
    for kind in &a.rules {
        let template = match kind {
            RuleKind::Constant => LoadingRule::Constant { rho: 1.0 },
            RuleKind::Decreasing => LoadingRule::Decreasing { delta: 1.0 },
            RuleKind::Sd => LoadingRule::StdDev { rho0: 1.0 },
            _ => LoadingRule::Sharpe { rho0: 1.0 },
        };
        let curve: Vec<CurvePoint<f64>> =
            retention_curve(&model, template, sweep, &grid, a.fixed_rho, &measure, a.level, &opts)?;
        failed += curve.iter().filter(|c| c.estimate.is_none()).count();
        let body = curve
            .iter()
            .map(|c| {
                let e = c.estimate.as_ref();
                vec![
                    sig6(c.param),
                    opt6(c.nominal),
                    opt6(e.map(|e| e.d_hat)),
                    opt6(e.map(|e| e.std_error)),
                    opt6(e.map(|e| e.ci.0)),
                    opt6(e.map(|e| e.ci.1)),
                    c.error.clone().unwrap_or_default(),
                ]
            })
            .collect();
        let header = ["param", "nominal", "d_hat", "std_error", "ci_lo", "ci_hi", "error"];
        let name = template.name();
        emit(&dir.join(format!("curve_{name}.csv")), &csv_bytes(&header, body)?, &mut manifest)?;
        let pick = |f: fn(&eol_core::inference::EstimationResult<f64>) -> f64| -> Vec<f64> {
            curve.iter().map(|c| c.estimate.as_ref().map_or(f64::NAN, f)).collect()
        };
        chart.lines.push(Line {
            label: name.to_string(),
            points: grid.iter().copied().zip(pick(|e| e.d_hat)).collect(),
            dashed: false,
        });
        chart.bands.push(Some(Band {
            x: grid.clone(),
            lower: pick(|e| e.ci.0),
            upper: pick(|e| e.ci.1),
        }));
    }
    if a.svg {
        emit(&dir.join("curves.svg"), chart.render().as_bytes(), &mut manifest)?;
        let step = (summary.lorenz.len() / 2000).max(1);
        let lorenz_chart = Chart {
            title: "Lorenz curve".into(),
            x_label: "cumulative share of claims".into(),
            y_label: "cumulative share of losses".into(),
            lines: vec![
                Line {
                    label: "Lorenz".into(),
                    points: summary.lorenz.iter().step_by(step).chain(summary.lorenz.last()).copied().collect(),
                    dashed: false,
                },
                Line {
                    label: "equality".into(),
                    points: vec![(0.0, 0.0), (1.0, 1.0)],
                    dashed: true,
                },
            ],
            bands: vec![],
        };
        emit(&dir.join("lorenz.svg"), lorenz_chart.render().as_bytes(), &mut manifest)?;
        let density_chart = Chart {
            title: "Kernel density of claim severity".into(),
            x_label: "loss".into(),
            y_label: "density".into(),
            lines: vec![Line {
                label: format!("bandwidth {}", a.bandwidth),
                points: dens,
                dashed: false,
            }],
            bands: vec![],
        };
        emit(&dir.join("density.svg"), density_chart.render().as_bytes(), &mut manifest)?;
    }
    let n = summary.count;
    let report = AnalyzeSummary {
        count: n,
        mean: summary.mean,
        median: summary.median,
        max: summary.max,
        gini: summary.gini(),
        top_10_share: summary.top_share(10),
        top_1pct_share: summary.top_share(n.div_ceil(100)),
        input_digest: crate::manifest::digest64(&bytes),
        failed_points: failed,
        outputs: Vec::new(),
    };
    let summary_path = dir.join("summary.json");
    manifest.output(&summary_path);
    let m = manifest.finish();
    let report = AnalyzeSummary {
        outputs: m.outputs.clone(),
        ..report
    };
    let json = to_json(&report)?;
    write_atomic(&summary_path, json.as_bytes())?;
    write_atomic(&dir.join("analyze.manifest.json"), format!("{}\n", to_json(&m)?).as_bytes())?;
    writeln!(out, "{json}")?;
    Ok(())
}

fn read_quantile_table(path: &Path) -> Res<Vec<(f64, f64)>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Data { line: 0, message: e.to_string() })?;
    let mut table = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| CliError::Data { line: 0, message: e.to_string() })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let num = |i: usize| -> Option<f64> { rec.get(i)?.parse().ok() };
        match (num(0), num(1)) {
            (Some(p), Some(z)) => table.push((p, z)),
            _ if line == 1 => {} // header
            _ => return Err(CliError::Data { line, message: "expected p,z".into() }),
        }
    }
    Ok(table)
}

fn selfcheck_cmd(g: &GlobalArgs, a: &SelfcheckArgs, out: &mut dyn Write) -> Res<()> {
    let table = match &a.quantile_table {
        Some(p) => read_quantile_table(p)?,
        None => selfcheck::NORMAL_QUANTILES.to_vec(),
    };
    let report = selfcheck::run(&table);
    if g.json {
        writeln!(out, "{}", to_json(&report)?)?;
    } else {
        for c in &report.checks {
            writeln!(out, "{} {:<30} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail)?;
        }
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(CliError::Check(failed.join(", ")))
    }
}
