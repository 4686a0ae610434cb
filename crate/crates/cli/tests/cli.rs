use std::path::{Path, PathBuf};

use eol_cli::run;

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

fn eolopt(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("eolopt").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap_or_else(|e| panic!("{e}: {s}"))
}

fn write_losses(dir: &Path, name: &str, xs: &[f64]) -> PathBuf {
    let mut s = String::from("loss\n");
    for x in xs {
        s.push_str(&format!("{x}\n"));
    }
    let p = dir.join(name);
    std::fs::write(&p, s).unwrap();
    p
}

const PARETO: [&str; 6] = ["--model", "pareto", "--alpha", "9", "--lambda", "8"];

#[test]
fn optimize_decreasing() {
    let mut args = vec!["optimize"];
    args.extend(PARETO);
    args.extend(["--rule", "decreasing", "--delta", "0.5", "--p", "0.75", "--N", "100", "--measure", "var:0.75"]);
    let (code, out, _) = eolopt(&args);
    assert_eq!(code, 0);
    let d = json(&out)["d_star"].as_f64().unwrap();
    assert!((d - 0.5472).abs() < 1e-4, "{d}");
}

#[test]
fn optimize_rejects_zero_phi() {
    let mut args = vec!["optimize"];
    args.extend(PARETO);
    args.extend(["--rule", "decreasing", "--delta", "0.5", "--N", "100", "--measure", "wang:0"]);
    let (code, out, _) = eolopt(&args);
    assert_eq!(code, 2);
    assert_eq!(json(&out)["error"], "NonpositivePhi");
}

#[test]
fn optimize_stop_loss() {
    let (code, out, _) = eolopt(&["optimize", "--rule", "sl", "--rho", "0.2", "--p", "0.75", "--model", "pareto", "--alpha", "9", "--lambda", "8"]);
    assert_eq!(code, 0);
    let d = json(&out)["d_star"].as_f64().unwrap();
    assert!((d - 0.16372).abs() < 1e-5, "{d}");
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(eolopt(&["optimize", "--rule", "decreasing", "--delta", "0.5", "--p", "0.75", "--N", "10"]).0, 64);
    let mut args = vec!["optimize"];
    args.extend(PARETO);
    args.extend(["--rule", "sd", "--p", "0.75", "--N", "10"]);
    assert_eq!(eolopt(&args).0, 64);
    assert_eq!(eolopt(&["frobnicate"]).0, 64);
    let mut args = vec!["optimize"];
    args.extend(PARETO);
    args.extend(["--rule", "constant", "--rho", "0.3", "--N", "10", "--measure", "var:1.5"]);
    assert_eq!(eolopt(&args).0, 64);
    assert_eq!(eolopt(&["--help"]).0, 0);
}

#[test]
fn estimate_on_simulated_pareto() {
    let dir = tempfile::tempdir().unwrap();
    let xs = eol_core::Severity::pareto(9.0, 8.0).unwrap().sample(10_000, 7);
    let input = write_losses(dir.path(), "pareto.csv", &xs);
    let (code, out, _) = eolopt(&["estimate", "--input", input.to_str().unwrap(), "--rule", "decreasing", "--delta", "0.5", "--p", "0.75"]);
    assert_eq!(code, 0);
    let v = json(&out);
    let (d, se) = (v["d_hat"].as_f64().unwrap(), v["std_error"].as_f64().unwrap());
    assert!((d - 0.5472).abs() < 3.0 * se, "{d} ± {se}");
    assert!((se - 0.0088).abs() < 0.002, "{se}");
    assert!(v["warnings"].is_array());
}

#[test]
fn bad_data_exits_65() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.csv");
    std::fs::write(&empty, "").unwrap();
    let args = |p: &Path| {
        let p = p.to_str().unwrap().to_string();
        eolopt(&["estimate", "--input", &p, "--rule", "decreasing", "--delta", "0.5", "--p", "0.75"])
    };
    assert_eq!(args(&empty).0, 65);
    let neg = dir.path().join("neg.csv");
    std::fs::write(&neg, "loss\n1.0\n2.0\n-0.5\n").unwrap();
    let (code, out, err) = args(&neg);
    assert_eq!(code, 65);
    assert_eq!(json(&out)["line"], 4);
    assert!(err.contains("line 4"), "{err}");
    assert_eq!(args(&dir.path().join("missing.csv")).0, 65);
}

#[test]
fn table1_single_rule_has_three_rows() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let (code, out, _) = eolopt(&["simulate", "table1", "--only", "decreasing", "--B", "1000", "--out", d]);
    assert_eq!(code, 0);
    let csv = std::fs::read_to_string(dir.path().join("table1.csv")).unwrap();
    assert_eq!(csv, out);
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("rule,N,approx_order,d_actual,d_approx,rel_diff_pct"));
    let m = json(&std::fs::read_to_string(dir.path().join("table1.manifest.json")).unwrap());
    assert_eq!(m["mc_config"], serde_json::Value::Null);
    assert_eq!(m["parameters"]["mc_config"]["b"], 1000);
}

#[test]
fn simulation_output_is_reproducible_across_threads() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let run_in = |dir: &Path, threads: &str| {
        let d = dir.to_str().unwrap();
        let (code, _, _) = eolopt(&["simulate", "insolvency", "--N", "2,5", "--B", "4000", "--seed", "11", "--threads", threads, "--out", d]);
        assert_eq!(code, 0);
        std::fs::read(dir.join("insolvency.csv")).unwrap()
    };
    assert_eq!(run_in(a.path(), "1"), run_in(b.path(), "4"));
}

#[test]
fn insolvency_ten_claims() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = eolopt(&["simulate", "insolvency", "--N", "10", "--rho", "0.2", "--p", "0.75", "--json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let rows = json(&out);
    let prob = rows[0]["prob"].as_f64().unwrap();
    assert!((prob - 0.25).abs() < 0.02, "{prob}");
}

#[test]
fn table2_small_run() {
    let dir = tempfile::tempdir().unwrap();
    let (code, out, _) = eolopt(&["simulate", "table2", "--only", "decreasing", "--N", "500", "--M", "100", "--json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let row = &json(&out)[0];
    assert_eq!(row["failures"], 0);
    assert!(row["se_diff_pct"].as_f64().unwrap().abs() < 30.0);
}

#[test]
fn analyze_equal_losses_gives_diagonal_lorenz() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_losses(dir.path(), "eq.csv", &[1.0, 1.0, 1.0]);
    let out_dir = dir.path().join("out");
    // the sweep itself fails on three points; the descriptive outputs do not depend on it
    let _ = eolopt(&["analyze", "--input", input.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    let lorenz = std::fs::read_to_string(out_dir.join("lorenz.csv")).unwrap();
    let rows: Vec<(f64, f64)> = lorenz
        .lines()
        .skip(1)
        .map(|l| {
            let (u, v) = l.split_once(',').unwrap();
            (u.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|(u, l)| (u - l).abs() < 1e-5));
}

#[test]
fn analyze_level_sweep_is_nonincreasing() {
    let dir = tempfile::tempdir().unwrap();
    let input = data("synthetic_fire.csv");
    let (code, out, _) = eolopt(&["analyze", "--input", input.to_str().unwrap(), "--sweep", "p", "--fixed-rho", "0.005", "--svg", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code, 0);
    let summary = json(&out);
    assert_eq!(summary["count"], 10_000);
    assert_eq!(summary["failed_points"], 0);
    for rule in ["decreasing", "sd", "sharpe"] {
        let csv = std::fs::read_to_string(dir.path().join(format!("curve_{rule}.csv"))).unwrap();
        let d: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
        assert_eq!(d.len(), 20);
        assert!(d.windows(2).all(|w| w[1] <= w[0]), "{rule}: {d:?}");
    }
    for f in ["density.csv", "curves.svg", "lorenz.svg", "density.svg", "summary.json", "analyze.manifest.json"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
}

#[test]
fn selfcheck_pass_and_fail() {
    let (code, out, _) = eolopt(&["selfcheck", "--json"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["passed"], true);
    let bad = data("corrupted_quantiles.csv");
    let (code, out, _) = eolopt(&["selfcheck", "--quantile-table", bad.to_str().unwrap()]);
    assert_eq!(code, 1);
    assert!(out.lines().any(|l| l.starts_with("FAIL") && l.contains("normal_quantile")), "{out}");
}
