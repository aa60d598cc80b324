use std::path::PathBuf;
use std::process::{Command, Output};

fn adelim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_adelim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Non-comment lines, header first.
fn table(o: &Output) -> Vec<Vec<String>> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(t: &[Vec<String>], name: &str) -> Vec<f64> {
    let k = t[0].iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    t[1..].iter().map(|r| r[k].parse().unwrap()).collect()
}

fn value(t: &[Vec<String>], key: &str) -> String {
    t.iter().find(|r| r[0] == key).unwrap_or_else(|| panic!("no row {key}"))[1].clone()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("adelim-cli-test-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn wpg_verdicts() {
    let o = adelim(&["wpg", "1", "1", "1", "1"]);
    assert!(o.status.success());
    assert_eq!(table(&o)[1][0], "feasible");
    let o = adelim(&["wpg", "1", "0.9", "0.9", "0.7"]);
    assert_eq!(table(&o)[1][0], "infeasible");
    let o = adelim(&["wpg", "1", "0.5+0.1i", "0.5-0.1i", "-0.2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!adelim(&["wpg", "1", "1", "1"]).status.success());
}

#[test]
fn d_scan_grid_and_reference_point() {
    let o = adelim(&["qudit-d-scan", "--points", "3"]);
    assert!(o.status.success());
    let t = table(&o);
    assert_eq!(t[0], ["omega_over_kappa", "delta_over_kappa", "D", "gap_ok"]);
    assert_eq!(t.len(), 10);

    let cfg = scratch("point.toml");
    std::fs::write(
        &cfg,
        "[d_scan]\nomega_min = 0.5\nomega_max = 0.5\nomega_points = 1\ndelta_min = 0.5\ndelta_max = 0.5\ndelta_points = 1\n",
    )
    .unwrap();
    let o = adelim(&["--config", cfg.to_str().unwrap(), "qudit-d-scan"]);
    let d = column(&table(&o), "D");
    assert_eq!(d.len(), 1);
    assert!(d[0] < 0.0);
}

#[test]
fn d_scan_rejects_bad_grid() {
    let o = adelim(&["qudit-d-scan", "--points", "0"]);
    assert!(!o.status.success());
    let cfg = scratch("bad.toml");
    std::fs::write(&cfg, "[d_scan]\nomega_min = 2.0\nomega_max = 1.0\n").unwrap();
    assert!(!adelim(&["--config", cfg.to_str().unwrap(), "qudit-d-scan"]).status.success());
    std::fs::write(&cfg, "[d_scan]\nomega_pionts = 3\n").unwrap();
    assert!(!adelim(&["--config", cfg.to_str().unwrap(), "qudit-d-scan"]).status.success());
}

#[test]
fn jc_report_signs() {
    let o = adelim(&["jc-report", "--n-th", "1", "--g", "0.05", "--delta-a", "0"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let t = table(&o);
    assert!(value(&t, "gamma_phi4").parse::<f64>().unwrap() < 0.0);
    assert_eq!(value(&t, "lindblad_verdict"), "false");
    for k in ["residual_omega_b", "residual_gamma_minus", "residual_gamma_plus", "residual_gamma_phi"] {
        assert!(value(&t, k).parse::<f64>().unwrap() < 1e-6, "{k}");
    }

    let o = adelim(&["jc-report", "--n-th", "0"]);
    let t = table(&o);
    assert_eq!(value(&t, "gamma_phi4").parse::<f64>().unwrap(), 0.0);
    assert_eq!(value(&t, "lindblad_verdict"), "true");
}

#[test]
fn exact_master_columns() {
    let o = adelim(&["exact-master"]);
    assert!(o.status.success());
    let t = table(&o);
    assert_eq!(t[0], ["t_kappa", "eig1_StlS", "eig2_StlS", "min_eig_T"]);
    let ts = column(&t, "t_kappa");
    assert!(ts.windows(2).all(|w| w[1] > w[0]));
    assert!(column(&t, "min_eig_T").iter().all(|x| *x >= -1e-10));
    let (e1, e2) = (column(&t, "eig1_StlS"), column(&t, "eig2_StlS"));
    let last = ts.len() - 1;
    assert_eq!(ts[last], 20.0);
    assert!(e2[last] < 0.0);
    let at15 = ts.iter().position(|t| (t - 15.0).abs() < 1e-9).unwrap();
    assert!((e1[at15] - e1[last]).abs() < 1e-6);
    assert!((e2[at15] - e2[last]).abs() < 1e-6);
}

#[test]
fn gauge_umax_below_one_and_reproducible() {
    let cfg = scratch("umax.toml");
    std::fs::write(&cfg, "[gauge_umax]\nchi_over_kappa = [0.5, 2.0]\nsamples = 500\n").unwrap();
    let args = ["--config", cfg.to_str().unwrap(), "--seed", "11", "gauge-umax"];
    let a = adelim(&args);
    assert!(a.status.success());
    assert!(column(&table(&a), "u_max").iter().all(|u| *u < 1.0));
    assert!(stdout(&a).contains("samples = 500"));
    assert!(stdout(&a).contains("# seed: 11"));
    let b = adelim(&["--jobs", "2", "--config", cfg.to_str().unwrap(), "--seed", "11", "gauge-umax"]);
    // only the echoed jobs value may differ
    let strip = |s: String| s.lines().filter(|l| !l.contains("jobs")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(stdout(&a)), strip(stdout(&b)));
}

#[test]
fn out_file_and_svg() {
    let csv = scratch("scan.csv");
    let svg = scratch("scan.svg");
    let o = adelim(&["qudit-d-scan", "--points", "4", "--out", csv.to_str().unwrap(), "--svg", svg.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# adelim "));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 17);
    assert_eq!(std::fs::read_to_string(&svg).unwrap().matches("<rect").count(), 16);
}

#[test]
fn verify_reports_each_criterion() {
    let o = adelim(&["verify", "--only", "2,11"]);
    assert!(o.status.success());
    let s = stdout(&o);
    assert!(s.contains("PASS criterion 02"));
    assert!(s.contains("PASS criterion 11"));
    assert!(!adelim(&["verify", "--only", "13"]).status.success());
}
