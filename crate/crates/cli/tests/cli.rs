use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_metabayes");

fn configs() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(|rest| rest.trim().to_string()))
        .unwrap_or_else(|| panic!("no '{key}' in\n{text}"))
}

fn number(text: &str, key: &str) -> f64 {
    field(text, key).split_whitespace().next().unwrap().parse().unwrap()
}

#[test]
fn spectral_double_well_constants() {
    let cfg = configs().join("contraction_cutoff.toml");
    let o = run(&["spectral", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let s = stdout(&o);
    let gamma = number(&s, "gamma ");
    assert!((gamma / 1.389188e-21 - 1.0).abs() < 1e-3, "{gamma}");
    assert!((number(&s, "s1 ") - 2.0).abs() < 1e-6);
    assert!((number(&s, "gamma_hat") - 2.029437).abs() < 1e-5);
    // s_hat at sigma = 0.4 sits slightly below its small-noise value 0.827
    assert!((number(&s, "s1_hat") - 0.8176).abs() < 0.01);
}

#[test]
fn spectral_flags_the_degenerate_family() {
    let cfg = configs().join("contraction_degenerate.toml");
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("spectral.csv");
    let o = run(&["spectral", "--config", cfg.to_str().unwrap(), "--csv", csv.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(field(&stdout(&o), "s1 ").contains("non-identifiable"));
    let table = std::fs::read_to_string(csv).unwrap();
    assert!(table.lines().any(|l| l == "non_identifiable,1"));
}

#[test]
fn spectral_quadratic_has_no_metastability() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("ou.toml");
    std::fs::write(&cfg, "[family]\nname = \"tilted_ou\"\nsigma = 0.5\ntheta0 = [0.0]\nstiffness = 1.0\ncenter = 0.0\n").unwrap();
    let o = run(&["spectral", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = stdout(&o);
    assert_eq!(field(&s, "metastability"), "none");
    assert!((number(&s, "gamma_hat") - 1.0).abs() < 1e-9);
}

fn bound_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect()
}

#[test]
fn bounds_fig2b_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["bounds", "--figure", "fig2b", "--points-per-decade", "40", "--out", out]);
    assert!(o.status.success());
    for ext in ["csv", "svg", "json"] {
        assert!(dir.path().join(format!("fig2b.{ext}")).exists());
    }
    let rows = bound_rows(&std::fs::read_to_string(dir.path().join("fig2b.csv")).unwrap());
    let inside: Vec<_> = rows.iter().filter(|r| (1e2..=1e19).contains(&r[0])).collect();
    assert!(!inside.is_empty());
    assert!(inside.iter().all(|r| r[4] < r[3]));
}

#[test]
fn bounds_fig3_escape_is_visible() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bounds", "--figure", "fig3a", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let rows = bound_rows(&std::fs::read_to_string(dir.path().join("fig3a.csv")).unwrap());
    assert!(rows.iter().any(|r| (1e5..=1e7).contains(&r[0]) && r[5] > 0.1));
}

#[test]
fn bounds_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let empty = run(&["bounds", "--figure", "fig2a", "--t-min", "10", "--t-max", "10", "--out", out]);
    assert_eq!(empty.status.code(), Some(1));
    let unknown = run(&["bounds", "--figure", "fig9", "--out", out]);
    assert_eq!(unknown.status.code(), Some(1));
    assert_eq!(run(&["bounds"]).status.code(), Some(1));
}

#[test]
fn exit_study_out_of_reach_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("exit_sigma1.toml")).unwrap().replace("sigma = 1.0", "sigma = 0.4");
    assert!(text.contains("sigma = 0.4"));
    let cfg = dir.path().join("exit.toml");
    std::fs::write(&cfg, text).unwrap();
    let o = run(&["experiment", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("predicted mean"));
}

fn small_contraction(dir: &Path) -> std::path::PathBuf {
    let text = std::fs::read_to_string(configs().join("contraction_cutoff.toml"))
        .unwrap()
        .replace("n_paths = 100", "n_paths = 7");
    assert!(text.contains("n_paths = 7"));
    let cfg = dir.join("small.toml");
    std::fs::write(&cfg, text).unwrap();
    cfg
}

#[test]
fn experiment_outputs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_contraction(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let cfg = cfg.to_str().unwrap();
    assert!(run(&["experiment", "--config", cfg, "--out", a.to_str().unwrap()]).status.success());
    assert!(run(&["--threads", "1", "experiment", "--config", cfg, "--out", b.to_str().unwrap(), "--sequential"])
        .status
        .success());
    for name in ["summary.csv", "paths.csv", "fraction_below.csv"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name}");
    }
    let paths = std::fs::read_to_string(a.join("paths.csv")).unwrap();
    let header: Vec<&str> = paths.lines().next().unwrap().split(',').collect();
    let t_col = header.iter().position(|h| *h == "t").unwrap();
    let mut counts = std::collections::BTreeMap::new();
    for line in paths.lines().skip(1) {
        *counts.entry(line.split(',').nth(t_col).unwrap().to_string()).or_insert(0) += 1;
    }
    assert_eq!(counts.len(), 4);
    assert!(counts.values().all(|&n| n == 7));
}

#[test]
fn missing_config_is_an_io_failure() {
    let o = run(&["experiment", "--config", "/nonexistent/x.toml", "--out", "/tmp/never"]);
    assert_eq!(o.status.code(), Some(2));
}
