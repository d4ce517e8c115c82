use metabayes::experiments::{
    run_contraction_study, run_lan_residual_study, run_study, write_report, ExperimentConfig, StartKind,
    StudyReport,
};
use metabayes::par::ExecPolicy;

const CONTRACTION: &str = include_str!("../../../configs/contraction_cutoff.toml");
const DEGENERATE: &str = include_str!("../../../configs/contraction_degenerate.toml");

fn lan_config(n_paths: usize, start: &str) -> ExperimentConfig {
    let body = format!(
        "name = \"lan\"\nstudy = \"lan_residual\"\nn_paths = {n_paths}\nt_checkpoints = [12.5, 25.0, 50.0, 100.0]\n\
         master_seed = 77\nstart = \"{start}\"\n\
         [family]\nname = \"double_well\"\nsigma = 0.4\ntheta0 = [0.0]\ncutoff = {{}}\n\
         [prior]\ngrid = [{{ lower = -1.0, upper = 1.0, n = 41 }}]\n"
    );
    ExperimentConfig::from_toml_str(&body).unwrap()
}

#[test]
fn cutoff_posterior_std_shrinks_like_root_t() {
    let cfg = ExperimentConfig::from_toml_str(CONTRACTION).unwrap();
    let r = run_contraction_study(&cfg, ExecPolicy::Parallel).unwrap();
    let first = r.checkpoints.first().unwrap().mean_posterior_std;
    let last = r.checkpoints.last().unwrap().mean_posterior_std;
    assert!(first / last >= 2.5, "ratio {}", first / last);
    assert_eq!(r.rows.len(), cfg.n_paths * cfg.t_checkpoints.len());
}

#[test]
fn degenerate_family_still_contracts_inside_one_well() {
    // s1 = 0 for the symmetric measure, but a path started in one well only
    // sees that well, where the drift derivative has a nonzero mean.
    let cfg = ExperimentConfig::from_toml_str(DEGENERATE).unwrap();
    let r = run_contraction_study(&cfg, ExecPolicy::Parallel).unwrap();
    assert!(r.degenerate);
    assert!(r.checkpoints.iter().all(|c| c.epsilon.is_none()));
    let first = r.checkpoints.first().unwrap().mean_posterior_std;
    let last = r.checkpoints.last().unwrap().mean_posterior_std;
    assert!(last / first < 0.5);
}

#[test]
fn zero_checkpoint_reports_the_prior() {
    let mut cfg = ExperimentConfig::from_toml_str(CONTRACTION).unwrap();
    cfg.n_paths = 1;
    cfg.t_checkpoints = vec![0.0];
    let r = run_contraction_study(&cfg, ExecPolicy::Sequential).unwrap();
    let std = r.checkpoints[0].mean_posterior_std;
    // uniform on 201 nodes of [-1, 1]
    let expected = ((0..201).map(|i| (-1.0 + 0.01 * i as f64).powi(2)).sum::<f64>() / 201.0).sqrt();
    assert!((std - expected).abs() < 1e-12);
}

#[test]
fn reports_do_not_depend_on_the_schedule() {
    let mut cfg = ExperimentConfig::from_toml_str(CONTRACTION).unwrap();
    cfg.n_paths = 12;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for (dir, policy) in dirs.iter().zip([ExecPolicy::Sequential, ExecPolicy::Parallel]) {
        let report = run_study(&cfg, policy).unwrap();
        write_report(dir.path(), &cfg, &report).unwrap();
    }
    for name in ["summary.csv", "fraction_below.csv", "paths.csv", "manifest.json"] {
        let a = std::fs::read(dirs[0].path().join(name)).unwrap();
        let b = std::fs::read(dirs[1].path().join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
}

#[test]
fn eps_delta_settles_at_its_stationary_value() {
    let r = run_lan_residual_study(&lan_config(200, "fixed"), ExecPolicy::Parallel).unwrap();
    let limit = r.eps_delta_limit.unwrap();
    for c in &r.checkpoints {
        assert!(c.eps_delta >= 0.0 && c.eps_r >= 0.0);
    }
    let last = r.checkpoints.last().unwrap();
    assert!((last.eps_delta - limit).abs() <= 4.0 * last.eps_delta_se + 0.1 * limit);
}

#[test]
fn ergodic_start_agrees_with_a_start_at_the_minimum() {
    let fixed = run_lan_residual_study(&lan_config(400, "fixed"), ExecPolicy::Parallel).unwrap();
    let ergodic = run_lan_residual_study(&lan_config(400, "ergodic"), ExecPolicy::Parallel).unwrap();
    assert_eq!(ergodic.start, StartKind::Ergodic);
    assert!(ergodic.burn_in_steps > 0);
    let (a, b) = (&fixed.checkpoints[0], &ergodic.checkpoints[0]);
    assert!(b.eps_delta <= a.eps_delta + 2.0 * (a.eps_delta_se + b.eps_delta_se));
}

#[test]
fn study_report_round_trips_through_json() {
    let mut cfg = ExperimentConfig::from_toml_str(CONTRACTION).unwrap();
    cfg.n_paths = 3;
    let r = run_study(&cfg, ExecPolicy::Sequential).unwrap();
    let v = serde_json::to_value(&r).unwrap();
    assert_eq!(v["study"], "contraction");
    assert!(matches!(r, StudyReport::Contraction(_)));
}
