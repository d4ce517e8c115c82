//! CSV tables and a JSON manifest for study reports.
//!
//! Floats are written as `{:.11e}`, missing values as empty fields. Nothing
//! in the output depends on wall-clock time or thread count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::studies::StudyReport;
use crate::{Error, Result};

pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.11e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(";")
}

/// A named CSV table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub file_name: String,
    pub contents: String,
}

fn table(file_name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> Table {
    let mut contents = String::from(header);
    contents.push('\n');
    for r in rows {
        contents.push_str(&r);
        contents.push('\n');
    }
    Table { file_name: file_name.into(), contents }
}

impl StudyReport {
    pub fn name(&self) -> &str {
        match self {
            StudyReport::Contraction(r) => &r.name,
            StudyReport::Exit(r) => &r.name,
            StudyReport::Anneal(r) => &r.name,
            StudyReport::LanResidual(r) => &r.name,
        }
    }

    pub fn tables(&self) -> Vec<Table> {
        match self {
            StudyReport::Contraction(r) => {
                let summary = table(
                    "summary.csv",
                    "t,epsilon,h_sqrt,prior_tail,mean_ball_mass,mean_posterior_std,se_posterior_std,dominance_fraction,min_log_evidence",
                    r.checkpoints.iter().map(|c| {
                        format!(
                            "{},{},{},{},{},{},{},{},{}",
                            fmt_f64(c.t),
                            fmt_opt(c.epsilon),
                            fmt_opt(c.h_sqrt),
                            fmt_opt(c.prior_tail),
                            fmt_opt(c.mean_ball_mass),
                            fmt_f64(c.mean_posterior_std),
                            fmt_f64(c.se_posterior_std),
                            fmt_opt(c.dominance_fraction),
                            fmt_f64(c.min_log_evidence)
                        )
                    }),
                );
                let below = table(
                    "fraction_below.csv",
                    "t,eta,fraction",
                    r.checkpoints.iter().flat_map(|c| {
                        c.fraction_below
                            .iter()
                            .map(move |(e, f)| format!("{},{},{}", fmt_f64(c.t), fmt_f64(*e), fmt_f64(*f)))
                    }),
                );
                let mut rows: Vec<_> = r.rows.iter().collect();
                rows.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap().then(a.path.cmp(&b.path)));
                let paths = table(
                    "paths.csv",
                    "t,path,seed,ball_mass,posterior_std,mode,log_evidence",
                    rows.into_iter().map(|p| {
                        format!(
                            "{},{},{},{},{},{},{}",
                            fmt_f64(p.t),
                            p.path,
                            p.seed,
                            fmt_opt(p.ball_mass),
                            fmt_f64(p.posterior_std),
                            fmt_vec(&p.mode),
                            fmt_f64(p.log_evidence)
                        )
                    }),
                );
                vec![summary, below, paths]
            }
            StudyReport::Exit(r) => {
                let summary = table(
                    "summary.csv",
                    "sigma,gamma,gamma_lower,gamma_upper,predicted_mean,cap_time,n_exited,n_censored,mean_exit_time,median_exit_time,ratio_to_prediction,fraction_above_mean",
                    [format!(
                        "{},{},{},{},{},{},{},{},{},{},{},{}",
                        fmt_f64(r.sigma),
                        fmt_f64(r.gamma),
                        fmt_f64(r.gamma_band.0),
                        fmt_f64(r.gamma_band.1),
                        fmt_f64(r.predicted_mean),
                        fmt_f64(r.cap_time),
                        r.n_exited,
                        r.n_censored,
                        fmt_f64(r.mean_exit_time),
                        fmt_f64(r.median_exit_time),
                        fmt_f64(r.ratio_to_prediction),
                        fmt_f64(r.fraction_above_mean)
                    )],
                );
                let paths = table(
                    "paths.csv",
                    "path,seed,exit_time,censored",
                    r.exit_times.iter().zip(&r.seeds).enumerate().map(|(i, (t, s))| {
                        format!("{i},{s},{},{}", fmt_opt(*t), u8::from(t.is_none()))
                    }),
                );
                vec![summary, paths]
            }
            StudyReport::Anneal(r) => {
                let summary = table(
                    "summary.csv",
                    "t,fraction_mode_near,mean_std_1,mean_std_2",
                    r.checkpoints.iter().map(|c| {
                        format!(
                            "{},{},{},{}",
                            fmt_f64(c.t),
                            fmt_f64(c.fraction_mode_near),
                            fmt_f64(c.mean_std[0]),
                            fmt_f64(c.mean_std[1])
                        )
                    }),
                );
                let fisher = table(
                    "fisher.csv",
                    "system,m_1,m_2,s_1,s_2",
                    [("full", &r.fisher_full), ("well1", &r.fisher_well1), ("well2", &r.fisher_well2)]
                        .into_iter()
                        .map(|(n, f)| {
                            format!(
                                "{n},{},{},{},{}",
                                fmt_f64(f.mean_dparam_drift[0]),
                                fmt_f64(f.mean_dparam_drift[1]),
                                fmt_f64(f.singular_values[0]),
                                fmt_f64(f.singular_values[1])
                            )
                        }),
                );
                let mut rows: Vec<_> = r.rows.iter().collect();
                rows.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap().then(a.pair.cmp(&b.pair)));
                let paths = table(
                    "pairs.csv",
                    "t,pair,seed_1,seed_2,mode_1,mode_2,std_1,std_2",
                    rows.into_iter().map(|p| {
                        format!(
                            "{},{},{},{},{},{},{},{}",
                            fmt_f64(p.t),
                            p.pair,
                            p.seeds.0,
                            p.seeds.1,
                            fmt_f64(p.mode[0]),
                            fmt_f64(p.mode[1]),
                            fmt_f64(p.std[0]),
                            fmt_f64(p.std[1])
                        )
                    }),
                );
                vec![summary, fisher, paths]
            }
            StudyReport::LanResidual(r) => vec![table(
                "summary.csv",
                "t,eps_delta,eps_delta_se,eps_r,eps_r_se,phi_norm",
                r.checkpoints.iter().map(|c| {
                    format!(
                        "{},{},{},{},{},{}",
                        fmt_f64(c.t),
                        fmt_f64(c.eps_delta),
                        fmt_f64(c.eps_delta_se),
                        fmt_f64(c.eps_r),
                        fmt_f64(c.eps_r_se),
                        fmt_f64(c.phi_norm)
                    )
                }),
            )],
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    crate_version: &'static str,
    config: &'a ExperimentConfig,
    files: Vec<&'a str>,
    report: serde_json::Value,
}

/// JSON manifest: the config, the file list and every scalar of the report
/// (per-path rows are left to the CSV files).
pub fn manifest_json(cfg: &ExperimentConfig, report: &StudyReport, tables: &[Table]) -> Result<String> {
    let mut value = serde_json::to_value(report).map_err(|e| Error::invalid(e.to_string()))?;
    if let Some(obj) = value.as_object_mut() {
        obj.remove("rows");
        obj.remove("exit_times");
        obj.remove("seeds");
    }
    let m = Manifest {
        crate_version: env!("CARGO_PKG_VERSION"),
        config: cfg,
        files: tables.iter().map(|t| t.file_name.as_str()).collect(),
        report: value,
    };
    let mut s = serde_json::to_string_pretty(&m).map_err(|e| Error::invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Writes every table plus `manifest.json` into `dir` (created if needed)
/// and returns the written paths.
pub fn write_report(dir: &Path, cfg: &ExperimentConfig, report: &StudyReport) -> Result<Vec<PathBuf>> {
    let io = |e: std::io::Error| Error::invalid(format!("writing {}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let tables = report.tables();
    let mut written = Vec::new();
    for t in &tables {
        let p = dir.join(&t.file_name);
        fs::write(&p, &t.contents).map_err(io)?;
        written.push(p);
    }
    let p = dir.join("manifest.json");
    fs::write(&p, manifest_json(cfg, report, &tables)?).map_err(io)?;
    written.push(p);
    Ok(written)
}

/// Short human-readable summary of a report.
pub fn summary_text(report: &StudyReport) -> String {
    let mut s = String::new();
    match report {
        StudyReport::Contraction(r) => {
            let _ = writeln!(s, "contraction study '{}' ({})", r.name, r.constants.label);
            let _ = writeln!(s, "s1 = {:.6e}, degenerate = {}", r.constants.s1, r.degenerate);
            for c in &r.checkpoints {
                let _ = writeln!(
                    s,
                    "t = {:>10.3}  mean std = {:.4e}  mean ball mass = {}",
                    c.t,
                    c.mean_posterior_std,
                    c.mean_ball_mass.map(|m| format!("{m:.4}")).unwrap_or_else(|| "-".into())
                );
            }
            if let Some(sl) = r.std_slope {
                let _ = writeln!(s, "log-log slope of posterior std: {sl:.3}");
            }
        }
        StudyReport::Exit(r) => {
            let _ = writeln!(s, "exit study '{}' at sigma = {}", r.name, r.sigma);
            let _ = writeln!(
                s,
                "predicted mean 1/gamma = {:.4e}, empirical mean = {:.4e} ({} exited, {} censored)",
                r.predicted_mean, r.mean_exit_time, r.n_exited, r.n_censored
            );
        }
        StudyReport::Anneal(r) => {
            let _ = writeln!(s, "anneal study '{}': s1(full) = {:.3e}, s~ = {:.4e}", r.name, r.s1_full, r.s_tilde);
            for c in &r.checkpoints {
                let _ = writeln!(s, "t = {:>10.3}  mode near theta0: {:.3}", c.t, c.fraction_mode_near);
            }
        }
        StudyReport::LanResidual(r) => {
            let _ = writeln!(s, "LAN residual study '{}' ({:?} start)", r.name, r.start);
            for c in &r.checkpoints {
                let _ = writeln!(s, "t = {:>10.3}  eps_delta = {:.4e}  eps_r = {:.4e}", c.t, c.eps_delta, c.eps_r);
            }
        }
    }
    s
}
