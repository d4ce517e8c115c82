//! Configurable Monte Carlo studies and their CSV/JSON output.

mod config;
mod figures;
mod output;
mod studies;

pub use config::{
    BumpSpec, CutoffSpec, ExitSpec, ExperimentConfig, FamilyName, FamilySpec, PriorKind, PriorSpec,
    StartKind, StudyKind,
};
pub use figures::{
    bound_curve_csv, figure_curve, figure_setup, FigureId, FigureOverrides, FigureSetup,
    BOUND_CSV_HEADER, DEFAULT_FIGURE_SIGMA, DEFAULT_FISHER_SIGMA, FIG3_LAMBDA,
};
pub use output::{fmt_f64, fmt_opt, manifest_json, summary_text, write_report, Table};
pub use studies::{
    annealed_s_tilde, log_log_slope, model_constants, potential_minimum, run_anneal_study,
    run_contraction_study, run_exit_study, run_lan_residual_study, run_study, AnnealCheckpoint,
    AnnealReport, AnnealRow, ContractionCheckpoint, ContractionReport, ContractionRow, ExitReport,
    GapKind, LanCheckpoint, LanReport, ModelConstants, StudyReport, BURN_IN_GAPS, CROSS_WELL_TOL,
    MAX_PREDICTED_EXIT_TIME,
};
