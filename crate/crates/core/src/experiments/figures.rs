//! Bound-curve presets for the double-well figures.
//!
//! `fig2*` use the constants of the double well at σ = 0.4. `fig3*` keep
//! those constants but replace the escape rate by λ = 3.763e-7, the value
//! behind the visibly finite metaconsistency window. The `a` and `b`
//! variants share their data and differ only in the y axis of the plot.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::output::fmt_f64;
use crate::bounds::{log_time_grid, meta_window, BoundConfig, BoundCurve, CurveInputs, TailModel};
use crate::dynamics::{cutoff_family, double_well_family, DEFAULT_CUT_POINT};
use crate::measure::{ergodic_measure, fisher_info, MeasureConfig};
use crate::spectral::SpectralSummary;
use crate::{Error, Result};

pub const FIG3_LAMBDA: f64 = 3.763e-7;
pub const DEFAULT_FIGURE_SIGMA: f64 = 0.4;
/// Noise level at which s and ŝ are evaluated by default.
pub const DEFAULT_FISHER_SIGMA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureId {
    Fig2a,
    Fig2b,
    Fig3a,
    Fig3b,
}

impl FigureId {
    pub const ALL: [FigureId; 4] = [FigureId::Fig2a, FigureId::Fig2b, FigureId::Fig3a, FigureId::Fig3b];

    pub fn log_y(self) -> bool {
        matches!(self, FigureId::Fig2b | FigureId::Fig3b)
    }

    pub fn uses_fixed_lambda(self) -> bool {
        matches!(self, FigureId::Fig3a | FigureId::Fig3b)
    }
}

impl fmt::Display for FigureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FigureId::Fig2a => "fig2a",
            FigureId::Fig2b => "fig2b",
            FigureId::Fig3a => "fig3a",
            FigureId::Fig3b => "fig3b",
        })
    }
}

impl FromStr for FigureId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        FigureId::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| Error::invalid(format!("unknown figure '{s}' (expected fig2a, fig2b, fig3a or fig3b)")))
    }
}

/// Optional replacements for the preset constants; also the schema of the
/// `bounds --config` file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FigureOverrides {
    pub sigma: Option<f64>,
    pub fisher_sigma: Option<f64>,
    pub c: Option<f64>,
    pub c_hat: Option<f64>,
    pub c_escape: Option<f64>,
    pub eta: Option<f64>,
    pub lambda_exit: Option<f64>,
    pub t_min: Option<f64>,
    pub t_max: Option<f64>,
    pub points_per_decade: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FigureSetup {
    pub id: FigureId,
    pub sigma: f64,
    pub fisher_sigma: f64,
    pub bounds: BoundConfig,
    pub inputs: CurveInputs,
    pub notes: Vec<String>,
}

pub fn figure_setup(id: FigureId, ov: &FigureOverrides, measure_cfg: &MeasureConfig) -> Result<FigureSetup> {
    let sigma = ov.sigma.unwrap_or(DEFAULT_FIGURE_SIGMA);
    let fisher_sigma = ov.fisher_sigma.unwrap_or(DEFAULT_FISHER_SIGMA);
    let defaults = BoundConfig::default();
    let bounds = BoundConfig {
        c: ov.c.unwrap_or(defaults.c),
        c_hat: ov.c_hat.unwrap_or(defaults.c_hat),
        c_escape: ov.c_escape.unwrap_or(defaults.c_escape),
        eta_threshold: ov.eta.unwrap_or(defaults.eta_threshold),
        ..defaults
    };
    bounds.validate()?;
    let (t_min, t_max) = (ov.t_min.unwrap_or(1.0), ov.t_max.unwrap_or(1e25));
    if !(t_min > 0.0 && t_max > t_min) {
        return Err(Error::invalid(format!("empty time range [{t_min}, {t_max}]")));
    }
    let times = log_time_grid(t_min, t_max, ov.points_per_decade.unwrap_or(400))?;

    let theta0 = [0.0];
    let full = double_well_family(sigma)?;
    let cutoff = cutoff_family(&full, DEFAULT_CUT_POINT, &theta0)?;
    let spec = SpectralSummary::for_double_well(&full, &cutoff, &theta0, (-3.0, 3.0))?;
    let full_f = double_well_family(fisher_sigma)?;
    let cutoff_f = cutoff_family(&full_f, DEFAULT_CUT_POINT, &theta0)?;
    let s1 = fisher_info(&full_f, &theta0, &ergodic_measure(&full_f, &theta0, None, measure_cfg)?)?.s1();
    let s1_hat = fisher_info(&cutoff_f, &theta0, &ergodic_measure(&cutoff_f, &theta0, None, measure_cfg)?)?.s1();

    let mut notes = vec![format!(
        "s and s_hat are evaluated at sigma = {fisher_sigma}; gamma and gamma_hat at sigma = {sigma}"
    )];
    let lambda_exit = match ov.lambda_exit {
        Some(l) => l,
        None if id.uses_fixed_lambda() => {
            notes.push(format!(
                "escape rate fixed at {FIG3_LAMBDA:e}; the Eyring-Kramers formula gives {:e} at sigma = 0.13, so the two are not consistent",
                eyring_at(0.13)?
            ));
            FIG3_LAMBDA
        }
        None => spec.lambda_exit,
    };
    if id.uses_fixed_lambda() || ov.lambda_exit.is_some() {
        notes.push("the spectral gap gamma is still the Eyring-Kramers value at sigma".into());
    }
    Ok(FigureSetup {
        id,
        sigma,
        fisher_sigma,
        bounds,
        inputs: CurveInputs {
            times,
            gamma: spec.gamma,
            s1,
            gamma_hat: spec.gamma_hat,
            s1_hat,
            lambda_exit,
            tail: TailModel::StandardGaussian { dim: 1 },
        },
        notes,
    })
}

fn eyring_at(sigma: f64) -> Result<f64> {
    let f = double_well_family(sigma)?;
    let w = crate::spectral::locate_critical_points(&f, &[0.0], -3.0, 3.0)?;
    crate::spectral::eyring_kramers_gamma(&w, sigma)
}

pub fn figure_curve(setup: &FigureSetup) -> Result<BoundCurve> {
    meta_window(&setup.inputs, &setup.bounds)
}

pub const BOUND_CSV_HEADER: &str = "t,epsilon,epsilon_hat,h_sqrt,h_hat_sqrt,p_escaped,meta_bound,in_window";

/// One row per time: t, ε_t, ε̂_t, H^{1/2}, Ĥ^{1/2}, P[t > τ], meta bound and
/// window membership (0/1).
pub fn bound_curve_csv(curve: &BoundCurve) -> String {
    let mut s = String::from(BOUND_CSV_HEADER);
    s.push('\n');
    for k in 0..curve.len() {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt_f64(curve.times[k]),
            fmt_f64(curve.epsilon[k]),
            fmt_f64(curve.epsilon_hat[k]),
            fmt_f64(curve.h[k].sqrt()),
            fmt_f64(curve.h_hat[k].sqrt()),
            fmt_f64(curve.p_escaped[k]),
            fmt_f64(curve.meta_bound[k]),
            u8::from(curve.in_window(k))
        ));
    }
    s
}
