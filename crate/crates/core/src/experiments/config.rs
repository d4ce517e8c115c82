//! TOML experiment configuration.

use serde::{Deserialize, Serialize};

use crate::bounds::BoundConfig;
use crate::dynamics::{
    bump_wells_family, cutoff_family_with_side, degenerate_double_well_family, double_well_family,
    tilted_ou_family, BumpWells, CutoffSide, GradientFamily1d, DEFAULT_CUT_POINT,
};
use crate::inference::{GridAxis, ParamGrid, Prior};
use crate::measure::MeasureConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Contraction,
    Exit,
    Anneal,
    LanResidual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    DoubleWell,
    DegenerateDoubleWell,
    BumpWells,
    TiltedOu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CutoffSpec {
    #[serde(default = "default_cut_point")]
    pub point: f64,
    #[serde(default = "default_side")]
    pub side: CutoffSide,
}

fn default_cut_point() -> f64 {
    DEFAULT_CUT_POINT
}
fn default_side() -> CutoffSide {
    CutoffSide::Below
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub amplitude: f64,
    pub bump_center: f64,
    pub bump_half_width: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        let b = BumpWells::default();
        Self { amplitude: b.amplitude, bump_center: b.bump_center, bump_half_width: b.bump_half_width }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: FamilyName,
    pub sigma: f64,
    pub theta0: Vec<f64>,
    #[serde(default)]
    pub cutoff: Option<CutoffSpec>,
    #[serde(default)]
    pub bumps: Option<BumpSpec>,
    /// Tilted OU only.
    #[serde(default)]
    pub stiffness: Option<f64>,
    #[serde(default)]
    pub center: Option<f64>,
}

impl FamilySpec {
    /// The family without any cutoff.
    pub fn full(&self) -> Result<GradientFamily1d> {
        self.full_with_sigma(self.sigma)
    }

    pub fn full_with_sigma(&self, sigma: f64) -> Result<GradientFamily1d> {
        let f = match self.name {
            FamilyName::DoubleWell => double_well_family(sigma)?,
            FamilyName::DegenerateDoubleWell => degenerate_double_well_family(sigma)?,
            FamilyName::BumpWells => {
                let b = self.bumps.unwrap_or_default();
                bump_wells_family(
                    BumpWells {
                        amplitude: b.amplitude,
                        bump_center: b.bump_center,
                        bump_half_width: b.bump_half_width,
                    },
                    sigma,
                )?
            }
            FamilyName::TiltedOu => tilted_ou_family(
                self.stiffness.unwrap_or(1.0),
                self.center.unwrap_or(0.0),
                sigma,
            )?,
        };
        if self.theta0.len() != crate::dynamics::DriftFamily::dim_param(&f) {
            return Err(Error::invalid(format!(
                "family {:?} takes {} parameter(s), theta0 has {}",
                self.name,
                crate::dynamics::DriftFamily::dim_param(&f),
                self.theta0.len()
            )));
        }
        Ok(f)
    }

    /// The family actually simulated: the cutoff when one is configured.
    pub fn build(&self) -> Result<GradientFamily1d> {
        self.build_with_sigma(self.sigma)
    }

    pub fn build_with_sigma(&self, sigma: f64) -> Result<GradientFamily1d> {
        let full = self.full_with_sigma(sigma)?;
        match self.cutoff {
            Some(c) => cutoff_family_with_side(&full, c.point, c.side, &self.theta0),
            None => Ok(full),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    #[default]
    Uniform,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorSpec {
    pub grid: Vec<GridAxis>,
    #[serde(default)]
    pub kind: PriorKind,
    #[serde(default)]
    pub mean: Option<Vec<f64>>,
    #[serde(default)]
    pub std: Option<f64>,
    #[serde(default)]
    pub hyper_mean_std: Option<f64>,
}

impl PriorSpec {
    pub fn build(&self) -> Result<Prior> {
        let grid = ParamGrid::new(self.grid.clone())?;
        let prior = match self.kind {
            PriorKind::Uniform => Prior::uniform(grid),
            PriorKind::Gaussian => {
                let mean = self.mean.clone().unwrap_or_else(|| vec![0.0; grid.dim()]);
                Prior::gaussian(grid, mean, self.std.unwrap_or(1.0))?
            }
        };
        match self.hyper_mean_std {
            Some(h) => prior.with_hyper_mean_std(h),
            None => Ok(prior),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StartKind {
    /// Start at `x0` (default: the minimum of the observed well).
    #[default]
    Fixed,
    /// Start at `x0` and discard a burn-in of 20/ĝ time units.
    Ergodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExitSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub study: StudyKind,
    pub family: FamilySpec,
    pub n_paths: usize,
    #[serde(default)]
    pub t_checkpoints: Vec<f64>,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub master_seed: u64,
    pub prior: PriorSpec,
    #[serde(default)]
    pub bounds: BoundConfig,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub start: StartKind,
    #[serde(default)]
    pub exit: Option<ExitSpec>,
    /// η values at which P[π_t(F_t) < 1 − η] is reported.
    #[serde(default = "default_eta_grid")]
    pub eta_grid: Vec<f64>,
    #[serde(default)]
    pub measure: MeasureConfig,
    /// Cap on simulated time per exit path, as a multiple of the predicted
    /// mean exit time.
    #[serde(default = "default_cap_factor")]
    pub exit_cap_factor: f64,
}

fn default_dt() -> f64 {
    crate::dynamics::DEFAULT_DT
}
fn default_eta_grid() -> Vec<f64> {
    vec![0.05, 0.1, 0.25, 0.5]
}
fn default_cap_factor() -> f64 {
    10.0
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self =
            toml::from_str(s).map_err(|e| Error::invalid(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid(format!("config serialization: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths == 0 {
            return Err(Error::invalid("n_paths must be >= 1"));
        }
        if !(self.dt > 0.0) {
            return Err(Error::invalid("dt must be positive"));
        }
        if self.t_checkpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("t_checkpoints must be strictly increasing"));
        }
        for &t in &self.t_checkpoints {
            self.steps_for(t)?;
        }
        self.bounds.validate()?;
        if self.eta_grid.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(Error::invalid("eta_grid values must lie in (0, 1)"));
        }
        if !(self.exit_cap_factor >= 1.0) {
            return Err(Error::invalid("exit_cap_factor must be >= 1"));
        }
        Ok(())
    }

    /// Step count for checkpoint `t`; `t / dt` must be an integer to
    /// relative precision 1e-9.
    pub fn steps_for(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!("checkpoint {t} is negative")));
        }
        let n = t / self.dt;
        let r = n.round();
        if (n - r).abs() > 1e-9 * r.max(1.0) {
            return Err(Error::invalid(format!("checkpoint {t} is not a multiple of dt = {}", self.dt)));
        }
        Ok(r as usize)
    }

    pub fn checkpoint_steps(&self) -> Result<Vec<usize>> {
        self.t_checkpoints.iter().map(|&t| self.steps_for(t)).collect()
    }
}
