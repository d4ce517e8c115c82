//! Monte Carlo studies driven by an [`ExperimentConfig`].

use serde::Serialize;

use super::config::{ExperimentConfig, FamilyName, StartKind, StudyKind};
use crate::bounds::{bound_terms, contraction_radius, prior_tail};
use crate::dynamics::{
    cutoff_family_with_side, simulate, simulate_until_exit, stream_seed, CutoffSide, Domain,
    DriftFamily, GradientFamily1d, DEFAULT_CUT_POINT,
};
use crate::inference::{
    anneal, ball_mass, log_sum_exp, marginalize, posterior_at_checkpoints, sufficient_statistics,
    LanDecomposition, PosteriorGrid, Prior,
};
use crate::measure::{ergodic_measure, fisher_info, FisherInfo, MeasureConfig};
use crate::par::{try_map_indexed, ExecPolicy};
use crate::spectral::{
    bakry_emery_gamma, eyring_kramers_band, eyring_kramers_gamma, locate_critical_points,
};
use crate::{Error, Result};

/// Largest predicted mean exit time an exit study will attempt.
pub const MAX_PREDICTED_EXIT_TIME: f64 = 1e7;
/// Burn-in length for ergodic starts, in units of 1/gap.
pub const BURN_IN_GAPS: f64 = 20.0;
/// Relative tolerance for the cross-well Fisher entries of the anneal study.
pub const CROSS_WELL_TOL: f64 = 0.1;

const BURN_IN_SALT: u64 = 0x9e37_79b9_7f4a_7c15;
const PRIOR_SALT: u64 = 0xd1b5_4a32_d192_ed03;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapKind {
    BakryEmery,
    EyringKramers,
}

/// Identifiability and mixing constants of the simulated family at θ0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelConstants {
    pub label: String,
    pub sigma: f64,
    pub fisher: FisherInfo,
    pub s1: f64,
    pub gap: Option<f64>,
    pub gap_kind: Option<GapKind>,
    pub support: (Vec<f64>, Vec<f64>),
    pub truncation_ratio: f64,
    pub warnings: Vec<String>,
}

/// Fisher information, spectral gap and support box of `family` at θ0. The
/// gap is Bakry–Émery when U is convex on the support box and Eyring–Kramers
/// for a metastable two-well potential; otherwise it is left unknown.
pub fn model_constants(
    family: &GradientFamily1d,
    full: &GradientFamily1d,
    theta0: &[f64],
    measure_cfg: &MeasureConfig,
) -> Result<ModelConstants> {
    let measure = ergodic_measure(family, theta0, None, measure_cfg)?;
    let fisher = fisher_info(family, theta0, &measure)?;
    let sup = measure.support().clone();
    let (gap, gap_kind) = match bakry_emery_gamma(family, theta0, &sup.lower, &sup.upper) {
        Ok(g) => (Some(g), Some(GapKind::BakryEmery)),
        Err(Error::NonConvex { .. }) => {
            let full_measure = ergodic_measure(full, theta0, None, measure_cfg)?;
            let fs = full_measure.support();
            match locate_critical_points(full, theta0, fs.lower[0], fs.upper[0])
                .and_then(|w| eyring_kramers_gamma(&w, full.sigma()))
            {
                Ok(g) => (Some(g), Some(GapKind::EyringKramers)),
                Err(_) => (None, None),
            }
        }
        Err(e) => return Err(e),
    };
    Ok(ModelConstants {
        label: family.label(),
        sigma: family.sigma(),
        s1: fisher.s1(),
        fisher,
        gap,
        gap_kind,
        support: (sup.lower.clone(), sup.upper.clone()),
        truncation_ratio: measure.truncation_ratio(),
        warnings: measure.warnings().to_vec(),
    })
}

/// Global minimizer of U(θ, ·) over `[lo, hi]`, polished to a critical
/// point when the potential is Morse there.
pub fn potential_minimum(family: &dyn DriftFamily, theta: &[f64], lo: f64, hi: f64) -> Result<f64> {
    const N: usize = 20_001;
    let h = (hi - lo) / (N - 1) as f64;
    let mut best = (lo, f64::INFINITY);
    for k in 0..N {
        let x = lo + k as f64 * h;
        let u = family
            .potential(theta, &[x])
            .ok_or_else(|| Error::invalid("potential minimum needs a gradient family"))?;
        if u < best.1 {
            best = (x, u);
        }
    }
    if let Ok(w) = locate_critical_points(family, theta, lo, hi) {
        if let Some(m) = w
            .minima
            .iter()
            .min_by(|a, b| (a.x - best.0).abs().partial_cmp(&(b.x - best.0).abs()).unwrap())
        {
            if (m.x - best.0).abs() <= 2.0 * h {
                return Ok(m.x);
            }
        }
    }
    Ok(best.0)
}

fn start_state(cfg: &ExperimentConfig, family: &dyn DriftFamily, c: &ModelConstants) -> Result<Vec<f64>> {
    match &cfg.x0 {
        Some(x) if x.len() == family.dim_state() => Ok(x.clone()),
        Some(_) => Err(Error::invalid("x0 has the wrong dimension")),
        None => Ok(vec![potential_minimum(family, &cfg.family.theta0, c.support.0[0], c.support.1[0])?]),
    }
}

fn burn_in_steps(cfg: &ExperimentConfig, c: &ModelConstants) -> Result<usize> {
    match cfg.start {
        StartKind::Fixed => Ok(0),
        StartKind::Ergodic => {
            let gap = c.gap.ok_or_else(|| {
                Error::AssumptionViolated("ergodic start needs a known spectral gap".into())
            })?;
            Ok((BURN_IN_GAPS / gap / cfg.dt).ceil() as usize)
        }
    }
}

/// Path `i` of a study: optional burn-in from `x0` on its own stream, then
/// `n_steps` observed steps.
fn observed_path(
    family: &dyn DriftFamily,
    theta0: &[f64],
    x0: &[f64],
    dt: f64,
    burn: usize,
    n_steps: usize,
    master: u64,
    i: u64,
) -> Result<crate::dynamics::Path> {
    let start = if burn > 0 {
        let b = simulate(family, theta0, x0, dt, burn, stream_seed(master ^ BURN_IN_SALT, i), None)?;
        b.last().to_vec()
    } else {
        x0.to_vec()
    };
    let seed = stream_seed(master, i);
    if n_steps == 0 {
        return crate::dynamics::Path::from_states(dt, start.len(), start, seed);
    }
    simulate(family, theta0, &start, dt, n_steps, seed, None)
}

fn replicate_prior(prior: &Prior, master: u64, i: u64) -> Prior {
    prior.realize(stream_seed(master ^ PRIOR_SALT, i))
}

fn log_evidence(post: &PosteriorGrid, prior: &Prior) -> f64 {
    log_sum_exp(post.log_weights()) - log_sum_exp(&prior.log_weights())
}

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (m, f64::NAN);
    }
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

/// Least-squares slope of ln y against ln x over the pairs with y > 0.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

// ---------------------------------------------------------------------------
// Contraction

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionRow {
    pub t: f64,
    pub path: usize,
    pub seed: u64,
    /// π_t(B_{ε_t}(θ0)); absent for non-identifiable families.
    pub ball_mass: Option<f64>,
    /// Euclidean norm of the per-axis posterior standard deviations.
    pub posterior_std: f64,
    pub mode: Vec<f64>,
    pub log_evidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionCheckpoint {
    pub t: f64,
    pub epsilon: Option<f64>,
    /// √H(t) from the configured constants, when the gap is known.
    pub h_sqrt: Option<f64>,
    pub prior_tail: Option<f64>,
    pub mean_ball_mass: Option<f64>,
    pub mean_posterior_std: f64,
    pub se_posterior_std: f64,
    /// (η, fraction of paths with π_t(B_{ε_t}) < 1 − η).
    pub fraction_below: Vec<(f64, f64)>,
    /// Fraction of paths with π_t(B_{ε_t}) < 1 − √H(t).
    pub dominance_fraction: Option<f64>,
    /// Ensemble minimum of the log marginal likelihood.
    pub min_log_evidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub name: String,
    pub constants: ModelConstants,
    pub degenerate: bool,
    pub x0: Vec<f64>,
    pub burn_in_steps: usize,
    pub checkpoints: Vec<ContractionCheckpoint>,
    pub rows: Vec<ContractionRow>,
    /// Slope of ln(mean posterior std) against ln t.
    pub std_slope: Option<f64>,
}

pub fn run_contraction_study(cfg: &ExperimentConfig, policy: ExecPolicy) -> Result<ContractionReport> {
    cfg.validate()?;
    let family = cfg.family.build()?;
    let full = cfg.family.full()?;
    let theta0 = &cfg.family.theta0;
    let constants = model_constants(&family, &full, theta0, &cfg.measure)?;
    let degenerate = constants.fisher.non_identifiable;
    let prior = cfg.prior.build()?;
    if prior.grid().dim() != theta0.len() {
        return Err(Error::invalid("prior grid dimension differs from theta0"));
    }
    let steps = cfg.checkpoint_steps()?;
    if steps.is_empty() {
        return Err(Error::invalid("contraction study needs at least one checkpoint"));
    }
    let x0 = start_state(cfg, &family, &constants)?;
    let burn = burn_in_steps(cfg, &constants)?;
    let s1 = constants.s1;
    let radii: Vec<Option<f64>> = cfg
        .t_checkpoints
        .iter()
        .map(|&t| if degenerate || t <= 0.0 { Ok(None) } else { contraction_radius(s1, t, &cfg.bounds).map(Some) })
        .collect::<Result<_>>()?;
    let n_last = *steps.last().unwrap();

    let per_path = try_map_indexed(cfg.n_paths, policy, |i| -> Result<Vec<ContractionRow>> {
        let path = observed_path(&family, theta0, &x0, cfg.dt, burn, n_last, cfg.master_seed, i as u64)?;
        let prior_i = replicate_prior(&prior, cfg.master_seed, i as u64);
        let posts = posterior_at_checkpoints(&prior_i, &family, theta0, &path.view(), &steps)?;
        posts
            .iter()
            .zip(&cfg.t_checkpoints)
            .zip(&radii)
            .map(|((post, &t), r)| {
                let std = post.std()?;
                Ok(ContractionRow {
                    t,
                    path: i,
                    seed: path.seed(),
                    ball_mass: r.map(|r| ball_mass(post, theta0, r)).transpose()?,
                    posterior_std: std.iter().map(|s| s * s).sum::<f64>().sqrt(),
                    mode: post.mode()?,
                    log_evidence: log_evidence(post, &prior_i),
                })
            })
            .collect()
    })?;

    let bound_constant = if cfg.family.cutoff.is_some() { cfg.bounds.c_hat } else { cfg.bounds.c };
    let mut checkpoints = Vec::with_capacity(steps.len());
    for (k, &t) in cfg.t_checkpoints.iter().enumerate() {
        let rows: Vec<&ContractionRow> = per_path.iter().map(|p| &p[k]).collect();
        let n = rows.len() as f64;
        let stds: Vec<f64> = rows.iter().map(|r| r.posterior_std).collect();
        let (mean_std, se_std) = mean_and_se(&stds);
        let masses: Option<Vec<f64>> = rows.iter().map(|r| r.ball_mass).collect();
        let tail = match radii[k] {
            Some(_) => Some(prior_tail(s1, t, &cfg.bounds, &prior, theta0, 64, cfg.master_seed)?),
            None => None,
        };
        let h_sqrt = match (constants.gap, tail) {
            (Some(g), Some(tail)) if t > 0.0 => Some(bound_terms(g, s1, t, bound_constant, tail)?.sqrt()),
            _ => None,
        };
        let frac = |thr: f64| masses.as_ref().map(|m| m.iter().filter(|&&v| v < thr).count() as f64 / n);
        checkpoints.push(ContractionCheckpoint {
            t,
            epsilon: radii[k],
            h_sqrt,
            prior_tail: tail,
            mean_ball_mass: masses.as_ref().map(|m| m.iter().sum::<f64>() / n),
            mean_posterior_std: mean_std,
            se_posterior_std: se_std,
            fraction_below: cfg
                .eta_grid
                .iter()
                .filter_map(|&eta| frac(1.0 - eta).map(|f| (eta, f)))
                .collect(),
            dominance_fraction: h_sqrt.and_then(|h| frac(1.0 - h)),
            min_log_evidence: rows.iter().map(|r| r.log_evidence).fold(f64::INFINITY, f64::min),
        });
    }
    let std_slope = log_log_slope(
        &cfg.t_checkpoints,
        &checkpoints.iter().map(|c| c.mean_posterior_std).collect::<Vec<_>>(),
    );
    Ok(ContractionReport {
        name: cfg.name.clone(),
        constants,
        degenerate,
        x0,
        burn_in_steps: burn,
        checkpoints,
        rows: per_path.into_iter().flatten().collect(),
        std_slope,
    })
}

// ---------------------------------------------------------------------------
// Exit times

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExitReport {
    pub name: String,
    pub sigma: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub x0: Vec<f64>,
    pub gamma: f64,
    pub gamma_band: (f64, f64),
    pub predicted_mean: f64,
    pub cap_time: f64,
    /// Exit time per path; `None` when censored at the cap.
    pub exit_times: Vec<Option<f64>>,
    pub seeds: Vec<u64>,
    pub n_exited: usize,
    pub n_censored: usize,
    /// Mean over exited paths.
    pub mean_exit_time: f64,
    pub median_exit_time: f64,
    /// Empirical mean divided by 1/γ.
    pub ratio_to_prediction: f64,
    /// Fraction of exited paths whose exit time exceeds the empirical mean.
    pub fraction_above_mean: f64,
}

/// Exit times from a ball under the full (uncut) dynamics, compared with the
/// Eyring–Kramers mean 1/γ.
pub fn run_exit_study(cfg: &ExperimentConfig, policy: ExecPolicy) -> Result<ExitReport> {
    cfg.validate()?;
    let spec = cfg
        .exit
        .as_ref()
        .ok_or_else(|| Error::invalid("exit study needs an [exit] table"))?;
    let full = cfg.family.full()?;
    let theta0 = &cfg.family.theta0;
    let domain = Domain::new(spec.center.clone(), spec.radius)?;
    let measure = ergodic_measure(&full, theta0, None, &cfg.measure)?;
    let sup = measure.support();
    let wells = locate_critical_points(&full, theta0, sup.lower[0], sup.upper[0])?;
    let sigma = full.sigma();
    let gamma = eyring_kramers_gamma(&wells, sigma)?;
    let predicted_mean = gamma.recip();
    if !(predicted_mean <= MAX_PREDICTED_EXIT_TIME) {
        return Err(Error::InfeasibleRegime { predicted_mean, limit: MAX_PREDICTED_EXIT_TIME });
    }
    let cap_time = cfg.exit_cap_factor * predicted_mean;
    let max_steps = (cap_time / cfg.dt).ceil() as usize;
    let x0 = cfg.x0.clone().unwrap_or_else(|| spec.center.clone());
    if !domain.contains(&x0) {
        return Err(Error::invalid("x0 must lie inside the exit domain"));
    }
    let results = try_map_indexed(cfg.n_paths, policy, |i| {
        let seed = stream_seed(cfg.master_seed, i as u64);
        simulate_until_exit(&full, theta0, &x0, cfg.dt, max_steps, seed, &domain)
            .map(|s| (seed, s.map(|k| k as f64 * cfg.dt)))
    })?;
    let exit_times: Vec<Option<f64>> = results.iter().map(|r| r.1).collect();
    let mut exited: Vec<f64> = exit_times.iter().flatten().cloned().collect();
    let n_exited = exited.len();
    let mean = if n_exited > 0 { exited.iter().sum::<f64>() / n_exited as f64 } else { f64::NAN };
    exited.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = match n_exited {
        0 => f64::NAN,
        n if n % 2 == 1 => exited[n / 2],
        n => 0.5 * (exited[n / 2 - 1] + exited[n / 2]),
    };
    let above = exited.iter().filter(|&&v| v > mean).count() as f64 / n_exited.max(1) as f64;
    Ok(ExitReport {
        name: cfg.name.clone(),
        sigma,
        center: spec.center.clone(),
        radius: spec.radius,
        x0,
        gamma,
        gamma_band: eyring_kramers_band(gamma, sigma),
        predicted_mean,
        cap_time,
        seeds: results.iter().map(|r| r.0).collect(),
        n_exited,
        n_censored: cfg.n_paths - n_exited,
        mean_exit_time: mean,
        median_exit_time: median,
        ratio_to_prediction: mean * gamma,
        fraction_above_mean: above,
        exit_times,
    })
}

// ---------------------------------------------------------------------------
// Annealing over two wells

/// s̃ = max{min(s²_1..s²_k), min(s¹_{k+1}..s¹_p)} with `well1` ascending and
/// `well2` descending (both of length p).
pub fn annealed_s_tilde(well1_ascending: &[f64], well2_descending: &[f64], k: usize) -> Result<f64> {
    let p = well1_ascending.len();
    if well2_descending.len() != p || k == 0 || k >= p {
        return Err(Error::invalid("annealed s-tilde needs equal lengths and 0 < k < p"));
    }
    let a = well2_descending[..k].iter().cloned().fold(f64::INFINITY, f64::min);
    let b = well1_ascending[k..].iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(a.max(b))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealRow {
    pub t: f64,
    pub pair: usize,
    pub seeds: (u64, u64),
    pub mode: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealCheckpoint {
    pub t: f64,
    /// Fraction of pairs whose annealed mode is within two grid cells of θ0
    /// on every axis.
    pub fraction_mode_near: f64,
    pub mean_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealReport {
    pub name: String,
    pub sigma: f64,
    pub x0: (f64, f64),
    pub fisher_full: FisherInfo,
    pub fisher_well1: FisherInfo,
    pub fisher_well2: FisherInfo,
    /// |M¹₂|/|M¹₁| and |M²₁|/|M²₂|.
    pub cross_ratios: (f64, f64),
    pub s1_full: f64,
    pub s_tilde: f64,
    pub checkpoints: Vec<AnnealCheckpoint>,
    pub rows: Vec<AnnealRow>,
}

/// Two independent paths, one per well, each observed through the cutoff
/// family of its own well; well 1 informs θ₁ and well 2 informs θ₂, and the
/// two marginal posteriors are annealed into a product on the full grid.
pub fn run_anneal_study(cfg: &ExperimentConfig, policy: ExecPolicy) -> Result<AnnealReport> {
    cfg.validate()?;
    if cfg.family.name != FamilyName::BumpWells {
        return Err(Error::invalid("anneal study needs the bump_wells family"));
    }
    let full = cfg.family.full()?;
    let theta0 = &cfg.family.theta0;
    let cut = cfg.family.cutoff.map(|c| c.point.abs()).unwrap_or(DEFAULT_CUT_POINT);
    let left = cutoff_family_with_side(&full, -cut, CutoffSide::Above, theta0)?;
    let right = cutoff_family_with_side(&full, cut, CutoffSide::Below, theta0)?;

    let fisher_of = |f: &GradientFamily1d| -> Result<(FisherInfo, (Vec<f64>, Vec<f64>))> {
        let m = ergodic_measure(f, theta0, None, &cfg.measure)?;
        let s = m.support();
        Ok((fisher_info(f, theta0, &m)?, (s.lower.clone(), s.upper.clone())))
    };
    let (fisher_full, _) = fisher_of(&full)?;
    let (fisher_well1, sup1) = fisher_of(&left)?;
    let (fisher_well2, sup2) = fisher_of(&right)?;
    let m1 = &fisher_well1.mean_dparam_drift;
    let m2 = &fisher_well2.mean_dparam_drift;
    let cross_ratios = (m1[1].abs() / m1[0].abs(), m2[0].abs() / m2[1].abs());
    if !(cross_ratios.0 <= CROSS_WELL_TOL && cross_ratios.1 <= CROSS_WELL_TOL) {
        return Err(Error::AssumptionViolated(format!(
            "wells do not decompose the parameters: cross ratios {:.3e}, {:.3e}",
            cross_ratios.0, cross_ratios.1
        )));
    }
    let mut desc2 = fisher_well2.singular_values.clone();
    desc2.reverse();
    let s_tilde = annealed_s_tilde(&fisher_well1.singular_values, &desc2, 1)?;

    let prior = cfg.prior.build()?;
    if prior.grid().dim() != 2 {
        return Err(Error::invalid("anneal study needs a two-dimensional prior grid"));
    }
    let steps = cfg.checkpoint_steps()?;
    if steps.is_empty() {
        return Err(Error::invalid("anneal study needs at least one checkpoint"));
    }
    let x1 = potential_minimum(&left, theta0, sup1.0[0], sup1.1[0])?;
    let x2 = potential_minimum(&right, theta0, sup2.0[0], sup2.1[0])?;
    let n_last = *steps.last().unwrap();
    let spacing: Vec<f64> = prior.grid().axes().iter().map(|a| a.spacing()).collect();

    let per_pair = try_map_indexed(cfg.n_paths, policy, |i| -> Result<Vec<AnnealRow>> {
        let (a, b) = (2 * i as u64, 2 * i as u64 + 1);
        let p1 = observed_path(&left, theta0, &[x1], cfg.dt, 0, n_last, cfg.master_seed, a)?;
        let p2 = observed_path(&right, theta0, &[x2], cfg.dt, 0, n_last, cfg.master_seed, b)?;
        let prior_i = replicate_prior(&prior, cfg.master_seed, i as u64);
        let post1 = posterior_at_checkpoints(&prior_i, &left, theta0, &p1.view(), &steps)?;
        let post2 = posterior_at_checkpoints(&prior_i, &right, theta0, &p2.view(), &steps)?;
        post1
            .iter()
            .zip(&post2)
            .zip(&cfg.t_checkpoints)
            .map(|((q1, q2), &t)| {
                let joint = anneal(&marginalize(q1, &[0])?, &[0], &marginalize(q2, &[1])?, &[1])?;
                Ok(AnnealRow { t, pair: i, seeds: (p1.seed(), p2.seed()), mode: joint.mode()?, std: joint.std()? })
            })
            .collect()
    })?;

    let checkpoints = cfg
        .t_checkpoints
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let rows: Vec<&AnnealRow> = per_pair.iter().map(|p| &p[k]).collect();
            let n = rows.len() as f64;
            let near = rows
                .iter()
                .filter(|r| {
                    r.mode
                        .iter()
                        .zip(theta0)
                        .zip(&spacing)
                        .all(|((m, t0), h)| (m - t0).abs() <= 2.0 * h * (1.0 + 1e-9))
                })
                .count() as f64
                / n;
            let mean_std = (0..2).map(|a| rows.iter().map(|r| r.std[a]).sum::<f64>() / n).collect();
            AnnealCheckpoint { t, fraction_mode_near: near, mean_std }
        })
        .collect();
    Ok(AnnealReport {
        name: cfg.name.clone(),
        sigma: full.sigma(),
        x0: (x1, x2),
        s1_full: fisher_full.s1(),
        fisher_full,
        fisher_well1,
        fisher_well2,
        cross_ratios,
        s_tilde,
        checkpoints,
        rows: per_pair.into_iter().flatten().collect(),
    })
}

// ---------------------------------------------------------------------------
// LAN residuals

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanCheckpoint {
    pub t: f64,
    /// Ensemble mean of ‖Δ_t − Δ_∞‖².
    pub eps_delta: f64,
    pub eps_delta_se: f64,
    /// Ensemble mean of E_{π₀}|r_t(u)|.
    pub eps_r: f64,
    pub eps_r_se: f64,
    pub phi_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LanReport {
    pub name: String,
    pub constants: ModelConstants,
    pub start: StartKind,
    pub x0: Vec<f64>,
    pub burn_in_steps: usize,
    pub checkpoints: Vec<LanCheckpoint>,
    pub eps_delta_exponent: Option<f64>,
    pub eps_r_exponent: Option<f64>,
    /// E_μ[(G/M − 1)²], the large-t value of ε_Δ when d = p = 1.
    pub eps_delta_limit: Option<f64>,
}

pub fn run_lan_residual_study(cfg: &ExperimentConfig, policy: ExecPolicy) -> Result<LanReport> {
    cfg.validate()?;
    let family = cfg.family.build()?;
    let full = cfg.family.full()?;
    let theta0 = &cfg.family.theta0;
    let constants = model_constants(&family, &full, theta0, &cfg.measure)?;
    if constants.fisher.non_identifiable {
        return Err(Error::NonIdentifiable { s1: constants.s1 });
    }
    let prior = cfg.prior.build()?;
    if prior.grid().dim() != theta0.len() {
        return Err(Error::invalid("prior grid dimension differs from theta0"));
    }
    let steps = cfg.checkpoint_steps()?;
    if steps.first().is_none_or(|&s| s == 0) {
        return Err(Error::invalid("LAN study needs positive checkpoints"));
    }
    let x0 = start_state(cfg, &family, &constants)?;
    let burn = burn_in_steps(cfg, &constants)?;
    let n_last = *steps.last().unwrap();
    let p = theta0.len();

    let per_path = try_map_indexed(cfg.n_paths, policy, |i| -> Result<Vec<(f64, f64, f64)>> {
        let path = observed_path(&family, theta0, &x0, cfg.dt, burn, n_last, cfg.master_seed, i as u64)?;
        let prior_i = replicate_prior(&prior, cfg.master_seed, i as u64);
        let w = prior_i.weights()?;
        let grid = prior_i.grid();
        let stats = sufficient_statistics(&family, theta0, &path.view(), &steps)?;
        let mut h = vec![0.0; p];
        stats
            .iter()
            .map(|st| {
                let lan = LanDecomposition::from_statistics(st, &constants.fisher)?;
                let mut eps_r = 0.0;
                for (k, wk) in w.iter().enumerate() {
                    grid.node_into(k, &mut h);
                    for (a, t0) in h.iter_mut().zip(theta0) {
                        *a -= t0;
                    }
                    eps_r += wk * lan.remainder(&lan.to_local(&h)).abs();
                }
                Ok((lan.delta_gap_sq(), eps_r, lan.phi_norm()))
            })
            .collect()
    })?;

    let checkpoints: Vec<LanCheckpoint> = cfg
        .t_checkpoints
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let d: Vec<f64> = per_path.iter().map(|p| p[k].0).collect();
            let r: Vec<f64> = per_path.iter().map(|p| p[k].1).collect();
            let (eps_delta, eps_delta_se) = mean_and_se(&d);
            let (eps_r, eps_r_se) = mean_and_se(&r);
            LanCheckpoint { t, eps_delta, eps_delta_se, eps_r, eps_r_se, phi_norm: per_path[0][k].2 }
        })
        .collect();
    let ts = &cfg.t_checkpoints;
    let eps_delta_limit = if family.dim_state() == 1 && p == 1 {
        let m = constants.fisher.mean_dparam_drift[0];
        let measure = ergodic_measure(&family, theta0, None, &cfg.measure)?;
        Some(measure.expectation(|x| {
            let mut g = [0.0];
            family.dparam_drift(theta0, x, &mut g);
            (g[0] / m - 1.0).powi(2)
        }))
    } else {
        None
    };
    Ok(LanReport {
        name: cfg.name.clone(),
        constants,
        start: cfg.start,
        x0,
        burn_in_steps: burn,
        eps_delta_exponent: log_log_slope(ts, &checkpoints.iter().map(|c| c.eps_delta).collect::<Vec<_>>()),
        eps_r_exponent: log_log_slope(ts, &checkpoints.iter().map(|c| c.eps_r).collect::<Vec<_>>()),
        checkpoints,
        eps_delta_limit,
    })
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum StudyReport {
    Contraction(ContractionReport),
    Exit(ExitReport),
    Anneal(AnnealReport),
    LanResidual(LanReport),
}

pub fn run_study(cfg: &ExperimentConfig, policy: ExecPolicy) -> Result<StudyReport> {
    Ok(match cfg.study {
        StudyKind::Contraction => StudyReport::Contraction(run_contraction_study(cfg, policy)?),
        StudyKind::Exit => StudyReport::Exit(run_exit_study(cfg, policy)?),
        StudyKind::Anneal => StudyReport::Anneal(run_anneal_study(cfg, policy)?),
        StudyKind::LanResidual => StudyReport::LanResidual(run_lan_residual_study(cfg, policy)?),
    })
}
