//! Bound curves H(t) (full system) and Ĥ(t) (convexified system), the
//! contraction radius ε_t, prior tails, and the metaconsistency window.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use statrs::function::erf::erfc;

use crate::inference::{PosteriorGrid, Prior};
use crate::spectral::{escaped_probability, SpectralSummary};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundConfig {
    pub alpha: f64,
    pub delta: f64,
    /// Constant of H(t).
    #[serde(rename = "C")]
    pub c: f64,
    /// Constant of Ĥ(t).
    #[serde(rename = "C_hat")]
    pub c_hat: f64,
    /// c in the survival model c e^{−λt}.
    pub c_escape: f64,
    pub eta_threshold: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self { alpha: 0.5, delta: 1.0, c: 1.0, c_hat: 1.0, c_escape: 1.0, eta_threshold: 0.5 }
    }
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.delta > 0.0) || !(self.c > 0.0) || !(self.c_hat > 0.0) {
            return Err(Error::invalid("delta, C and C_hat must be positive"));
        }
        if !(self.c_escape > 0.0 && self.c_escape <= 1.1) {
            return Err(Error::invalid("c_escape must lie in (0, 1.1]"));
        }
        if !(self.eta_threshold > 0.0 && self.eta_threshold < 1.0) {
            return Err(Error::invalid("eta_threshold must lie in (0, 1)"));
        }
        Ok(())
    }
}

/// ε_t = δ s₁^{−α} t^{−α/2}.
pub fn contraction_radius(s1: f64, t: f64, cfg: &BoundConfig) -> Result<f64> {
    cfg.validate()?;
    if !(s1 > 0.0) {
        return Err(Error::NonIdentifiable { s1 });
    }
    if !(t > 0.0) {
        return Err(Error::invalid("time must be positive"));
    }
    Ok(cfg.delta * s1.powf(-cfg.alpha) * t.powf(-0.5 * cfg.alpha))
}

/// Radius of U_t = t^{1/2} s₁ B_{ε_t}(0) in local coordinates,
/// δ s₁^{1−α} t^{(1−α)/2}.
pub fn local_radius(s1: f64, t: f64, cfg: &BoundConfig) -> Result<f64> {
    Ok(t.sqrt() * s1 * contraction_radius(s1, t, cfg)?)
}

/// Prior families for which E[π₀(U_tᶜ)] is available in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TailModel {
    /// Tail ignored (taken as 0).
    Zero,
    /// Standard Gaussian in `dim` dimensions centred at θ0.
    StandardGaussian { dim: usize },
    /// N(m, 1) with a random mean m ~ N(θ0, hyper_std²) (one dimension).
    RandomGaussian { hyper_std: f64 },
    /// Uniform on [θ0 − below, θ0 + above].
    UniformInterval { below: f64, above: f64 },
}

impl TailModel {
    pub fn evaluate(&self, s1: f64, t: f64, cfg: &BoundConfig) -> Result<f64> {
        let r = local_radius(s1, t, cfg)?;
        Ok(match *self {
            TailModel::Zero => 0.0,
            TailModel::StandardGaussian { dim: 1 } => erfc(r / std::f64::consts::SQRT_2),
            TailModel::StandardGaussian { dim } => {
                if dim == 0 {
                    return Err(Error::invalid("prior dimension must be >= 1"));
                }
                let chi2 = ChiSquared::new(dim as f64).map_err(|e| Error::invalid(e.to_string()))?;
                chi2.sf(r * r)
            }
            TailModel::RandomGaussian { hyper_std } => {
                if !(hyper_std >= 0.0) {
                    return Err(Error::invalid("hyper_std must be nonnegative"));
                }
                // marginally θ − θ0 ~ N(0, 1 + τ²)
                erfc(r / (2.0 * (1.0 + hyper_std * hyper_std)).sqrt())
            }
            TailModel::UniformInterval { below, above } => {
                if !(below > 0.0 && above > 0.0) {
                    return Err(Error::invalid("uniform prior must contain θ0 strictly"));
                }
                ((below - r).max(0.0) + (above - r).max(0.0)) / (below + above)
            }
        })
    }

    /// First time after which the tail is exactly zero, for compactly
    /// supported priors.
    pub fn vanishing_time(&self, s1: f64, cfg: &BoundConfig) -> Option<f64> {
        match *self {
            TailModel::Zero => Some(0.0),
            TailModel::UniformInterval { below, above } => {
                uniform_tail_vanishing_time(s1, cfg, below.max(above)).ok()
            }
            _ => None,
        }
    }
}

/// Solves δ s^{1−α} t^{(1−α)/2} = `max_distance` for t.
pub fn uniform_tail_vanishing_time(s1: f64, cfg: &BoundConfig, max_distance: f64) -> Result<f64> {
    if !(s1 > 0.0) {
        return Err(Error::NonIdentifiable { s1 });
    }
    let e = 1.0 - cfg.alpha;
    Ok((max_distance / (cfg.delta * s1.powf(e))).powf(2.0 / e))
}

/// E[π₀(U_tᶜ)] for a grid prior: weight of nodes farther than the U_t
/// radius from θ0. Random priors are averaged over `draws` realizations
/// seeded by `seed`.
pub fn prior_tail(
    s1: f64,
    t: f64,
    cfg: &BoundConfig,
    prior: &Prior,
    theta0: &[f64],
    draws: usize,
    seed: u64,
) -> Result<f64> {
    let r = local_radius(s1, t, cfg)?;
    if theta0.len() != prior.grid().dim() {
        return Err(Error::invalid("theta0 has wrong dimension"));
    }
    let r2 = r * r * (1.0 + 1e-12);
    let tail_of = |p: &Prior| -> Result<f64> {
        let w = PosteriorGrid::from_prior(p).weights()?;
        let grid = p.grid();
        let mut theta = vec![0.0; grid.dim()];
        let mut outside = 0.0;
        for (k, wk) in w.iter().enumerate() {
            grid.node_into(k, &mut theta);
            let d2: f64 = theta.iter().zip(theta0).map(|(a, b)| (a - b) * (a - b)).sum();
            if d2 > r2 {
                outside += wk;
            }
        }
        Ok(outside.min(1.0))
    };
    if !prior.is_random() {
        return tail_of(prior);
    }
    if draws == 0 {
        return Err(Error::invalid("random prior tail needs at least one draw"));
    }
    let mut acc = 0.0;
    for i in 0..draws {
        acc += tail_of(&prior.realize(crate::dynamics::stream_seed(seed, i as u64)))?;
    }
    Ok(acc / draws as f64)
}

/// C (γ^{−1/2} t^{−1/2} + γ^{−1} t^{−1} + s^{−4} t^{−1/2} + s^{−3} t^{−1/2} + tail).
pub fn bound_terms(gamma: f64, s1: f64, t: f64, constant: f64, tail: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::invalid(format!("spectral gap must be positive, got {gamma}")));
    }
    if !(s1 > 0.0) {
        return Err(Error::NonIdentifiable { s1 });
    }
    if !(t > 0.0) {
        return Err(Error::invalid("time must be positive"));
    }
    let rt = t.sqrt().recip();
    Ok(constant
        * (gamma.sqrt().recip() * rt
            + (gamma * t).recip()
            + s1.powi(-4) * rt
            + s1.powi(-3) * rt
            + tail))
}

/// H(t) for the full system.
pub fn bound_h(spec: &SpectralSummary, s1: f64, t: f64, cfg: &BoundConfig, tail: f64) -> Result<f64> {
    bound_terms(spec.gamma, s1, t, cfg.c, tail)
}

/// Ĥ(t) for the convexified system.
pub fn bound_h_hat(
    spec: &SpectralSummary,
    s1_hat: f64,
    t: f64,
    cfg: &BoundConfig,
    tail: f64,
) -> Result<f64> {
    bound_terms(spec.gamma_hat, s1_hat, t, cfg.c_hat, tail)
}

/// Constants feeding one bound curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveInputs {
    pub times: Vec<f64>,
    pub gamma: f64,
    pub s1: f64,
    pub gamma_hat: f64,
    pub s1_hat: f64,
    pub lambda_exit: f64,
    pub tail: TailModel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub times: Vec<f64>,
    pub epsilon: Vec<f64>,
    pub epsilon_hat: Vec<f64>,
    pub h: Vec<f64>,
    pub h_hat: Vec<f64>,
    pub p_escaped: Vec<f64>,
    /// Ĥ^{1/2} + P[t > τ].
    pub meta_bound: Vec<f64>,
    /// Index range [first, last] of the window on the time grid.
    pub window_index: Option<(usize, usize)>,
}

impl BoundCurve {
    pub fn window(&self) -> Option<(f64, f64)> {
        self.window_index.map(|(a, b)| (self.times[a], self.times[b]))
    }

    pub fn in_window(&self, k: usize) -> bool {
        self.window_index.is_some_and(|(a, b)| a <= k && k <= b)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Longest run of consecutive indices with `ok[k]` (first one on ties).
fn longest_run(ok: &[bool]) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for k in 0..=ok.len() {
        let on = k < ok.len() && ok[k];
        match (on, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                let len = k - s;
                if best.is_none_or(|(a, b)| len > b - a + 1) {
                    best = Some((s, k - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    best
}

/// Fills a [`BoundCurve`] and locates the window where
/// Ĥ(t)^{1/2} + (1 − c e^{−λt}) ≤ η.
pub fn meta_window(inputs: &CurveInputs, cfg: &BoundConfig) -> Result<BoundCurve> {
    cfg.validate()?;
    let times = &inputs.times;
    if times.is_empty() {
        return Err(Error::invalid("time grid is empty"));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) || !(times[0] > 0.0) {
        return Err(Error::invalid("time grid must be positive and strictly increasing"));
    }
    let n = times.len();
    let mut curve = BoundCurve {
        times: times.clone(),
        epsilon: Vec::with_capacity(n),
        epsilon_hat: Vec::with_capacity(n),
        h: Vec::with_capacity(n),
        h_hat: Vec::with_capacity(n),
        p_escaped: Vec::with_capacity(n),
        meta_bound: Vec::with_capacity(n),
        window_index: None,
    };
    for &t in times {
        let tail = inputs.tail.evaluate(inputs.s1, t, cfg)?;
        let tail_hat = inputs.tail.evaluate(inputs.s1_hat, t, cfg)?;
        let h = bound_terms(inputs.gamma, inputs.s1, t, cfg.c, tail)?;
        let h_hat = bound_terms(inputs.gamma_hat, inputs.s1_hat, t, cfg.c_hat, tail_hat)?;
        let esc = escaped_probability(inputs.lambda_exit, cfg.c_escape, t)?;
        curve.epsilon.push(contraction_radius(inputs.s1, t, cfg)?);
        curve.epsilon_hat.push(contraction_radius(inputs.s1_hat, t, cfg)?);
        curve.h.push(h);
        curve.h_hat.push(h_hat);
        curve.p_escaped.push(esc);
        curve.meta_bound.push(h_hat.sqrt() + esc);
    }
    let ok: Vec<bool> = curve.meta_bound.iter().map(|m| *m <= cfg.eta_threshold).collect();
    curve.window_index = longest_run(&ok);
    Ok(curve)
}

/// `points_per_decade` logarithmically spaced times on [lo, hi], endpoints
/// included.
pub fn log_time_grid(lo: f64, hi: f64, points_per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo) || points_per_decade == 0 {
        return Err(Error::invalid("log grid needs 0 < lo < hi and at least one point per decade"));
    }
    let (a, b) = (lo.log10(), hi.log10());
    let n = ((b - a) * points_per_decade as f64).ceil() as usize + 1;
    Ok((0..n)
        .map(|k| {
            if k + 1 == n {
                hi
            } else {
                10f64.powf(a + (b - a) * k as f64 / (n - 1) as f64)
            }
        })
        .collect())
}
