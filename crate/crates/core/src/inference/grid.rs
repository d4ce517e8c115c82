//! Rectangular parameter grids, priors and grid posteriors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridAxis {
    pub lower: f64,
    pub upper: f64,
    pub n: usize,
}

impl GridAxis {
    pub fn new(lower: f64, upper: f64, n: usize) -> Result<Self> {
        if n == 0 || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::invalid("grid axis needs n >= 1 and finite bounds"));
        }
        if n == 1 && lower != upper || n > 1 && !(lower < upper) {
            return Err(Error::invalid("grid axis needs lower < upper (or a single node)"));
        }
        Ok(Self { lower, upper, n })
    }

    pub fn spacing(&self) -> f64 {
        if self.n == 1 {
            0.0
        } else {
            (self.upper - self.lower) / (self.n - 1) as f64
        }
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.upper
        } else {
            self.lower + i as f64 * self.spacing()
        }
    }

    pub fn nearest(&self, v: f64) -> usize {
        if self.n == 1 {
            return 0;
        }
        let i = ((v - self.lower) / self.spacing()).round();
        i.clamp(0.0, (self.n - 1) as f64) as usize
    }
}

/// Tensor grid over Θ ⊂ R^p; flat indices run with the last axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    axes: Vec<GridAxis>,
}

impl ParamGrid {
    pub fn new(axes: Vec<GridAxis>) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::invalid("parameter grid needs at least one axis"));
        }
        Ok(Self { axes })
    }

    pub fn uniform_1d(lower: f64, upper: f64, n: usize) -> Result<Self> {
        Self::new(vec![GridAxis::new(lower, upper, n)?])
    }

    pub fn axes(&self) -> &[GridAxis] {
        &self.axes
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, flat: usize, out: &mut [usize]) {
        let mut rem = flat;
        for (a, axis) in self.axes.iter().enumerate().rev() {
            out[a] = rem % axis.n;
            rem /= axis.n;
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.axes).fold(0, |acc, (i, a)| acc * a.n + i)
    }

    pub fn node_into(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for (a, axis) in self.axes.iter().enumerate().rev() {
            out[a] = axis.node(rem % axis.n);
            rem /= axis.n;
        }
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.node_into(flat, &mut out);
        out
    }

    /// θ strictly inside the bounds on every axis with more than one node.
    pub fn contains_strictly(&self, theta: &[f64]) -> bool {
        theta.len() == self.dim()
            && self
                .axes
                .iter()
                .zip(theta)
                .all(|(a, t)| if a.n == 1 { *t == a.lower } else { a.lower < *t && *t < a.upper })
    }

    pub fn sub_grid(&self, axes: &[usize]) -> Self {
        Self { axes: axes.iter().map(|&a| self.axes[a]).collect() }
    }
}

/// Stable log Σ exp.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

fn normalize_log(log_w: &[f64]) -> Result<Vec<f64>> {
    let m = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() || log_w.iter().any(|v| v.is_nan()) {
        return Err(Error::DegeneratePosterior);
    }
    let mut w: Vec<f64> = log_w.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = w.iter().sum();
    if !(s.is_finite() && s > 0.0) {
        return Err(Error::DegeneratePosterior);
    }
    w.iter_mut().for_each(|v| *v /= s);
    Ok(w)
}

/// Isotropic Gaussian density factor ρ₀ on the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianFactor {
    pub mean: Vec<f64>,
    pub std: f64,
}

/// Prior π₀(dθ) = ρ₀(θ) π̄(dθ) on a grid: π̄ are the base weights, ρ₀ an
/// optional Gaussian factor whose mean may be redrawn per replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prior {
    grid: ParamGrid,
    base_weights: Vec<f64>,
    factor: Option<GaussianFactor>,
    hyper_mean_std: Option<f64>,
}

impl Prior {
    pub fn uniform(grid: ParamGrid) -> Self {
        let n = grid.len();
        Self { grid, base_weights: vec![1.0 / n as f64; n], factor: None, hyper_mean_std: None }
    }

    pub fn with_base_weights(grid: ParamGrid, base_weights: Vec<f64>) -> Result<Self> {
        if base_weights.len() != grid.len() {
            return Err(Error::invalid("base weights do not match the grid size"));
        }
        if base_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("base weights must be finite and nonnegative"));
        }
        let s: f64 = base_weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("base weights sum to {s}, expected 1")));
        }
        Ok(Self { grid, base_weights, factor: None, hyper_mean_std: None })
    }

    /// Uniform base times a Gaussian factor N(mean, std² I).
    pub fn gaussian(grid: ParamGrid, mean: Vec<f64>, std: f64) -> Result<Self> {
        if mean.len() != grid.dim() || !(std > 0.0) {
            return Err(Error::invalid("Gaussian prior needs a mean of grid dimension and std > 0"));
        }
        let mut p = Self::uniform(grid);
        p.factor = Some(GaussianFactor { mean, std });
        Ok(p)
    }

    /// Random prior: every [`Prior::realize`] shifts the factor mean by
    /// N(0, h² I).
    pub fn with_hyper_mean_std(mut self, h: f64) -> Result<Self> {
        if self.factor.is_none() {
            return Err(Error::invalid("a random prior mean needs a Gaussian factor"));
        }
        if !(h > 0.0) {
            return Err(Error::invalid("hyper mean std must be positive"));
        }
        self.hyper_mean_std = Some(h);
        Ok(self)
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }
    pub fn base_weights(&self) -> &[f64] {
        &self.base_weights
    }
    pub fn factor(&self) -> Option<&GaussianFactor> {
        self.factor.as_ref()
    }
    pub fn hyper_mean_std(&self) -> Option<f64> {
        self.hyper_mean_std
    }
    pub fn is_random(&self) -> bool {
        self.hyper_mean_std.is_some()
    }

    /// Deterministic prior for one replicate. Identity for fixed priors.
    pub fn realize(&self, seed: u64) -> Prior {
        let mut out = self.clone();
        if let (Some(h), Some(f)) = (self.hyper_mean_std, out.factor.as_mut()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for m in f.mean.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *m += h * z;
            }
        }
        out.hyper_mean_std = None;
        out
    }

    /// Unnormalized log prior at each node.
    pub fn log_weights(&self) -> Vec<f64> {
        let mut theta = vec![0.0; self.grid.dim()];
        (0..self.grid.len())
            .map(|k| {
                let mut l = self.base_weights[k].ln();
                if let Some(f) = &self.factor {
                    self.grid.node_into(k, &mut theta);
                    let r2: f64 = theta.iter().zip(&f.mean).map(|(t, m)| (t - m) * (t - m)).sum();
                    l -= 0.5 * r2 / (f.std * f.std);
                }
                l
            })
            .collect()
    }

    pub fn weights(&self) -> Result<Vec<f64>> {
        normalize_log(&self.log_weights())
    }
}

/// Discrete posterior over a parameter grid, stored as unnormalized log
/// weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorGrid {
    grid: ParamGrid,
    log_weights: Vec<f64>,
    time_horizon: f64,
}

impl PosteriorGrid {
    pub fn new(grid: ParamGrid, log_weights: Vec<f64>, time_horizon: f64) -> Result<Self> {
        if log_weights.len() != grid.len() {
            return Err(Error::invalid("log weights do not match the grid size"));
        }
        Ok(Self { grid, log_weights, time_horizon })
    }

    pub fn from_prior(prior: &Prior) -> Self {
        Self { grid: prior.grid.clone(), log_weights: prior.log_weights(), time_horizon: 0.0 }
    }

    pub fn grid(&self) -> &ParamGrid {
        &self.grid
    }
    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }
    pub fn time_horizon(&self) -> f64 {
        self.time_horizon
    }

    /// Adds a constant to every log weight; normalized queries are unchanged.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.log_weights.iter_mut().for_each(|v| *v += c);
        out
    }

    pub fn weights(&self) -> Result<Vec<f64>> {
        normalize_log(&self.log_weights)
    }

    pub fn mode_index(&self) -> Result<usize> {
        let w = self.weights()?;
        let mut best = 0;
        for (k, v) in w.iter().enumerate() {
            if *v > w[best] {
                best = k;
            }
        }
        Ok(best)
    }

    pub fn mode(&self) -> Result<Vec<f64>> {
        Ok(self.grid.node(self.mode_index()?))
    }

    pub fn mean(&self) -> Result<Vec<f64>> {
        let w = self.weights()?;
        let p = self.grid.dim();
        let mut theta = vec![0.0; p];
        let mut m = vec![0.0; p];
        for (k, wk) in w.iter().enumerate() {
            self.grid.node_into(k, &mut theta);
            for a in 0..p {
                m[a] += wk * theta[a];
            }
        }
        Ok(m)
    }

    /// Per-axis marginal standard deviations.
    pub fn std(&self) -> Result<Vec<f64>> {
        let w = self.weights()?;
        let m = self.mean()?;
        let p = self.grid.dim();
        let mut theta = vec![0.0; p];
        let mut v = vec![0.0; p];
        for (k, wk) in w.iter().enumerate() {
            self.grid.node_into(k, &mut theta);
            for a in 0..p {
                v[a] += wk * (theta[a] - m[a]).powi(2);
            }
        }
        Ok(v.into_iter().map(f64::sqrt).collect())
    }
}

/// π(B_r(center)): mass of nodes within Euclidean distance `radius`,
/// boundary nodes included (relative slack 1e-12 absorbs rounding of grid
/// coordinates).
pub fn ball_mass(post: &PosteriorGrid, center: &[f64], radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::invalid("ball radius must be positive"));
    }
    if center.len() != post.grid.dim() {
        return Err(Error::invalid("ball center has wrong dimension"));
    }
    let w = post.weights()?;
    let r2 = radius * radius * (1.0 + 1e-12);
    let mut theta = vec![0.0; center.len()];
    let mut mass = 0.0;
    for (k, wk) in w.iter().enumerate() {
        post.grid.node_into(k, &mut theta);
        let d2: f64 = theta.iter().zip(center).map(|(t, c)| (t - c) * (t - c)).sum();
        if d2 <= r2 {
            mass += wk;
        }
    }
    Ok(mass.min(1.0))
}

fn check_axes(axes: &[usize], p: usize) -> Result<()> {
    if axes.is_empty() {
        return Err(Error::invalid("axis set must be nonempty"));
    }
    let mut seen = vec![false; p];
    for &a in axes {
        if a >= p || seen[a] {
            return Err(Error::invalid(format!("axis {a} is out of range or repeated")));
        }
        seen[a] = true;
    }
    Ok(())
}

/// Marginal on `keep_axes` (in the given order), summing over the rest.
pub fn marginalize(post: &PosteriorGrid, keep_axes: &[usize]) -> Result<PosteriorGrid> {
    let p = post.grid.dim();
    check_axes(keep_axes, p)?;
    let w = post.weights()?;
    let sub = post.grid.sub_grid(keep_axes);
    let mut acc = vec![0.0; sub.len()];
    let mut idx = vec![0usize; p];
    let mut sub_idx = vec![0usize; keep_axes.len()];
    for (k, wk) in w.iter().enumerate() {
        post.grid.multi_index(k, &mut idx);
        for (j, &a) in keep_axes.iter().enumerate() {
            sub_idx[j] = idx[a];
        }
        acc[sub.flat_index(&sub_idx)] += wk;
    }
    let log_weights = acc.iter().map(|v| v.ln()).collect();
    PosteriorGrid::new(sub, log_weights, post.time_horizon)
}

/// Product posterior π̃ = π¹ ⊗ π² on the full grid, where `post1` lives on
/// `axes1` and `post2` on `axes2` (a partition of the parameter axes).
pub fn anneal(
    post1: &PosteriorGrid,
    axes1: &[usize],
    post2: &PosteriorGrid,
    axes2: &[usize],
) -> Result<PosteriorGrid> {
    let p = axes1.len() + axes2.len();
    let mut all: Vec<usize> = axes1.iter().chain(axes2).cloned().collect();
    check_axes(&all, p).map_err(|_| Error::invalid("axis sets must partition the parameter axes"))?;
    if post1.grid.dim() != axes1.len() || post2.grid.dim() != axes2.len() {
        return Err(Error::invalid("factor grids do not match their axis sets"));
    }
    all.sort_unstable();
    let mut axes = vec![post1.grid.axes[0]; p];
    for (j, &a) in axes1.iter().enumerate() {
        axes[a] = post1.grid.axes[j];
    }
    for (j, &a) in axes2.iter().enumerate() {
        axes[a] = post2.grid.axes[j];
    }
    let grid = ParamGrid::new(axes)?;
    let w1 = post1.weights()?;
    let w2 = post2.weights()?;
    let mut idx = vec![0usize; p];
    let mut i1 = vec![0usize; axes1.len()];
    let mut i2 = vec![0usize; axes2.len()];
    let log_weights = (0..grid.len())
        .map(|k| {
            grid.multi_index(k, &mut idx);
            for (j, &a) in axes1.iter().enumerate() {
                i1[j] = idx[a];
            }
            for (j, &a) in axes2.iter().enumerate() {
                i2[j] = idx[a];
            }
            (w1[post1.grid.flat_index(&i1)] * w2[post2.grid.flat_index(&i2)]).ln()
        })
        .collect();
    PosteriorGrid::new(grid, log_weights, post1.time_horizon.max(post2.time_horizon))
}
