//! Ergodic densities μ_θ ∝ exp(−κ U_θ / σ²) by tensor Gauss–Legendre
//! quadrature (d ≤ 2), their moments, Laplace approximations and the Fisher
//! information built from E_μ[∂_θ V].

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::DriftFamily;
use crate::quadrature::CompositeRule;
use crate::{Error, Result};

/// Density prefactor κ consistent with the generator (diffusion σ²/2).
pub const GENERATOR_EXPONENT: f64 = 2.0;
/// Log-density drop from the peak required at the edge of an automatic box.
pub const BOX_LOG_DROP: f64 = 60.0;
/// Boundary/peak density ratio above which a box counts as truncating.
pub const TRUNCATION_RATIO: f64 = 1e-10;
pub const IDENTIFIABILITY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MeasureConfig {
    /// κ in exp(−κU/σ²). 2 matches the generator; 1 is the alternative
    /// normalization e^{−U/σ²}.
    pub exponent: f64,
    pub n_nodes: usize,
    /// Promote truncation warnings to errors.
    pub strict: bool,
}

impl Default for MeasureConfig {
    fn default() -> Self {
        Self { exponent: GENERATOR_EXPONENT, n_nodes: 2048, strict: false }
    }
}

/// Axis-aligned integration box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SupportBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::invalid("box bounds must be non-empty and of equal length"));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l < u) || !l.is_finite() || !u.is_finite()) {
            return Err(Error::invalid("box needs finite lower < upper on every axis"));
        }
        Ok(Self { lower, upper })
    }

    pub fn interval(lower: f64, upper: f64) -> Result<Self> {
        Self::new(vec![lower], vec![upper])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Box grown by `factor` of its width on every axis (split evenly).
    pub fn enlarged(&self, factor: f64) -> Self {
        let (lower, upper) = self
            .lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| {
                let pad = 0.5 * factor * (u - l);
                (l - pad, u + pad)
            })
            .unzip();
        Self { lower, upper }
    }
}

/// A normalized ergodic measure on a box. Borrows its family so the density
/// stays callable.
#[derive(Debug, Clone)]
pub struct ErgodicMeasure<'a> {
    family: &'a dyn DriftFamily,
    theta: Vec<f64>,
    support: SupportBox,
    exponent: f64,
    /// Per-axis quadrature nodes.
    axis_nodes: Vec<Vec<f64>>,
    /// Normalized probability mass carried by each tensor node (last axis
    /// fastest).
    masses: Vec<f64>,
    /// log of the normalization ∫ exp(−κU/σ²) over the box.
    log_z: f64,
    truncation_ratio: f64,
    warnings: Vec<String>,
}

impl<'a> ErgodicMeasure<'a> {
    pub fn family_label(&self) -> String {
        self.family.label()
    }
    pub fn theta(&self) -> &[f64] {
        &self.theta
    }
    pub fn support(&self) -> &SupportBox {
        &self.support
    }
    pub fn exponent(&self) -> f64 {
        self.exponent
    }
    pub fn log_normalization(&self) -> f64 {
        self.log_z
    }
    /// May overflow to infinity for small σ; prefer [`Self::log_normalization`].
    pub fn normalization(&self) -> f64 {
        self.log_z.exp()
    }
    pub fn truncation_ratio(&self) -> f64 {
        self.truncation_ratio
    }
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }
    pub fn n_nodes(&self) -> usize {
        self.masses.len()
    }

    pub fn log_density_unnormalized(&self, x: &[f64]) -> f64 {
        let u = self.family.potential(&self.theta, x).unwrap_or(f64::NAN);
        let s = self.family.sigma();
        -self.exponent * u / (s * s)
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        self.log_density_unnormalized(x) - self.log_z
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        self.log_density(x).exp()
    }

    fn node(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for axis in (0..self.axis_nodes.len()).rev() {
            let n = self.axis_nodes[axis].len();
            out[axis] = self.axis_nodes[axis][rem % n];
            rem /= n;
        }
    }

    /// E_μ[g(ξ)].
    pub fn expectation<F: Fn(&[f64]) -> f64>(&self, g: F) -> f64 {
        let mut x = vec![0.0; self.axis_nodes.len()];
        let mut acc = 0.0;
        for (k, m) in self.masses.iter().enumerate() {
            if *m == 0.0 {
                continue;
            }
            self.node(k, &mut x);
            acc += m * g(&x);
        }
        acc
    }

    /// E_μ of a vector-valued integrand writing `len` components.
    pub fn expectation_vec<F: Fn(&[f64], &mut [f64])>(&self, len: usize, g: F) -> Vec<f64> {
        let mut x = vec![0.0; self.axis_nodes.len()];
        let mut buf = vec![0.0; len];
        let mut acc = vec![0.0; len];
        for (k, m) in self.masses.iter().enumerate() {
            if *m == 0.0 {
                continue;
            }
            self.node(k, &mut x);
            g(&x, &mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += m * b;
            }
        }
        acc
    }

    /// Total normalized mass (1 up to rounding).
    pub fn total_mass(&self) -> f64 {
        self.masses.iter().sum()
    }
}

fn tensor_points(boxed: &SupportBox, per_axis: usize) -> Vec<Vec<f64>> {
    let d = boxed.dim();
    let total = per_axis.pow(d as u32);
    let mut pts = Vec::with_capacity(total);
    for k in 0..total {
        let mut rem = k;
        let mut x = vec![0.0; d];
        for axis in (0..d).rev() {
            let i = rem % per_axis;
            rem /= per_axis;
            let (l, u) = (boxed.lower[axis], boxed.upper[axis]);
            x[axis] = l + (u - l) * i as f64 / (per_axis - 1) as f64;
        }
        pts.push(x);
    }
    pts
}

/// Box on which the log-density stays within [`BOX_LOG_DROP`] of its peak,
/// padded by 10% per side. Found by scanning a window that doubles until
/// the retained region no longer touches its edge.
pub fn auto_box(family: &dyn DriftFamily, theta: &[f64], exponent: f64) -> Result<SupportBox> {
    let d = family.dim_state();
    let sigma = family.sigma();
    if !(sigma > 0.0) {
        return Err(Error::invalid("ergodic measure needs sigma > 0"));
    }
    let beta = exponent / (sigma * sigma);
    let per_axis = if d == 1 { 40_001 } else { 801 };
    let mut half = 8.0;
    for _ in 0..12 {
        let window = SupportBox::new(vec![-half; d], vec![half; d])?;
        let pts = tensor_points(&window, per_axis);
        let logs: Vec<f64> = pts
            .iter()
            .map(|x| -beta * family.potential(theta, x).unwrap_or(f64::NAN))
            .collect();
        if logs.iter().any(|v| v.is_nan()) {
            return Err(Error::AssumptionViolated(
                "potential undefined on the search window".into(),
            ));
        }
        let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        for (x, l) in pts.iter().zip(&logs) {
            if peak - l < BOX_LOG_DROP {
                for a in 0..d {
                    lo[a] = lo[a].min(x[a]);
                    hi[a] = hi[a].max(x[a]);
                }
            }
        }
        let step = 2.0 * half / (per_axis - 1) as f64;
        let touches = (0..d).any(|a| lo[a] <= -half + step || hi[a] >= half - step);
        if touches {
            half *= 2.0;
            continue;
        }
        for a in 0..d {
            let pad = 0.1 * (hi[a] - lo[a]) + 2.0 * step;
            lo[a] -= pad;
            hi[a] += pad;
        }
        return SupportBox::new(lo, hi);
    }
    Err(Error::AssumptionViolated("density does not decay: no finite support box found".into()))
}

/// Normalized ergodic measure of a gradient family at `theta`. With
/// `support = None` the box is chosen by [`auto_box`].
pub fn ergodic_measure<'a>(
    family: &'a dyn DriftFamily,
    theta: &[f64],
    support: Option<&SupportBox>,
    cfg: &MeasureConfig,
) -> Result<ErgodicMeasure<'a>> {
    let d = family.dim_state();
    if !family.is_gradient() {
        return Err(Error::invalid("ergodic measure requires a gradient family"));
    }
    if d > 2 {
        return Err(Error::invalid(format!(
            "quadrature supports d <= 2, got d = {d}; supply Monte Carlo moments instead"
        )));
    }
    if theta.len() != family.dim_param() {
        return Err(Error::invalid("parameter has wrong dimension"));
    }
    if !(cfg.exponent > 0.0) {
        return Err(Error::invalid("density exponent must be positive"));
    }
    let sigma = family.sigma();
    if !(sigma > 0.0) {
        return Err(Error::invalid("ergodic measure needs sigma > 0"));
    }
    let support = match support {
        Some(b) => {
            if b.dim() != d {
                return Err(Error::invalid("box dimension does not match state dimension"));
            }
            b.clone()
        }
        None => auto_box(family, theta, cfg.exponent)?,
    };
    let rule = CompositeRule::with_total_nodes(cfg.n_nodes)?;
    let mut axis_nodes = Vec::with_capacity(d);
    let mut axis_weights = Vec::with_capacity(d);
    for a in 0..d {
        let (x, w) = rule.nodes_weights(support.lower[a], support.upper[a]);
        axis_nodes.push(x);
        axis_weights.push(w);
    }
    let n = rule.total_nodes();
    let total = n.pow(d as u32);
    let beta = cfg.exponent / (sigma * sigma);
    let mut x = vec![0.0; d];
    let mut logs = Vec::with_capacity(total);
    let mut log_w = Vec::with_capacity(total);
    for k in 0..total {
        let mut rem = k;
        let mut w = 1.0;
        for a in (0..d).rev() {
            let i = rem % n;
            rem /= n;
            x[a] = axis_nodes[a][i];
            w *= axis_weights[a][i];
        }
        let u = family.potential(theta, &x).unwrap_or(f64::NAN);
        if !u.is_finite() {
            return Err(Error::AssumptionViolated(format!("potential not finite at {x:?}")));
        }
        logs.push(-beta * u);
        log_w.push(w.ln());
    }
    let peak = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut masses: Vec<f64> = logs.iter().zip(&log_w).map(|(l, w)| (l - peak + w).exp()).collect();
    let z_shifted: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= z_shifted);
    let log_z = peak + z_shifted.ln();

    // Density on the box boundary relative to the peak.
    let mut edge_log = f64::NEG_INFINITY;
    let probe = 257;
    for a in 0..d {
        for side in [support.lower[a], support.upper[a]] {
            let face_pts = if d == 1 {
                vec![vec![side]]
            } else {
                let o = 1 - a;
                (0..probe)
                    .map(|i| {
                        let mut p = vec![0.0; 2];
                        p[a] = side;
                        p[o] = support.lower[o]
                            + (support.upper[o] - support.lower[o]) * i as f64 / (probe - 1) as f64;
                        p
                    })
                    .collect()
            };
            for p in face_pts {
                let u = family.potential(theta, &p).unwrap_or(f64::NAN);
                edge_log = edge_log.max(-beta * u);
            }
        }
    }
    let grid_peak = peak.max(
        tensor_points(&support, if d == 1 { 4001 } else { 201 })
            .iter()
            .map(|p| -beta * family.potential(theta, p).unwrap_or(f64::NAN))
            .fold(f64::NEG_INFINITY, f64::max),
    );
    let truncation_ratio = (edge_log - grid_peak).exp();
    let mut warnings = Vec::new();
    if truncation_ratio > TRUNCATION_RATIO {
        if cfg.strict {
            return Err(Error::Truncation { ratio: truncation_ratio });
        }
        warnings.push(format!(
            "integration box truncates the density (boundary/peak = {truncation_ratio:e})"
        ));
    }
    Ok(ErgodicMeasure {
        family,
        theta: theta.to_vec(),
        support,
        exponent: cfg.exponent,
        axis_nodes,
        masses,
        log_z,
        truncation_ratio,
        warnings,
    })
}

/// Fisher data derived from M = E_μ[∂_θ V_{θ0}(ξ)] (d × p).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherInfo {
    pub dim_state: usize,
    pub dim_param: usize,
    pub sigma: f64,
    /// Row-major d × p.
    pub mean_dparam_drift: Vec<f64>,
    /// Ascending, padded with zeros to length p.
    pub singular_values: Vec<f64>,
    /// Row-major p × p: σ · M⁺ · I_{d,p}.
    pub info_inverse_sqrt: Vec<f64>,
    pub threshold: f64,
    pub non_identifiable: bool,
}

impl FisherInfo {
    pub fn s1(&self) -> f64 {
        self.singular_values[0]
    }

    pub fn s_max(&self) -> f64 {
        *self.singular_values.last().unwrap()
    }

    /// Row-major p × p: I_{p,d} M / σ, the right inverse partner of
    /// `info_inverse_sqrt` when d = p and M has full rank.
    pub fn info_sqrt(&self) -> Vec<f64> {
        let (d, p) = (self.dim_state, self.dim_param);
        let mut out = vec![0.0; p * p];
        for i in 0..p.min(d) {
            for j in 0..p {
                out[i * p + j] = self.mean_dparam_drift[i * p + j] / self.sigma;
            }
        }
        out
    }
}

/// Fisher information from an M matrix given directly (row-major d × p).
pub fn fisher_from_mean(
    dim_state: usize,
    dim_param: usize,
    sigma: f64,
    mean_dparam_drift: Vec<f64>,
    threshold: f64,
) -> Result<FisherInfo> {
    let (d, p) = (dim_state, dim_param);
    if mean_dparam_drift.len() != d * p {
        return Err(Error::invalid("mean Jacobian has wrong size"));
    }
    if mean_dparam_drift.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("mean Jacobian is not finite"));
    }
    let m = DMatrix::from_row_slice(d, p, &mean_dparam_drift);
    let svd = m.clone().svd(true, true);
    let mut singular_values: Vec<f64> = svd.singular_values.iter().cloned().collect();
    singular_values.resize(p, 0.0);
    singular_values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let s_max = *singular_values.last().unwrap();
    let eps = (s_max * 1e-14).max(f64::MIN_POSITIVE);
    let pinv = svd
        .pseudo_inverse(eps)
        .map_err(|e| Error::invalid(format!("pseudo-inverse failed: {e}")))?;
    // pinv is p × d; right-multiply by I_{d,p}.
    let mut inv_sqrt = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p.min(d) {
            inv_sqrt[i * p + j] = sigma * pinv[(i, j)];
        }
    }
    let non_identifiable = singular_values[0] < threshold;
    Ok(FisherInfo {
        dim_state: d,
        dim_param: p,
        sigma,
        mean_dparam_drift,
        singular_values,
        info_inverse_sqrt: inv_sqrt,
        threshold,
        non_identifiable,
    })
}

/// Fisher information at θ0 using the default identifiability threshold.
pub fn fisher_info(
    family: &dyn DriftFamily,
    theta0: &[f64],
    measure: &ErgodicMeasure<'_>,
) -> Result<FisherInfo> {
    fisher_info_with_threshold(family, theta0, measure, IDENTIFIABILITY_THRESHOLD)
}

pub fn fisher_info_with_threshold(
    family: &dyn DriftFamily,
    theta0: &[f64],
    measure: &ErgodicMeasure<'_>,
    threshold: f64,
) -> Result<FisherInfo> {
    let (d, p) = (family.dim_state(), family.dim_param());
    if theta0.len() != p {
        return Err(Error::invalid("parameter has wrong dimension"));
    }
    let mean = measure.expectation_vec(d * p, |x, out| family.dparam_drift(theta0, x, out));
    fisher_from_mean(d, p, family.sigma(), mean, threshold)
}

/// Second-order Laplace approximation of E_μ[g(ξ)] for the part of μ
/// localized at the strict minimum `well_minimum` of a one-dimensional
/// potential:
///
/// E[g] ≈ g(m) + (σ²/(2κ)) (g″(m)/U″(m) − g′(m) U‴(m)/U″(m)²).
///
/// Derivatives of `g` and U‴ are taken by central differences.
pub fn laplace_moment<G: Fn(f64) -> f64>(
    family: &dyn DriftFamily,
    theta: &[f64],
    well_minimum: f64,
    exponent: f64,
    g: G,
) -> Result<f64> {
    if family.dim_state() != 1 || !family.is_gradient() {
        return Err(Error::invalid("Laplace moments are implemented for 1-d gradient families"));
    }
    let mut h = [0.0];
    let hess = |x: f64| {
        let mut out = [0.0];
        family.potential_hessian(theta, &[x], &mut out);
        out[0]
    };
    family.potential_hessian(theta, &[well_minimum], &mut h);
    let u2 = h[0];
    if !(u2 > 0.0) {
        return Err(Error::InvalidExpansion(format!(
            "Hessian at {well_minimum} is not positive definite (U'' = {u2})"
        )));
    }
    let step = 1e-4 * well_minimum.abs().max(1.0);
    let u3 = (hess(well_minimum + step) - hess(well_minimum - step)) / (2.0 * step);
    let g0 = g(well_minimum);
    let g1 = (g(well_minimum + step) - g(well_minimum - step)) / (2.0 * step);
    let g2 = (g(well_minimum + step) - 2.0 * g0 + g(well_minimum - step)) / (step * step);
    let s = family.sigma();
    let var_scale = s * s / (2.0 * exponent);
    Ok(g0 + var_scale * (g2 / u2 - g1 * u3 / (u2 * u2)))
}
