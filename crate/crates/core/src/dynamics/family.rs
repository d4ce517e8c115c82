//! Parameterized drift families.
//!
//! Matrices are flattened row-major: `dparam_drift` writes a `d × p` block
//! (`out[i * p + j] = ∂V_i/∂θ_j`) and `d2param_drift` a `d × p × p` block
//! (`out[(i * p + j) * p + k]`).

use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

pub trait DriftFamily: Send + Sync + fmt::Debug {
    fn label(&self) -> String;
    fn dim_state(&self) -> usize;
    fn dim_param(&self) -> usize;
    fn sigma(&self) -> f64;

    fn drift(&self, theta: &[f64], x: &[f64], out: &mut [f64]);
    fn dparam_drift(&self, theta: &[f64], x: &[f64], out: &mut [f64]);
    fn d2param_drift(&self, theta: &[f64], x: &[f64], out: &mut [f64]);

    /// U_θ(x) with drift = −∇U, for gradient families.
    fn potential(&self, _theta: &[f64], _x: &[f64]) -> Option<f64> {
        None
    }

    /// Writes the `d × d` Hessian of the potential. Returns `false` for
    /// non-gradient families.
    fn potential_hessian(&self, _theta: &[f64], _x: &[f64], _out: &mut [f64]) -> bool {
        false
    }

    fn is_gradient(&self) -> bool {
        false
    }

    /// True when V_θ(x) = V_0(x) + ∂_θV(x)·θ with ∂_θV independent of θ.
    /// Likelihoods then reduce to quadratic forms in θ.
    fn is_affine_in_param(&self) -> bool {
        false
    }
}

/// A scalar potential U_θ(x) on the real line with closed-form derivatives in
/// x and θ.
pub trait Potential1d: Send + Sync + fmt::Debug {
    fn label(&self) -> String;
    fn dim_param(&self) -> usize;
    fn value(&self, theta: &[f64], x: f64) -> f64;
    fn dx(&self, theta: &[f64], x: f64) -> f64;
    fn dxx(&self, theta: &[f64], x: f64) -> f64;
    /// ∂_θ U′ (length p).
    fn dtheta_dx(&self, theta: &[f64], x: f64, out: &mut [f64]);
    /// ∂_θ U″ (length p).
    fn dtheta_dxx(&self, theta: &[f64], x: f64, out: &mut [f64]);
    /// ∂²_θ U′ (p × p).
    fn dtheta2_dx(&self, theta: &[f64], x: f64, out: &mut [f64]);
    /// ∂²_θ U″ (p × p).
    fn dtheta2_dxx(&self, theta: &[f64], x: f64, out: &mut [f64]);
    fn is_affine_in_param(&self) -> bool;
}

/// Overdamped Langevin family dX = −U_θ′(X) dt + σ dW on the real line.
#[derive(Debug, Clone)]
pub struct GradientFamily1d {
    potential: Arc<dyn Potential1d>,
    sigma: f64,
}

impl GradientFamily1d {
    /// `sigma = 0` is accepted here and gives the deterministic gradient flow;
    /// the named constructors require `sigma > 0`.
    pub fn new(potential: Arc<dyn Potential1d>, sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("noise amplitude must be >= 0, got {sigma}")));
        }
        Ok(Self { potential, sigma })
    }

    pub fn potential_fn(&self) -> &Arc<dyn Potential1d> {
        &self.potential
    }

    pub fn with_sigma(&self, sigma: f64) -> Result<Self> {
        Self::new(self.potential.clone(), sigma)
    }
}

impl DriftFamily for GradientFamily1d {
    fn label(&self) -> String {
        self.potential.label()
    }
    fn dim_state(&self) -> usize {
        1
    }
    fn dim_param(&self) -> usize {
        self.potential.dim_param()
    }
    fn sigma(&self) -> f64 {
        self.sigma
    }
    fn drift(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        out[0] = -self.potential.dx(theta, x[0]);
    }
    fn dparam_drift(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        self.potential.dtheta_dx(theta, x[0], out);
        out.iter_mut().for_each(|v| *v = -*v);
    }
    fn d2param_drift(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        self.potential.dtheta2_dx(theta, x[0], out);
        out.iter_mut().for_each(|v| *v = -*v);
    }
    fn potential(&self, theta: &[f64], x: &[f64]) -> Option<f64> {
        Some(self.potential.value(theta, x[0]))
    }
    fn potential_hessian(&self, theta: &[f64], x: &[f64], out: &mut [f64]) -> bool {
        out[0] = self.potential.dxx(theta, x[0]);
        true
    }
    fn is_gradient(&self) -> bool {
        true
    }
    fn is_affine_in_param(&self) -> bool {
        self.potential.is_affine_in_param()
    }
}

/// Diagonal Ornstein–Uhlenbeck family U_θ(x) = ½ Σ θ_i x_i² in `dim`
/// dimensions (p = d, θ_i the stiffness along axis i).
#[derive(Debug, Clone)]
pub struct OrnsteinUhlenbeck {
    dim: usize,
    sigma: f64,
}

impl OrnsteinUhlenbeck {
    pub fn new(dim: usize, sigma: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("OU family needs dim >= 1"));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("noise amplitude must be > 0, got {sigma}")));
        }
        Ok(Self { dim, sigma })
    }
}

impl DriftFamily for OrnsteinUhlenbeck {
    fn label(&self) -> String {
        format!("ornstein_uhlenbeck_{}d", self.dim)
    }
    fn dim_state(&self) -> usize {
        self.dim
    }
    fn dim_param(&self) -> usize {
        self.dim
    }
    fn sigma(&self) -> f64 {
        self.sigma
    }
    fn drift(&self, theta: &[f64], x: &[f64], out: &mut [f64]) {
        for i in 0..self.dim {
            out[i] = -theta[i] * x[i];
        }
    }
    fn dparam_drift(&self, _theta: &[f64], x: &[f64], out: &mut [f64]) {
        let p = self.dim;
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..self.dim {
            out[i * p + i] = -x[i];
        }
    }
    fn d2param_drift(&self, _theta: &[f64], _x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    fn potential(&self, theta: &[f64], x: &[f64]) -> Option<f64> {
        Some(0.5 * theta.iter().zip(x).map(|(t, xi)| t * xi * xi).sum::<f64>())
    }
    fn potential_hessian(&self, theta: &[f64], _x: &[f64], out: &mut [f64]) -> bool {
        let d = self.dim;
        out.iter_mut().for_each(|v| *v = 0.0);
        for i in 0..d {
            out[i * d + i] = theta[i];
        }
        true
    }
    fn is_gradient(&self) -> bool {
        true
    }
    fn is_affine_in_param(&self) -> bool {
        true
    }
}

/// Maximum discrepancies found by [`check_derivatives`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DerivativeReport {
    pub gradient_err: f64,
    pub dparam_err: f64,
    pub d2param_err: f64,
}

pub const GRADIENT_TOL: f64 = 1e-6;
pub const DPARAM_TOL: f64 = 1e-5;
pub const D2PARAM_TOL: f64 = 1e-4;

fn mixed_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Compares the analytic derivatives of `family` with central finite
/// differences on every (θ, x) pair of the probe sets.
pub fn check_derivatives(
    family: &dyn DriftFamily,
    thetas: &[Vec<f64>],
    xs: &[Vec<f64>],
) -> Result<DerivativeReport> {
    let d = family.dim_state();
    let p = family.dim_param();
    let mut rep = DerivativeReport::default();
    let mut v_plus = vec![0.0; d];
    let mut v_minus = vec![0.0; d];
    let mut jac = vec![0.0; d * p];
    let mut jac_plus = vec![0.0; d * p];
    let mut jac_minus = vec![0.0; d * p];
    let mut hess = vec![0.0; d * p * p];
    let mut drift = vec![0.0; d];
    for theta in thetas {
        if theta.len() != p {
            return Err(Error::invalid("probe parameter has wrong dimension"));
        }
        for x in xs {
            if x.len() != d {
                return Err(Error::invalid("probe state has wrong dimension"));
            }
            family.drift(theta, x, &mut drift);
            if family.is_gradient() {
                for i in 0..d {
                    let h = 1e-6 * x[i].abs().max(1.0);
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[i] += h;
                    xm[i] -= h;
                    let up = family.potential(theta, &xp).unwrap_or(f64::NAN);
                    let um = family.potential(theta, &xm).unwrap_or(f64::NAN);
                    let fd = -(up - um) / (2.0 * h);
                    rep.gradient_err = rep.gradient_err.max(mixed_err(drift[i], fd));
                }
            }
            family.dparam_drift(theta, x, &mut jac);
            family.d2param_drift(theta, x, &mut hess);
            for j in 0..p {
                let h = 1e-5 * theta[j].abs().max(1.0);
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[j] += h;
                tm[j] -= h;
                family.drift(&tp, x, &mut v_plus);
                family.drift(&tm, x, &mut v_minus);
                family.dparam_drift(&tp, x, &mut jac_plus);
                family.dparam_drift(&tm, x, &mut jac_minus);
                for i in 0..d {
                    let fd = (v_plus[i] - v_minus[i]) / (2.0 * h);
                    rep.dparam_err = rep.dparam_err.max(mixed_err(jac[i * p + j], fd));
                    for k in 0..p {
                        let fd2 = (jac_plus[i * p + k] - jac_minus[i * p + k]) / (2.0 * h);
                        rep.d2param_err =
                            rep.d2param_err.max(mixed_err(hess[(i * p + k) * p + j], fd2));
                    }
                }
            }
        }
    }
    if !(rep.gradient_err <= GRADIENT_TOL) {
        return Err(Error::AssumptionViolated(format!(
            "drift is not -grad U: error {:e}",
            rep.gradient_err
        )));
    }
    if !(rep.dparam_err <= DPARAM_TOL) {
        return Err(Error::AssumptionViolated(format!(
            "dparam_drift disagrees with finite differences: {:e}",
            rep.dparam_err
        )));
    }
    if !(rep.d2param_err <= D2PARAM_TOL) {
        return Err(Error::AssumptionViolated(format!(
            "d2param_drift disagrees with finite differences: {:e}",
            rep.d2param_err
        )));
    }
    Ok(rep)
}

/// Default probe set for one-dimensional families: a uniform grid on
/// [-2.5, 2.5] and a handful of parameter values around `theta`.
pub fn standard_probes(theta: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let thetas = [-0.5, 0.0, 0.37]
        .iter()
        .map(|s| theta.iter().map(|t| t + s).collect())
        .collect();
    let xs = (0..=40).map(|k| vec![-2.5 + 0.125 * k as f64 + 1e-3]).collect();
    (thetas, xs)
}
