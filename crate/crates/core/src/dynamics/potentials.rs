//! Concrete one-dimensional potentials and the family constructors.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use super::family::{DriftFamily, GradientFamily1d, Potential1d};
use crate::{Error, Result};

/// Left edge of B_{1/2}(√2), the cut point of the single-well modification.
pub const DEFAULT_CUT_POINT: f64 = SQRT_2 - 0.5;

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("noise amplitude must be > 0, got {sigma}")))
    }
}

/// U_θ(x) = (x² + 2x + θ)(x² − 2x) = x⁴ − 4x² + θ(x² − 2x).
#[derive(Debug, Clone, Copy, Default)]
pub struct DoubleWell;

impl Potential1d for DoubleWell {
    fn label(&self) -> String {
        "double_well".into()
    }
    fn dim_param(&self) -> usize {
        1
    }
    fn value(&self, theta: &[f64], x: f64) -> f64 {
        (x * x + 2.0 * x + theta[0]) * (x * x - 2.0 * x)
    }
    fn dx(&self, theta: &[f64], x: f64) -> f64 {
        4.0 * x * x * x - 8.0 * x + theta[0] * (2.0 * x - 2.0)
    }
    fn dxx(&self, theta: &[f64], x: f64) -> f64 {
        12.0 * x * x - 8.0 + 2.0 * theta[0]
    }
    fn dtheta_dx(&self, _theta: &[f64], x: f64, out: &mut [f64]) {
        out[0] = 2.0 * x - 2.0;
    }
    fn dtheta_dxx(&self, _theta: &[f64], _x: f64, out: &mut [f64]) {
        out[0] = 2.0;
    }
    fn dtheta2_dx(&self, _theta: &[f64], _x: f64, out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn dtheta2_dxx(&self, _theta: &[f64], _x: f64, out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn is_affine_in_param(&self) -> bool {
        true
    }
}

/// U_θ(x) = x⁴ − θx²; symmetric for every θ.
#[derive(Debug, Clone, Copy, Default)]
pub struct DegenerateDoubleWell;

impl Potential1d for DegenerateDoubleWell {
    fn label(&self) -> String {
        "degenerate_double_well".into()
    }
    fn dim_param(&self) -> usize {
        1
    }
    fn value(&self, theta: &[f64], x: f64) -> f64 {
        x.powi(4) - theta[0] * x * x
    }
    fn dx(&self, theta: &[f64], x: f64) -> f64 {
        4.0 * x * x * x - 2.0 * theta[0] * x
    }
    fn dxx(&self, theta: &[f64], x: f64) -> f64 {
        12.0 * x * x - 2.0 * theta[0]
    }
    fn dtheta_dx(&self, _theta: &[f64], x: f64, out: &mut [f64]) {
        out[0] = -2.0 * x;
    }
    fn dtheta_dxx(&self, _theta: &[f64], _x: f64, out: &mut [f64]) {
        out[0] = -2.0;
    }
    fn dtheta2_dx(&self, _theta: &[f64], _x: f64, out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn dtheta2_dxx(&self, _theta: &[f64], _x: f64, out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn is_affine_in_param(&self) -> bool {
        true
    }
}

/// U_θ(x) = a(x − m)²/2 − θ ln cosh x: an OU drift plus the bounded
/// perturbation θ·tanh x.
#[derive(Debug, Clone, Copy)]
pub struct TiltedOu {
    pub stiffness: f64,
    pub center: f64,
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Potential1d for TiltedOu {
    fn label(&self) -> String {
        "tilted_ou".into()
    }
    fn dim_param(&self) -> usize {
        1
    }
    fn value(&self, theta: &[f64], x: f64) -> f64 {
        0.5 * self.stiffness * (x - self.center).powi(2) - theta[0] * ln_cosh(x)
    }
    fn dx(&self, theta: &[f64], x: f64) -> f64 {
        self.stiffness * (x - self.center) - theta[0] * x.tanh()
    }
    fn dxx(&self, theta: &[f64], x: f64) -> f64 {
        let s = 1.0 / x.cosh();
        self.stiffness - theta[0] * s * s
    }
    fn dtheta_dx(&self, _theta: &[f64], x: f64, out: &mut [f64]) {
        out[0] = -x.tanh();
    }
    fn dtheta_dxx(&self, _theta: &[f64], x: f64, out: &mut [f64]) {
        let s = 1.0 / x.cosh();
        out[0] = -s * s;
    }
    fn dtheta2_dx(&self, _theta: &[f64], _x: f64, out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn dtheta2_dxx(&self, _theta: &[f64], _x: f64, out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn is_affine_in_param(&self) -> bool {
        true
    }
}

/// Smooth compactly supported bump φ(y) = exp(−1/(1 − y²)) on (−1, 1) and
/// its first two derivatives.
fn bump(y: f64) -> (f64, f64, f64) {
    if y.abs() >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let w = 1.0 - y * y;
    let f = (-1.0 / w).exp();
    let q1 = -2.0 * y / (w * w);
    let q2 = -2.0 / (w * w) - 8.0 * y * y / (w * w * w);
    (f, q1 * f, (q2 + q1 * q1) * f)
}

/// U_θ(x) = x⁴ − 4x² + A(θ₁ b_L(x) + θ₂ b_R(x)), with b_L, b_R smooth bumps
/// supported on `[-c - h, -c + h]` and `[c - h, c + h]`. Each parameter
/// reshapes one well only.
#[derive(Debug, Clone, Copy)]
pub struct BumpWells {
    pub amplitude: f64,
    pub bump_center: f64,
    pub bump_half_width: f64,
}

impl Default for BumpWells {
    /// Supports [−2.2, −0.6] and [0.6, 2.2].
    fn default() -> Self {
        Self { amplitude: 8.0, bump_center: 1.4, bump_half_width: 0.8 }
    }
}

impl BumpWells {
    /// (b_L, b_R) and their first two x-derivatives, amplitude included.
    fn bumps(&self, x: f64) -> [(f64, f64, f64); 2] {
        let h = self.bump_half_width;
        let a = self.amplitude;
        let scale = |(f, f1, f2): (f64, f64, f64)| (a * f, a * f1 / h, a * f2 / (h * h));
        [
            scale(bump((x + self.bump_center) / h)),
            scale(bump((x - self.bump_center) / h)),
        ]
    }
}

impl Potential1d for BumpWells {
    fn label(&self) -> String {
        "bump_wells".into()
    }
    fn dim_param(&self) -> usize {
        2
    }
    fn value(&self, theta: &[f64], x: f64) -> f64 {
        let [l, r] = self.bumps(x);
        x.powi(4) - 4.0 * x * x + theta[0] * l.0 + theta[1] * r.0
    }
    fn dx(&self, theta: &[f64], x: f64) -> f64 {
        let [l, r] = self.bumps(x);
        4.0 * x * x * x - 8.0 * x + theta[0] * l.1 + theta[1] * r.1
    }
    fn dxx(&self, theta: &[f64], x: f64) -> f64 {
        let [l, r] = self.bumps(x);
        12.0 * x * x - 8.0 + theta[0] * l.2 + theta[1] * r.2
    }
    fn dtheta_dx(&self, _theta: &[f64], x: f64, out: &mut [f64]) {
        let [l, r] = self.bumps(x);
        out[0] = l.1;
        out[1] = r.1;
    }
    fn dtheta_dxx(&self, _theta: &[f64], x: f64, out: &mut [f64]) {
        let [l, r] = self.bumps(x);
        out[0] = l.2;
        out[1] = r.2;
    }
    fn dtheta2_dx(&self, _theta: &[f64], _x: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    fn dtheta2_dxx(&self, _theta: &[f64], _x: f64, out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    fn is_affine_in_param(&self) -> bool {
        true
    }
}

/// Which side of the cut point is replaced by the quadratic extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutoffSide {
    /// Û = U for x ≥ c, quadratic for x < c (keeps the right well).
    Below,
    /// Û = U for x ≤ c, quadratic for x > c (keeps the left well).
    Above,
}

/// Û_θ(x) = U_θ(c) + U_θ′(c)(x − c) + U_θ″(c)(x − c)² on the replaced side,
/// U_θ elsewhere. C¹ at c; Û″ jumps from U″(c) to 2U″(c).
#[derive(Debug, Clone)]
pub struct Cutoff {
    base: Arc<dyn Potential1d>,
    cut: f64,
    side: CutoffSide,
}

impl Cutoff {
    pub fn cut_point(&self) -> f64 {
        self.cut
    }

    pub fn side(&self) -> CutoffSide {
        self.side
    }

    fn extended(&self, x: f64) -> bool {
        match self.side {
            CutoffSide::Below => x < self.cut,
            CutoffSide::Above => x > self.cut,
        }
    }

    /// Applies the quadratic-extension map to per-parameter derivative
    /// arrays: out = a(c) + 2 b(c) z for the first derivative.
    fn combine(first: &[f64], second: &[f64], z: f64, out: &mut [f64]) {
        for ((o, a), b) in out.iter_mut().zip(first).zip(second) {
            *o = a + 2.0 * b * z;
        }
    }
}

impl Potential1d for Cutoff {
    fn label(&self) -> String {
        let side = match self.side {
            CutoffSide::Below => "below",
            CutoffSide::Above => "above",
        };
        format!("{}_cutoff_{side}_{}", self.base.label(), self.cut)
    }
    fn dim_param(&self) -> usize {
        self.base.dim_param()
    }
    fn value(&self, theta: &[f64], x: f64) -> f64 {
        if !self.extended(x) {
            return self.base.value(theta, x);
        }
        let c = self.cut;
        let z = x - c;
        self.base.value(theta, c) + self.base.dx(theta, c) * z + self.base.dxx(theta, c) * z * z
    }
    fn dx(&self, theta: &[f64], x: f64) -> f64 {
        if !self.extended(x) {
            return self.base.dx(theta, x);
        }
        let c = self.cut;
        self.base.dx(theta, c) + 2.0 * self.base.dxx(theta, c) * (x - c)
    }
    fn dxx(&self, theta: &[f64], x: f64) -> f64 {
        if !self.extended(x) {
            return self.base.dxx(theta, x);
        }
        2.0 * self.base.dxx(theta, self.cut)
    }
    fn dtheta_dx(&self, theta: &[f64], x: f64, out: &mut [f64]) {
        if !self.extended(x) {
            return self.base.dtheta_dx(theta, x, out);
        }
        let p = self.dim_param();
        let mut a = vec![0.0; p];
        let mut b = vec![0.0; p];
        self.base.dtheta_dx(theta, self.cut, &mut a);
        self.base.dtheta_dxx(theta, self.cut, &mut b);
        Self::combine(&a, &b, x - self.cut, out);
    }
    fn dtheta_dxx(&self, theta: &[f64], x: f64, out: &mut [f64]) {
        if !self.extended(x) {
            return self.base.dtheta_dxx(theta, x, out);
        }
        self.base.dtheta_dxx(theta, self.cut, out);
        out.iter_mut().for_each(|v| *v *= 2.0);
    }
    fn dtheta2_dx(&self, theta: &[f64], x: f64, out: &mut [f64]) {
        if !self.extended(x) {
            return self.base.dtheta2_dx(theta, x, out);
        }
        let p = self.dim_param();
        let mut a = vec![0.0; p * p];
        let mut b = vec![0.0; p * p];
        self.base.dtheta2_dx(theta, self.cut, &mut a);
        self.base.dtheta2_dxx(theta, self.cut, &mut b);
        Self::combine(&a, &b, x - self.cut, out);
    }
    fn dtheta2_dxx(&self, theta: &[f64], x: f64, out: &mut [f64]) {
        if !self.extended(x) {
            return self.base.dtheta2_dxx(theta, x, out);
        }
        self.base.dtheta2_dxx(theta, self.cut, out);
        out.iter_mut().for_each(|v| *v *= 2.0);
    }
    fn is_affine_in_param(&self) -> bool {
        self.base.is_affine_in_param()
    }
}

/// The bistable family U_θ(x) = (x² + 2x + θ)(x² − 2x).
pub fn double_well_family(sigma: f64) -> Result<GradientFamily1d> {
    check_sigma(sigma)?;
    GradientFamily1d::new(Arc::new(DoubleWell), sigma)
}

/// U_θ(x) = x⁴ − θx²; the intended ground truth is θ₀ = 4.
pub fn degenerate_double_well_family(sigma: f64) -> Result<GradientFamily1d> {
    check_sigma(sigma)?;
    GradientFamily1d::new(Arc::new(DegenerateDoubleWell), sigma)
}

pub fn bump_wells_family(bumps: BumpWells, sigma: f64) -> Result<GradientFamily1d> {
    check_sigma(sigma)?;
    if !(bumps.bump_half_width > 0.0) {
        return Err(Error::invalid("bump half width must be positive"));
    }
    GradientFamily1d::new(Arc::new(bumps), sigma)
}

pub fn tilted_ou_family(stiffness: f64, center: f64, sigma: f64) -> Result<GradientFamily1d> {
    check_sigma(sigma)?;
    if !(stiffness > 0.0) {
        return Err(Error::invalid("stiffness must be positive"));
    }
    GradientFamily1d::new(Arc::new(TiltedOu { stiffness, center }), sigma)
}

/// Single-well modification of `base`: quadratic extension below `cut_point`.
/// Fails when U″(cut_point) ≤ 0 at `theta_ref`.
pub fn cutoff_family(
    base: &GradientFamily1d,
    cut_point: f64,
    theta_ref: &[f64],
) -> Result<GradientFamily1d> {
    cutoff_family_with_side(base, cut_point, CutoffSide::Below, theta_ref)
}

pub fn cutoff_family_with_side(
    base: &GradientFamily1d,
    cut_point: f64,
    side: CutoffSide,
    theta_ref: &[f64],
) -> Result<GradientFamily1d> {
    let pot = base.potential_fn().clone();
    if theta_ref.len() != pot.dim_param() {
        return Err(Error::invalid("reference parameter has wrong dimension"));
    }
    if !cut_point.is_finite() {
        return Err(Error::invalid("cut point must be finite"));
    }
    let curvature = pot.dxx(theta_ref, cut_point);
    if !(curvature > 0.0) {
        return Err(Error::NonConvexCutoff { curvature });
    }
    let cut = Cutoff { base: pot, cut: cut_point, side };
    GradientFamily1d::new(Arc::new(cut), base.sigma())
}
