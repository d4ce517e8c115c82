//! Spectral constants of gradient diffusions: critical points, the
//! Eyring–Kramers gap of a double well, the Bakry–Émery gap of a convex
//! potential and the exponential escape model.

use serde::{Deserialize, Serialize};

use crate::dynamics::DriftFamily;
use crate::measure::ErgodicMeasure;
use crate::{Error, Result};

/// |U″| below this at a root of U′ makes the critical point degenerate.
pub const MORSE_TOL: f64 = 1e-8;
const SCAN_POINTS: usize = 20_001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub x: f64,
    pub value: f64,
    /// U″(x); for d = 1 this is both the Hessian and its only eigenvalue.
    pub curvature: f64,
}

/// Minima and saddles of a one-dimensional potential, sorted by position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellData {
    pub minima: Vec<CriticalPoint>,
    pub saddles: Vec<CriticalPoint>,
}

impl WellData {
    /// Barrier height U(s) − U(x) seen from each minimum towards its
    /// neighbouring saddle(s), taking the lower one.
    pub fn barrier_from(&self, minimum: usize) -> Option<f64> {
        let m = self.minima.get(minimum)?;
        self.saddles
            .iter()
            .filter(|s| {
                // adjacent saddles only
                let between = |a: f64, b: f64| self.minima.iter().all(|o| !(o.x > a && o.x < b));
                if s.x > m.x {
                    between(m.x, s.x)
                } else {
                    between(s.x, m.x)
                }
            })
            .map(|s| s.value - m.value)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))))
    }
}

fn scalar_dx(family: &dyn DriftFamily, theta: &[f64], x: f64) -> f64 {
    let mut v = [0.0];
    family.drift(theta, &[x], &mut v);
    -v[0]
}

fn scalar_dxx(family: &dyn DriftFamily, theta: &[f64], x: f64) -> f64 {
    let mut h = [0.0];
    family.potential_hessian(theta, &[x], &mut h);
    h[0]
}

fn require_1d_gradient(family: &dyn DriftFamily) -> Result<()> {
    if family.dim_state() != 1 || !family.is_gradient() {
        return Err(Error::invalid(
            "automatic critical-point search needs a 1-d gradient family",
        ));
    }
    Ok(())
}

/// All roots of U′ in `[lo, hi]`: sign changes on a uniform scan, polished by
/// bisection until |U′| < 1e-12 or the bracket stops shrinking.
pub fn locate_critical_points(
    family: &dyn DriftFamily,
    theta: &[f64],
    lo: f64,
    hi: f64,
) -> Result<WellData> {
    require_1d_gradient(family)?;
    if !(lo < hi) {
        return Err(Error::invalid("search interval must satisfy lo < hi"));
    }
    let du = |x: f64| scalar_dx(family, theta, x);
    let h = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut roots: Vec<f64> = Vec::new();
    let mut x_prev = lo;
    let mut f_prev = du(lo);
    if f_prev == 0.0 {
        roots.push(lo);
    }
    for k in 1..SCAN_POINTS {
        let x = lo + k as f64 * h;
        let f = du(x);
        if f == 0.0 {
            roots.push(x);
        } else if f_prev != 0.0 && f.signum() != f_prev.signum() {
            roots.push(bisect(&du, x_prev, x, f_prev));
        }
        x_prev = x;
        f_prev = f;
    }
    let mut minima = Vec::new();
    let mut saddles = Vec::new();
    for x in roots {
        let curvature = scalar_dxx(family, theta, x);
        if curvature.abs() < MORSE_TOL {
            return Err(Error::NonMorse { x, curvature });
        }
        let value = family.potential(theta, &[x]).unwrap_or(f64::NAN);
        let cp = CriticalPoint { x, value, curvature };
        if curvature > 0.0 {
            minima.push(cp);
        } else {
            saddles.push(cp);
        }
    }
    Ok(WellData { minima, saddles })
}

fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm.abs() < 1e-12 && (b - a) < 1e-9 {
            return m;
        }
        if fm == 0.0 || m <= a || m >= b {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Eyring–Kramers spectral gap of a two-well potential,
///
/// γ = 2|λ| √det H₂ / (π √|det H̃|) · exp(2(U(x₂) − U(s))/σ²),
///
/// with x₂ the shallower minimum, s the separating saddle and λ the
/// negative Hessian eigenvalue at s.
pub fn eyring_kramers_gamma(wells: &WellData, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid("sigma must be positive"));
    }
    if wells.minima.len() != 2 || wells.saddles.len() != 1 {
        return Err(Error::NotMetastable(format!(
            "expected two minima and one saddle, found {} and {}",
            wells.minima.len(),
            wells.saddles.len()
        )));
    }
    let s = wells.saddles[0];
    let (a, b) = (wells.minima[0], wells.minima[1]);
    if !(a.x < s.x && s.x < b.x) {
        return Err(Error::NotMetastable("saddle does not separate the minima".into()));
    }
    let x2 = if a.value >= b.value { a } else { b };
    let lambda = s.curvature.abs();
    let prefactor = 2.0 * lambda * x2.curvature.sqrt() / (std::f64::consts::PI * lambda.sqrt());
    Ok(prefactor * (2.0 * (x2.value - s.value) / (sigma * sigma)).exp())
}

/// Multiplicative uncertainty 1 + √(σ²/2)|ln(σ²/2)|^{3/2} of the
/// Eyring–Kramers asymptotic.
pub fn eyring_kramers_error_factor(sigma: f64) -> f64 {
    let e = 0.5 * sigma * sigma;
    1.0 + e.sqrt() * e.ln().abs().powf(1.5)
}

/// (γ / f, γ · f) with f from [`eyring_kramers_error_factor`].
pub fn eyring_kramers_band(gamma: f64, sigma: f64) -> (f64, f64) {
    let f = eyring_kramers_error_factor(sigma);
    (gamma / f, gamma * f)
}

/// Smallest eigenvalue of a symmetric 2 × 2 matrix.
fn min_eig_2x2(h: &[f64]) -> f64 {
    let (a, b, d) = (h[0], 0.5 * (h[1] + h[2]), h[3]);
    let mean = 0.5 * (a + d);
    let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    mean - rad
}

/// Bakry–Émery constant inf_x λ_min(∇²U(x)) over `[lower, upper]` (d ≤ 2):
/// the minimum over a fine grid, refined by golden-section search for d = 1.
pub fn bakry_emery_gamma(
    family: &dyn DriftFamily,
    theta: &[f64],
    lower: &[f64],
    upper: &[f64],
) -> Result<f64> {
    let d = family.dim_state();
    if !family.is_gradient() || d > 2 || lower.len() != d || upper.len() != d {
        return Err(Error::invalid("Bakry-Emery probe needs a gradient family with d <= 2"));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l < u)) {
        return Err(Error::invalid("probe box needs lower < upper"));
    }
    let mut hess = vec![0.0; d * d];
    let mut curv = |x: &[f64]| {
        family.potential_hessian(theta, x, &mut hess);
        if d == 1 {
            hess[0]
        } else {
            min_eig_2x2(&hess)
        }
    };
    let min_curvature = if d == 1 {
        let (lo, hi) = (lower[0], upper[0]);
        let h = (hi - lo) / (SCAN_POINTS - 1) as f64;
        let (mut best_k, mut best) = (0usize, f64::INFINITY);
        for k in 0..SCAN_POINTS {
            let v = curv(&[lo + k as f64 * h]);
            if v < best {
                best = v;
                best_k = k;
            }
        }
        let a = (lo + (best_k as f64 - 1.0) * h).max(lo);
        let b = (lo + (best_k as f64 + 1.0) * h).min(hi);
        let refined = golden_section_min(|x| curv(&[x]), a, b);
        best.min(refined)
    } else {
        let n = 801;
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in 0..n {
                let x = [
                    lower[0] + (upper[0] - lower[0]) * i as f64 / (n - 1) as f64,
                    lower[1] + (upper[1] - lower[1]) * j as f64 / (n - 1) as f64,
                ];
                best = best.min(curv(&x));
            }
        }
        best
    };
    if !(min_curvature > MORSE_TOL) {
        return Err(Error::NonConvex { min_curvature });
    }
    Ok(min_curvature)
}

fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    let mut best = fc.min(fd);
    for _ in 0..200 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
        best = best.min(fc).min(fd);
    }
    best
}

/// Survival probability P[t < τ] ≈ min(1, c e^{−λt}).
pub fn escape_probability(lambda_exit: f64, c: f64, t: f64) -> Result<f64> {
    if !(lambda_exit >= 0.0) || !(c > 0.0 && c <= 1.1) || !(t >= 0.0) {
        return Err(Error::invalid(format!(
            "escape model needs lambda >= 0, c in (0, 1.1], t >= 0 (got {lambda_exit}, {c}, {t})"
        )));
    }
    Ok((c * (-lambda_exit * t).exp()).min(1.0))
}

/// P[t > τ] = 1 − [`escape_probability`], computed without cancellation
/// for small λt.
pub fn escaped_probability(lambda_exit: f64, c: f64, t: f64) -> Result<f64> {
    let survive = escape_probability(lambda_exit, c, t)?;
    if c == 1.0 {
        return Ok(-(-lambda_exit * t).exp_m1());
    }
    Ok(1.0 - survive)
}

/// ‖h − 1‖_{L²(μ)} for the initial density ρ₀ = h μ, the constant k in the
/// total-variation decay k e^{−γt}. `log_initial` is the normalized log
/// initial density.
pub fn prefactor_k<F: Fn(&[f64]) -> f64>(measure: &ErgodicMeasure<'_>, log_initial: F) -> f64 {
    // ∫ (h − 1)² dμ = ∫ ρ₀²/μ dx − 1 = E_μ[h²] − 1
    let e_h2 = measure.expectation(|x| (2.0 * (log_initial(x) - measure.log_density(x))).exp());
    (e_h2 - 1.0).max(0.0).sqrt()
}

/// Spectral constants of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    /// Eyring–Kramers γ of the full system.
    pub gamma: f64,
    pub gamma_band: (f64, f64),
    /// Bakry–Émery ĝ of the convexified system.
    pub gamma_hat: f64,
    /// Principal Dirichlet eigenvalue λ; equal to γ for two-well systems.
    pub lambda_exit: f64,
    pub prefactor_k: f64,
    pub wells: WellData,
}

impl SpectralSummary {
    /// Summary from a full two-well family and its convexified version.
    pub fn for_double_well(
        full: &dyn DriftFamily,
        cutoff: &dyn DriftFamily,
        theta0: &[f64],
        search: (f64, f64),
    ) -> Result<Self> {
        let wells = locate_critical_points(full, theta0, search.0, search.1)?;
        let sigma = full.sigma();
        let gamma = eyring_kramers_gamma(&wells, sigma)?;
        let gamma_hat = bakry_emery_gamma(cutoff, theta0, &[search.0], &[search.1])?;
        Ok(Self {
            gamma,
            gamma_band: eyring_kramers_band(gamma, sigma),
            gamma_hat,
            lambda_exit: gamma,
            prefactor_k: 1.0,
            wells,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{
        cutoff_family, double_well_family, tilted_ou_family, DoubleWell, GradientFamily1d,
        DEFAULT_CUT_POINT,
    };
    use crate::measure::{ergodic_measure, MeasureConfig};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use std::f64::consts::{PI, SQRT_2};
    use std::sync::Arc;

    #[test]
    fn double_well_critical_points() {
        let f = double_well_family(0.4).unwrap();
        let w = locate_critical_points(&f, &[0.0], -3.0, 3.0).unwrap();
        assert_eq!(w.minima.len(), 2);
        assert_eq!(w.saddles.len(), 1);
        assert_abs_diff_eq!(w.minima[0].x, -SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(w.minima[1].x, SQRT_2, epsilon = 1e-12);
        assert_abs_diff_eq!(w.saddles[0].x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w.minima[1].curvature, 16.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w.saddles[0].curvature, -8.0, epsilon = 1e-9);
        assert_abs_diff_eq!(w.barrier_from(1).unwrap(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn quadratic_has_no_saddle() {
        let f = tilted_ou_family(1.0, 0.0, 0.3).unwrap();
        let w = locate_critical_points(&f, &[0.0], -3.0, 3.0).unwrap();
        assert_eq!(w.minima.len(), 1);
        assert!(w.saddles.is_empty());
        assert!(matches!(eyring_kramers_gamma(&w, 0.3), Err(Error::NotMetastable(_))));
    }

    #[test]
    fn degenerate_critical_point_is_rejected() {
        // x⁴ − θx² at θ = 0 has U″(0) = 0.
        let f = crate::dynamics::degenerate_double_well_family(0.4).unwrap();
        assert!(matches!(
            locate_critical_points(&f, &[0.0], -1.0, 1.3),
            Err(Error::NonMorse { .. })
        ));
    }

    #[test]
    fn eyring_kramers_double_well() {
        let f = double_well_family(0.4).unwrap();
        let w = locate_critical_points(&f, &[0.0], -3.0, 3.0).unwrap();
        let g = eyring_kramers_gamma(&w, 0.4).unwrap();
        let closed = 8f64.powf(1.5) / PI * (-50.0f64).exp();
        assert_relative_eq!(g, closed, max_relative = 1e-10);
        assert_relative_eq!(g, 1.3891879663e-21, max_relative = 1e-9);
        // the prefactor alone
        assert_relative_eq!(8f64.powf(1.5) / PI, 7.2025305, max_relative = 1e-7);
        let (lo, hi) = eyring_kramers_band(g, 0.4);
        assert!(lo < g && g < hi);
    }

    #[test]
    fn eyring_kramers_monotone_in_sigma() {
        let f = double_well_family(1.0).unwrap();
        let w = locate_critical_points(&f, &[0.0], -3.0, 3.0).unwrap();
        // below σ ≈ 0.106 the factor e^{−8/σ²} underflows to zero
        let mut prev = 0.0;
        for k in 3..40 {
            let g = eyring_kramers_gamma(&w, 0.05 * k as f64).unwrap();
            assert!(g > prev);
            prev = g;
        }
    }

    #[test]
    fn deeper_wells_square_the_exponential() {
        let f = double_well_family(1.0).unwrap();
        let w = locate_critical_points(&f, &[0.0], -3.0, 3.0).unwrap();
        let mut deeper = w.clone();
        for m in deeper.minima.iter_mut() {
            m.value *= 2.0;
        }
        let pre = 8f64.powf(1.5) / PI;
        let g1 = eyring_kramers_gamma(&w, 0.7).unwrap() / pre;
        let g2 = eyring_kramers_gamma(&deeper, 0.7).unwrap() / pre;
        assert_relative_eq!(g2, g1 * g1, max_relative = 1e-12);
    }

    #[test]
    fn bakry_emery_cutoff_constant() {
        let expected = 12.0 * DEFAULT_CUT_POINT * DEFAULT_CUT_POINT - 8.0;
        for sigma in [0.05, 0.1, 0.4] {
            let f = cutoff_family(&double_well_family(sigma).unwrap(), DEFAULT_CUT_POINT, &[0.0])
                .unwrap();
            let g = bakry_emery_gamma(&f, &[0.0], &[-5.0], &[5.0]).unwrap();
            assert_abs_diff_eq!(g, expected, epsilon = 1e-6);
        }
        assert_abs_diff_eq!(expected, 2.0294372515228627, epsilon = 1e-14);
    }

    #[test]
    fn bakry_emery_quadratic_and_nonconvex() {
        let f = tilted_ou_family(1.0, 0.0, 0.3).unwrap();
        assert_abs_diff_eq!(
            bakry_emery_gamma(&f, &[0.0], &[-5.0], &[5.0]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let dw = double_well_family(0.3).unwrap();
        assert!(matches!(
            bakry_emery_gamma(&dw, &[0.0], &[-5.0], &[5.0]),
            Err(Error::NonConvex { .. })
        ));
    }

    #[test]
    fn escape_model() {
        assert_eq!(escape_probability(1.0, 1.0, 0.0).unwrap(), 1.0);
        let p = escape_probability(1.389e-21, 1.0, 1e10).unwrap();
        assert_abs_diff_eq!(p, 1.0 - 1.389e-11, epsilon = 1e-16);
        assert_relative_eq!(escaped_probability(1.389e-21, 1.0, 1e10).unwrap(), 1.389e-11, max_relative = 1e-9);
        let p = escape_probability(3.763e-7, 1.0, 1e7).unwrap();
        assert_abs_diff_eq!(p, (-3.763f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(p, 0.0232, epsilon = 1e-4);
        assert!(escape_probability(1.0, 1.2, 1.0).is_err());
        assert!(escape_probability(-1.0, 1.0, 1.0).is_err());
        let mut prev = 1.0;
        for k in 0..50 {
            let p = escape_probability(0.3, 1.0, k as f64).unwrap();
            assert!(p <= prev);
            prev = p;
        }
    }

    #[test]
    fn summary_for_the_double_well() {
        let full = double_well_family(0.4).unwrap();
        let cut = cutoff_family(&full, DEFAULT_CUT_POINT, &[0.0]).unwrap();
        let s = SpectralSummary::for_double_well(&full, &cut, &[0.0], (-5.0, 5.0)).unwrap();
        assert_relative_eq!(s.gamma, s.lambda_exit, max_relative = 1e-12);
        assert!(s.gamma > 0.0 && s.gamma_hat > 0.0);
    }

    #[test]
    fn prefactor_k_vanishes_at_equilibrium() {
        let f = GradientFamily1d::new(Arc::new(DoubleWell), 0.8).unwrap();
        let mu = ergodic_measure(&f, &[0.0], None, &MeasureConfig::default()).unwrap();
        assert_abs_diff_eq!(prefactor_k(&mu, |x| mu.log_density(x)), 0.0, epsilon = 1e-6);
        // a standard Gaussian start is far from equilibrium
        let k = prefactor_k(&mu, |x| -0.5 * x[0] * x[0] - 0.5 * (2.0 * PI).ln());
        assert!(k > 0.1);
    }
}
