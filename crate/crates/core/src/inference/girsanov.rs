//! Discretized Girsanov log-likelihood ratios, path statistics and the LAN
//! decomposition.
//!
//! All integrals are left-endpoint sums: ∫ f(X_s) ds ≈ Σ f(X_k) dt and
//! ∫ f(X_s)·dX_s ≈ Σ f(X_k)·(X_{k+1} − X_k).

use nalgebra::DMatrix;

use super::grid::{PosteriorGrid, Prior};
use crate::dynamics::{DriftFamily, PathView};
use crate::measure::FisherInfo;
use crate::{Error, Result};

fn check_dims(family: &dyn DriftFamily, theta: &[f64], path: &PathView<'_>) -> Result<()> {
    if path.dim != family.dim_state() {
        return Err(Error::invalid(format!(
            "path has state dimension {}, family expects {}",
            path.dim,
            family.dim_state()
        )));
    }
    if theta.len() != family.dim_param() {
        return Err(Error::invalid("parameter has wrong dimension"));
    }
    Ok(())
}

/// log dP_θ/dP_θ0 along `path`:
/// −(1/2σ²) Σ (|V_θ|² − |V_θ0|²) dt + (1/σ²) Σ (V_θ − V_θ0)·ΔX.
pub fn girsanov_loglik(
    family: &dyn DriftFamily,
    theta: &[f64],
    theta0: &[f64],
    path: &PathView<'_>,
) -> Result<f64> {
    check_dims(family, theta, path)?;
    check_dims(family, theta0, path)?;
    let d = path.dim;
    let s2 = family.sigma() * family.sigma();
    let mut v = vec![0.0; d];
    let mut v0 = vec![0.0; d];
    let (mut time_part, mut ito_part) = (0.0, 0.0);
    for k in 0..path.n_steps() {
        let x = path.state(k);
        let x_next = path.state(k + 1);
        family.drift(theta, x, &mut v);
        family.drift(theta0, x, &mut v0);
        for i in 0..d {
            time_part += (v[i] * v[i] - v0[i] * v0[i]) * path.dt;
            ito_part += (v[i] - v0[i]) * (x_next[i] - x[i]);
        }
    }
    Ok((-0.5 * time_part + ito_part) / s2)
}

/// Running sums along a path prefix, with G = ∂_θV_θ0(X_k) and
/// ΔM_k = ΔX_k − V_θ0(X_k) dt:
///
/// - `quad`   = Σ GᵀG dt (p × p)
/// - `score`  = Σ Gᵀ ΔM (p)
/// - `second` = Σ_i ∂²_θV_i ΔM_i (p × p)
/// - `noise`  = Σ ΔM / σ (d), the Brownian increments recovered from the path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathStatistics {
    pub dim_state: usize,
    pub dim_param: usize,
    pub sigma: f64,
    pub n_steps: usize,
    pub time: f64,
    pub quad: Vec<f64>,
    pub score: Vec<f64>,
    pub second: Vec<f64>,
    pub noise: Vec<f64>,
}

impl PathStatistics {
    /// Exact log-likelihood ratio at θ0 + h for families affine in θ:
    /// (hᵀ score − ½ hᵀ quad h)/σ².
    pub fn loglik_affine(&self, h: &[f64]) -> f64 {
        let p = self.dim_param;
        let mut lin = 0.0;
        let mut q = 0.0;
        for i in 0..p {
            lin += h[i] * self.score[i];
            for j in 0..p {
                q += h[i] * self.quad[i * p + j] * h[j];
            }
        }
        (lin - 0.5 * q) / (self.sigma * self.sigma)
    }
}

/// Statistics at each step count in `checkpoints` (nondecreasing, at most the
/// path length).
pub fn sufficient_statistics(
    family: &dyn DriftFamily,
    theta0: &[f64],
    path: &PathView<'_>,
    checkpoints: &[usize],
) -> Result<Vec<PathStatistics>> {
    check_dims(family, theta0, path)?;
    if checkpoints.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("checkpoints must be nondecreasing"));
    }
    if checkpoints.last().is_some_and(|&n| n > path.n_steps()) {
        return Err(Error::invalid("checkpoint beyond the end of the path"));
    }
    let (d, p) = (family.dim_state(), family.dim_param());
    let sigma = family.sigma();
    let mut st = PathStatistics {
        dim_state: d,
        dim_param: p,
        sigma,
        n_steps: 0,
        time: 0.0,
        quad: vec![0.0; p * p],
        score: vec![0.0; p],
        second: vec![0.0; p * p],
        noise: vec![0.0; d],
    };
    let mut v = vec![0.0; d];
    let mut g = vec![0.0; d * p];
    let mut g2 = vec![0.0; d * p * p];
    let mut dm = vec![0.0; d];
    let mut out = Vec::with_capacity(checkpoints.len());
    let mut next = 0;
    for k in 0..=path.n_steps() {
        while next < checkpoints.len() && checkpoints[next] == k {
            st.n_steps = k;
            st.time = k as f64 * path.dt;
            out.push(st.clone());
            next += 1;
        }
        if next == checkpoints.len() || k == path.n_steps() {
            break;
        }
        let x = path.state(k);
        let x_next = path.state(k + 1);
        family.drift(theta0, x, &mut v);
        family.dparam_drift(theta0, x, &mut g);
        family.d2param_drift(theta0, x, &mut g2);
        for i in 0..d {
            dm[i] = x_next[i] - x[i] - v[i] * path.dt;
            st.noise[i] += dm[i] / sigma;
        }
        for a in 0..p {
            for i in 0..d {
                st.score[a] += g[i * p + a] * dm[i];
            }
            for b in 0..p {
                let mut gg = 0.0;
                let mut sec = 0.0;
                for i in 0..d {
                    gg += g[i * p + a] * g[i * p + b];
                    sec += g2[(i * p + a) * p + b] * dm[i];
                }
                st.quad[a * p + b] += gg * path.dt;
                st.second[a * p + b] += sec;
            }
        }
    }
    Ok(out)
}

fn posterior_from_statistics(prior: &Prior, theta0: &[f64], st: &PathStatistics) -> Result<PosteriorGrid> {
    let grid = prior.grid();
    let mut theta = vec![0.0; grid.dim()];
    let log_weights = prior
        .log_weights()
        .into_iter()
        .enumerate()
        .map(|(k, lp)| {
            grid.node_into(k, &mut theta);
            let h: Vec<f64> = theta.iter().zip(theta0).map(|(t, t0)| t - t0).collect();
            lp + st.loglik_affine(&h)
        })
        .collect();
    let post = PosteriorGrid::new(grid.clone(), log_weights, st.time)?;
    post.weights()?;
    Ok(post)
}

/// Grid posterior after observing the whole path, with P_θ0 as the
/// dominating reference measure.
pub fn posterior_update(
    prior: &Prior,
    family: &dyn DriftFamily,
    theta0_reference: &[f64],
    path: &PathView<'_>,
) -> Result<PosteriorGrid> {
    Ok(posterior_at_checkpoints(prior, family, theta0_reference, path, &[path.n_steps()])?
        .pop()
        .unwrap())
}

/// Posteriors after the first `checkpoints[i]` steps of one path. Families
/// affine in θ use the exact quadratic form in the path statistics; others
/// evaluate the Girsanov sum at every grid node.
pub fn posterior_at_checkpoints(
    prior: &Prior,
    family: &dyn DriftFamily,
    theta0_reference: &[f64],
    path: &PathView<'_>,
    checkpoints: &[usize],
) -> Result<Vec<PosteriorGrid>> {
    if prior.grid().dim() != family.dim_param() {
        return Err(Error::invalid("prior grid dimension differs from the parameter dimension"));
    }
    if family.is_affine_in_param() {
        return sufficient_statistics(family, theta0_reference, path, checkpoints)?
            .iter()
            .map(|st| posterior_from_statistics(prior, theta0_reference, st))
            .collect();
    }
    check_dims(family, theta0_reference, path)?;
    let grid = prior.grid();
    let prior_lw = prior.log_weights();
    checkpoints
        .iter()
        .map(|&n| {
            if n > path.n_steps() {
                return Err(Error::invalid("checkpoint beyond the end of the path"));
            }
            let prefix = PathView { dt: path.dt, dim: path.dim, states: &path.states[..(n + 1) * path.dim] };
            let lw = (0..grid.len())
                .map(|k| Ok(prior_lw[k] + girsanov_loglik(family, &grid.node(k), theta0_reference, &prefix)?))
                .collect::<Result<Vec<f64>>>()?;
            let post = PosteriorGrid::new(grid.clone(), lw, n as f64 * path.dt)?;
            post.weights()?;
            Ok(post)
        })
        .collect()
}

/// Local asymptotic normality at θ0 over a horizon t:
/// log dP_{θ0+φ_t u}/dP_θ0 = Δ_t·u − ‖u‖² + r_t(u) + O(‖φ_t u‖³),
/// with φ_t = t^{−1/2} I^{−1/2}, Δ_t = φ_tᵀ score/σ² and
/// r_t(u) = ‖u‖² − ½ vᵀ quad v/σ² + ½ vᵀ second v/σ², v = φ_t u.
#[derive(Debug, Clone, PartialEq)]
pub struct LanDecomposition {
    pub dim_param: usize,
    pub sigma: f64,
    pub time: f64,
    /// Row-major p × p.
    pub phi: Vec<f64>,
    pub delta: Vec<f64>,
    /// Coupled limit surrogate t^{−1/2} I_{p,d} Σ ΔW.
    pub delta_infinity: Vec<f64>,
    quad: Vec<f64>,
    second: Vec<f64>,
}

impl LanDecomposition {
    pub fn from_statistics(st: &PathStatistics, fisher: &FisherInfo) -> Result<Self> {
        if fisher.non_identifiable {
            return Err(Error::NonIdentifiable { s1: fisher.s1() });
        }
        if !(st.time > 0.0) {
            return Err(Error::invalid("LAN decomposition needs a positive time horizon"));
        }
        let p = st.dim_param;
        if fisher.dim_param != p {
            return Err(Error::invalid("Fisher information has wrong parameter dimension"));
        }
        let scale = st.time.sqrt().recip();
        let phi: Vec<f64> = fisher.info_inverse_sqrt.iter().map(|v| v * scale).collect();
        let s2 = st.sigma * st.sigma;
        let delta = (0..p)
            .map(|a| (0..p).map(|i| phi[i * p + a] * st.score[i]).sum::<f64>() / s2)
            .collect();
        let delta_infinity = (0..p)
            .map(|a| if a < st.dim_state { scale * st.noise[a] } else { 0.0 })
            .collect();
        Ok(Self {
            dim_param: p,
            sigma: st.sigma,
            time: st.time,
            phi,
            delta,
            delta_infinity,
            quad: st.quad.clone(),
            second: st.second.clone(),
        })
    }

    /// v = φ_t u.
    pub fn local_step(&self, u: &[f64]) -> Vec<f64> {
        let p = self.dim_param;
        (0..p).map(|i| (0..p).map(|j| self.phi[i * p + j] * u[j]).sum()).collect()
    }

    pub fn delta_dot(&self, u: &[f64]) -> f64 {
        self.delta.iter().zip(u).map(|(a, b)| a * b).sum()
    }

    /// Explicit remainder terms r_t(u).
    pub fn remainder(&self, u: &[f64]) -> f64 {
        let p = self.dim_param;
        let v = self.local_step(u);
        let (mut q, mut s) = (0.0, 0.0);
        for i in 0..p {
            for j in 0..p {
                q += v[i] * self.quad[i * p + j] * v[j];
                s += v[i] * self.second[i * p + j] * v[j];
            }
        }
        let u2: f64 = u.iter().map(|x| x * x).sum();
        u2 + 0.5 * (s - q) / (self.sigma * self.sigma)
    }

    /// Δ_t·u − ‖u‖² + r_t(u).
    pub fn expansion(&self, u: &[f64]) -> f64 {
        let u2: f64 = u.iter().map(|x| x * x).sum();
        self.delta_dot(u) - u2 + self.remainder(u)
    }

    /// Operator norm of φ_t, σ s₁⁻¹ t^{−1/2}.
    pub fn phi_norm(&self) -> f64 {
        let m = DMatrix::from_row_slice(self.dim_param, self.dim_param, &self.phi);
        m.singular_values().max()
    }

    /// u = φ_t⁺ (θ − θ0).
    pub fn to_local(&self, h: &[f64]) -> Vec<f64> {
        let p = self.dim_param;
        let m = DMatrix::from_row_slice(p, p, &self.phi);
        let pinv = m.pseudo_inverse(1e-300).unwrap_or_else(|_| DMatrix::zeros(p, p));
        (0..p).map(|i| (0..p).map(|j| pinv[(i, j)] * h[j]).sum()).collect()
    }

    /// ‖Δ_t − Δ_∞‖², the per-path summand of ε_Δ.
    pub fn delta_gap_sq(&self) -> f64 {
        self.delta.iter().zip(&self.delta_infinity).map(|(a, b)| (a - b) * (a - b)).sum()
    }
}

/// LAN decomposition over the full path.
pub fn lan_decompose(
    family: &dyn DriftFamily,
    theta0: &[f64],
    fisher: &FisherInfo,
    path: &PathView<'_>,
) -> Result<LanDecomposition> {
    if fisher.non_identifiable {
        return Err(Error::NonIdentifiable { s1: fisher.s1() });
    }
    let st = sufficient_statistics(family, theta0, path, &[path.n_steps()])?;
    LanDecomposition::from_statistics(&st[0], fisher)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, stream_seed, tilted_ou_family, OrnsteinUhlenbeck};
    use crate::inference::grid::ParamGrid;
    use crate::measure::fisher_from_mean;
    use approx::assert_abs_diff_eq;

    #[test]
    fn loglik_vanishes_at_reference() {
        let f = tilted_ou_family(1.0, 0.3, 0.5).unwrap();
        let p = simulate(&f, &[0.4], &[0.0], 1e-3, 3000, 8, None).unwrap();
        assert_eq!(girsanov_loglik(&f, &[0.4], &[0.4], &p.view()).unwrap(), 0.0);
    }

    #[test]
    fn ou_loglik_matches_closed_form_sum() {
        let f = OrnsteinUhlenbeck::new(1, 0.6).unwrap();
        let path = simulate(&f, &[1.5], &[0.8], 1e-3, 5000, 17, None).unwrap();
        let (th, th0, s2) = (2.1, 1.5, 0.36);
        let xs = path.states();
        // independent oracle: −(1/2σ²) Σ (θ² − θ0²) x² dt − (1/σ²) Σ (θ − θ0) x dX
        let mut oracle = 0.0;
        for k in 0..xs.len() - 1 {
            oracle += -(th * th - th0 * th0) * xs[k] * xs[k] * 1e-3 / (2.0 * s2)
                - (th - th0) * xs[k] * (xs[k + 1] - xs[k]) / s2;
        }
        let ll = girsanov_loglik(&f, &[th], &[th0], &path.view()).unwrap();
        assert_abs_diff_eq!(ll, oracle, epsilon = 1e-12 * oracle.abs().max(1.0));
        let st = sufficient_statistics(&f, &[th0], &path.view(), &[path.n_steps()]).unwrap();
        assert_abs_diff_eq!(st[0].loglik_affine(&[th - th0]), oracle, epsilon = 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let f = OrnsteinUhlenbeck::new(2, 0.6).unwrap();
        let g = OrnsteinUhlenbeck::new(1, 0.6).unwrap();
        let path = simulate(&g, &[1.0], &[0.0], 1e-3, 10, 1, None).unwrap();
        assert!(girsanov_loglik(&f, &[1.0, 1.0], &[1.0, 1.0], &path.view()).is_err());
    }

    #[test]
    fn zero_length_path_leaves_prior_unchanged() {
        let f = tilted_ou_family(1.0, 0.0, 0.4).unwrap();
        let path = simulate(&f, &[0.0], &[0.0], 1e-3, 100, 1, None).unwrap();
        let prior = Prior::gaussian(ParamGrid::uniform_1d(-1.0, 1.0, 21).unwrap(), vec![0.2], 0.5).unwrap();
        let post = posterior_update(&prior, &f, &[0.0], &path.view_prefix(0)).unwrap();
        assert_eq!(post.weights().unwrap(), prior.weights().unwrap());
        assert_eq!(post.time_horizon(), 0.0);
    }

    #[test]
    fn equal_drifts_tie() {
        // θ enters only through ln cosh x, invisible on a path pinned at 0.
        let f = tilted_ou_family(1.0, 0.0, 0.4).unwrap();
        let path = crate::dynamics::Path::from_states(1e-3, 1, vec![0.0; 50], 0).unwrap();
        let prior = Prior::uniform(ParamGrid::uniform_1d(-1.0, 1.0, 2).unwrap());
        let w = posterior_update(&prior, &f, &[0.0], &path.view()).unwrap().weights().unwrap();
        assert_eq!(w[0], w[1]);
    }

    #[test]
    fn fast_path_matches_generic_sum() {
        let f = tilted_ou_family(1.0, 0.2, 0.5).unwrap();
        let path = simulate(&f, &[0.3], &[0.0], 1e-3, 4000, 5, None).unwrap();
        let grid = ParamGrid::uniform_1d(-1.0, 1.5, 11).unwrap();
        for k in 0..grid.len() {
            let th = grid.node(k);
            let st = sufficient_statistics(&f, &[0.3], &path.view(), &[4000]).unwrap();
            let generic = girsanov_loglik(&f, &th, &[0.3], &path.view()).unwrap();
            assert_abs_diff_eq!(st[0].loglik_affine(&[th[0] - 0.3]), generic, epsilon = 1e-9);
        }
    }

    #[test]
    fn lan_reconstruction_for_affine_family() {
        let f = tilted_ou_family(1.0, 0.0, 0.5).unwrap();
        let fisher = fisher_from_mean(1, 1, 0.5, vec![0.4], 1e-8).unwrap();
        for i in 0..5u64 {
            let path = simulate(&f, &[0.0], &[0.1], 1e-3, 5000, stream_seed(9, i), None).unwrap();
            let lan = lan_decompose(&f, &[0.0], &fisher, &path.view()).unwrap();
            for u in [-1.3, -0.2, 0.0, 0.7, 2.0] {
                let v = lan.local_step(&[u])[0];
                let exact = girsanov_loglik(&f, &[v], &[0.0], &path.view()).unwrap();
                assert_abs_diff_eq!(lan.expansion(&[u]), exact, epsilon = 1e-10);
            }
            assert_eq!(lan.delta_dot(&[0.0]), 0.0);
            assert_eq!(lan.remainder(&[0.0]), 0.0);
            assert_abs_diff_eq!(lan.phi_norm(), 0.5 / 0.4 / 5f64.sqrt(), epsilon = 1e-12);
            let back = lan.to_local(&lan.local_step(&[0.7]));
            assert_abs_diff_eq!(back[0], 0.7, epsilon = 1e-12);
        }
    }

    #[test]
    fn non_identifiable_fisher_is_rejected() {
        let f = tilted_ou_family(1.0, 0.0, 0.5).unwrap();
        let fisher = fisher_from_mean(1, 1, 0.5, vec![0.0], 1e-8).unwrap();
        let path = simulate(&f, &[0.0], &[0.1], 1e-3, 10, 1, None).unwrap();
        assert!(matches!(
            lan_decompose(&f, &[0.0], &fisher, &path.view()),
            Err(Error::NonIdentifiable { .. })
        ));
    }

    #[test]
    fn checkpoint_statistics_are_prefix_statistics() {
        let f = tilted_ou_family(1.0, 0.0, 0.5).unwrap();
        let path = simulate(&f, &[0.0], &[0.1], 1e-3, 3000, 4, None).unwrap();
        let all = sufficient_statistics(&f, &[0.0], &path.view(), &[0, 1000, 3000]).unwrap();
        let one = sufficient_statistics(&f, &[0.0], &path.view_prefix(1000), &[1000]).unwrap();
        assert_eq!(all[1], one[0]);
        assert_eq!(all[0].quad, vec![0.0]);
        assert!(sufficient_statistics(&f, &[0.0], &path.view(), &[10, 5]).is_err());
        assert!(sufficient_statistics(&f, &[0.0], &path.view(), &[4000]).is_err());
    }
}
