//! Euler–Maruyama simulation with seeded, per-path ChaCha streams.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::family::DriftFamily;
use crate::{Error, Result};

pub const DEFAULT_DT: f64 = 1e-3;

/// Seed of path `index` in an ensemble with `master` seed. Each index reads
/// its own ChaCha stream, so the value does not depend on evaluation order.
pub fn stream_seed(master: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng.next_u64()
}

/// Closed ball `B_radius(center)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    center: Vec<f64>,
    radius: f64,
}

impl Domain {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::invalid(format!("domain radius must be > 0, got {radius}")));
        }
        if center.is_empty() || center.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("domain center must be a finite, non-empty vector"));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let d2: f64 = self.center.iter().zip(x).map(|(c, xi)| (xi - c) * (xi - c)).sum();
        d2 <= self.radius * self.radius
    }
}

/// A discretized trajectory with uniform step `dt`. States are stored
/// flattened, `dim` values per time point.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    dt: f64,
    dim: usize,
    states: Vec<f64>,
    seed: u64,
    exit_step: Option<usize>,
}

/// Borrowed prefix of a [`Path`].
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    pub dt: f64,
    pub dim: usize,
    pub states: &'a [f64],
}

impl<'a> PathView<'a> {
    pub fn n_steps(&self) -> usize {
        self.states.len() / self.dim - 1
    }

    pub fn state(&self, k: usize) -> &'a [f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }

    pub fn time_horizon(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }
}

impl Path {
    /// Wraps externally produced states. `states.len()` must be a non-zero
    /// multiple of `dim` and all entries finite.
    pub fn from_states(dt: f64, dim: usize, states: Vec<f64>, seed: u64) -> Result<Self> {
        if !(dt > 0.0) || dim == 0 || states.is_empty() || states.len() % dim != 0 {
            return Err(Error::invalid("path needs dt > 0 and at least one state"));
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("path states must be finite"));
        }
        Ok(Self { dt, dim, states, seed, exit_step: None })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn exit_step(&self) -> Option<usize> {
        self.exit_step
    }
    pub fn len(&self) -> usize {
        self.states.len() / self.dim
    }
    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
    pub fn n_steps(&self) -> usize {
        self.len() - 1
    }
    pub fn time_horizon(&self) -> f64 {
        self.n_steps() as f64 * self.dt
    }
    pub fn state(&self, k: usize) -> &[f64] {
        &self.states[k * self.dim..(k + 1) * self.dim]
    }
    pub fn states(&self) -> &[f64] {
        &self.states
    }
    pub fn last(&self) -> &[f64] {
        self.state(self.len() - 1)
    }

    pub fn view(&self) -> PathView<'_> {
        PathView { dt: self.dt, dim: self.dim, states: &self.states }
    }

    /// The first `n_steps` increments (n_steps + 1 states).
    pub fn view_prefix(&self, n_steps: usize) -> PathView<'_> {
        let n = (n_steps + 1).min(self.len());
        PathView { dt: self.dt, dim: self.dim, states: &self.states[..n * self.dim] }
    }
}

/// Streaming Euler–Maruyama integrator
/// X_{k+1} = X_k + V_θ(X_k) dt + σ √dt Z_k.
pub struct EulerMaruyama<'a> {
    family: &'a dyn DriftFamily,
    theta: &'a [f64],
    dt: f64,
    noise_scale: f64,
    rng: ChaCha8Rng,
    seed: u64,
    x: Vec<f64>,
    drift: Vec<f64>,
    step: usize,
}

impl<'a> EulerMaruyama<'a> {
    pub fn new(
        family: &'a dyn DriftFamily,
        theta: &'a [f64],
        x0: &[f64],
        dt: f64,
        seed: u64,
    ) -> Result<Self> {
        let d = family.dim_state();
        if x0.len() != d {
            return Err(Error::invalid(format!("x0 has dimension {}, expected {d}", x0.len())));
        }
        if theta.len() != family.dim_param() {
            return Err(Error::invalid("parameter has wrong dimension"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBlowup { step: 0, seed });
        }
        Ok(Self {
            family,
            theta,
            dt,
            noise_scale: family.sigma() * dt.sqrt(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
            x: x0.to_vec(),
            drift: vec![0.0; d],
            step: 0,
        })
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn advance(&mut self) -> Result<&[f64]> {
        self.family.drift(self.theta, &self.x, &mut self.drift);
        for (xi, vi) in self.x.iter_mut().zip(&self.drift) {
            let z: f64 = self.rng.sample(StandardNormal);
            *xi += vi * self.dt + self.noise_scale * z;
        }
        self.step += 1;
        if self.x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericalBlowup { step: self.step, seed: self.seed });
        }
        Ok(&self.x)
    }
}

/// Simulates `n_steps` Euler–Maruyama steps from `x0`. With `exit_domain`
/// the first state outside the domain is recorded; the trajectory itself is
/// not stopped.
pub fn simulate(
    family: &dyn DriftFamily,
    theta: &[f64],
    x0: &[f64],
    dt: f64,
    n_steps: usize,
    seed: u64,
    exit_domain: Option<&Domain>,
) -> Result<Path> {
    if n_steps == 0 {
        return Err(Error::invalid("n_steps must be >= 1"));
    }
    let mut em = EulerMaruyama::new(family, theta, x0, dt, seed)?;
    let d = family.dim_state();
    let mut states = Vec::with_capacity((n_steps + 1) * d);
    states.extend_from_slice(x0);
    let mut exit_step = exit_domain.and_then(|dom| (!dom.contains(x0)).then_some(0));
    for k in 1..=n_steps {
        let x = em.advance()?;
        if exit_step.is_none() {
            if let Some(dom) = exit_domain {
                if !dom.contains(x) {
                    exit_step = Some(k);
                }
            }
        }
        states.extend_from_slice(x);
    }
    Ok(Path { dt, dim: d, states, seed, exit_step })
}

/// Runs until the first exit from `domain` or `max_steps`, without storing
/// the trajectory. Returns the exit step, `None` if censored.
pub fn simulate_until_exit(
    family: &dyn DriftFamily,
    theta: &[f64],
    x0: &[f64],
    dt: f64,
    max_steps: usize,
    seed: u64,
    domain: &Domain,
) -> Result<Option<usize>> {
    if !domain.contains(x0) {
        return Ok(Some(0));
    }
    let mut em = EulerMaruyama::new(family, theta, x0, dt, seed)?;
    for k in 1..=max_steps {
        if !domain.contains(em.advance()?) {
            return Ok(Some(k));
        }
    }
    Ok(None)
}
