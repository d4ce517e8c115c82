//! Bayesian inference for parameterized diffusions with quantitative
//! posterior-contraction bounds for metastable systems.
//!
//! The crate is organised bottom-up:
//!
//! - [`dynamics`]: drift families (double wells, cutoffs, bump wells, OU) and
//!   Euler–Maruyama path simulation with exit detection.
//! - [`measure`]: ergodic densities by Gauss–Legendre quadrature, Laplace
//!   moments and the Fisher matrix.
//! - [`spectral`]: critical points, Eyring–Kramers and Bakry–Émery gaps, and
//!   the exponential escape model.
//! - [`inference`]: Girsanov log-likelihoods, LAN decomposition, grid
//!   posteriors, marginals and annealed products.
//! - [`bounds`]: the H(t) / Ĥ(t) bound curves and the metaconsistency window.
//! - [`experiments`]: seeded Monte Carlo studies and their CSV reports.
//!
//! Path ensembles and grid sweeps run on rayon when the `parallel` feature is
//! enabled (the default); see [`par`].

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod inference;
pub mod measure;
pub mod par;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
