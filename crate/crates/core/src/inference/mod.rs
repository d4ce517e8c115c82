//! Girsanov likelihoods, LAN decomposition and grid posteriors.

mod girsanov;
mod grid;

pub use girsanov::{
    girsanov_loglik, lan_decompose, posterior_at_checkpoints, posterior_update,
    sufficient_statistics, LanDecomposition, PathStatistics,
};
pub use grid::{
    anneal, ball_mass, log_sum_exp, marginalize, GaussianFactor, GridAxis, ParamGrid,
    PosteriorGrid, Prior,
};
