use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical blow-up at step {step} (seed {seed})")]
    NumericalBlowup { step: usize, seed: u64 },

    #[error("cutoff is not convex: U''(cut point) = {curvature}")]
    NonConvexCutoff { curvature: f64 },

    #[error("potential is not uniformly convex: minimum curvature {min_curvature} on the probe box")]
    NonConvex { min_curvature: f64 },

    #[error("degenerate critical point at x = {x} (U'' = {curvature})")]
    NonMorse { x: f64, curvature: f64 },

    #[error("not metastable: {0}")]
    NotMetastable(String),

    #[error("non-identifiable model: smallest singular value {s1} below threshold")]
    NonIdentifiable { s1: f64 },

    #[error("invalid Laplace expansion: {0}")]
    InvalidExpansion(String),

    #[error("posterior weights degenerate (all underflow or non-finite)")]
    DegeneratePosterior,

    #[error("integration box truncates the density: boundary/peak ratio {ratio:e}")]
    Truncation { ratio: f64 },

    #[error("infeasible regime: predicted mean exit time {predicted_mean:e} exceeds {limit:e}")]
    InfeasibleRegime { predicted_mean: f64, limit: f64 },

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
