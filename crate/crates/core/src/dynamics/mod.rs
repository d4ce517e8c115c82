//! Drift families and path simulation.

mod family;
mod potentials;
mod simulate;

pub use family::{
    check_derivatives, standard_probes, DerivativeReport, DriftFamily, GradientFamily1d,
    OrnsteinUhlenbeck, Potential1d, D2PARAM_TOL, DPARAM_TOL, GRADIENT_TOL,
};
pub use potentials::{
    bump_wells_family, cutoff_family, cutoff_family_with_side, degenerate_double_well_family,
    double_well_family, tilted_ou_family, BumpWells, Cutoff, CutoffSide, DegenerateDoubleWell,
    DoubleWell, TiltedOu, DEFAULT_CUT_POINT,
};
pub use simulate::{
    simulate, simulate_until_exit, stream_seed, Domain, EulerMaruyama, Path, PathView,
    DEFAULT_DT,
};
