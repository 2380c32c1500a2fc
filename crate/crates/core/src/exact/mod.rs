//! Exact bottleneck solving on finite joints.

mod distortion;
mod mss;
mod plane;
mod solver;

pub use distortion::{distortion_matrix, DistortionMatrix};
pub use mss::{minimal_sufficient_statistic, MssPartition, DEFAULT_TAU_MSS};
pub use plane::{flat_portion_check, information_plane_summary, tangent_intercept, FlatPortionReport, PlaneSummary};
pub use solver::{
    ba_step, critical_beta_bracket, initial_encoder, solve_at_beta, solve_from, trace_curve, IBCurve, OperatingPoint,
    SolverConfig, TRIVIAL_RATE,
};
