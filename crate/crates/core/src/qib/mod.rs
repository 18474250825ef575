//! Quantum bottleneck solver: channel evaluation, random search, the
//! self-consistent fixed-point iteration, and Lagrangian gradients.

mod fixed_point;
mod gradient;
mod instance;
pub mod presets;
mod search;

pub use crate::curve::{convexity_check, ConvexityReport, RateCurve};
pub use fixed_point::{fixed_point_curve, fixed_point_solve, FixedPointDiagnostics, FixedPointResult, INITIAL_PERTURBATION};
pub use gradient::{distortion_operator, lagrangian, lagrangian_gradient, stationarity, Gradient, Stationarity};
pub use instance::{
    analytic_dephasing_benchmark, build_instance, evaluate, evaluate_reference, DephasingReport, ProblemInstance,
    DEGENERACY_TOL,
};
pub use search::{mutate_channel, random_channel, random_search, rate_curve, SearchOutcome};
