pub mod checks;
pub mod classical_ib;
pub mod config;
pub mod curve;
pub mod error;
pub mod linalg;
pub mod qib;
pub mod qstate;

pub use config::{ConstraintMode, SolverConfig};
pub use curve::{convexity_check, ConvexityReport, CurvePoint, Evaluation, PointStatus, RateCurve};
pub use error::{Error, Infeasibility, Result};
