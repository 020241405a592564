//! Time integration and nonlinear solvers.

pub mod dg_system;
pub mod dirk;
pub mod explicit;
pub mod newton;
pub mod steady;

pub use dg_system::{DgSystem, LinearSolver};
pub use dirk::{dirk3_step, write_stats_csv, DirkIntegrator, DirkStepStats, DirkTableau, StageRecord};
pub use explicit::{rk4_integrate, rk4_step};
pub use newton::{newton_solve, DenseSystem, NewtonConfig, NewtonStats, NewtonSystem};
pub use steady::{geometric_schedule, pseudo_transient_steady, solve_split_steady, SteadyStats};
