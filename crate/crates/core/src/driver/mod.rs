//! Configuration-driven runs: built-in cases, convergence sweeps, error
//! norms, forces and output files.

pub mod cases;
pub mod config;
pub mod functionals;
pub mod report;

pub use cases::{
    base_mesh, cylinder_discretization, cylinder_free_stream, density_error, level_mesh, refine_mesh_file, run_case,
    sparsity_table, vortex_discretization, LevelSummary, RunOutput,
};
pub use config::{Case, Integrator, RunConfig};
pub use functionals::{boundary_forces, dump_field, entropy_error, error_norms, read_field, ForceReference};
pub use report::{rates, ConvergenceReport, ConvergenceRow, FLOATING_FLOOR};

use crate::error::Error;

/// Process exit code for an error: 2 for configuration and input problems,
/// 3 for solver failures.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::InvalidArgument(_)
        | Error::NonConforming(_)
        | Error::InvertedElement { .. }
        | Error::Io(_) => 2,
        _ => 3,
    }
}
