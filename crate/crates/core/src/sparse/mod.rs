//! Sparse Jacobians, the split matrix-vector product, GMRES and the
//! block-Jacobi preconditioner.

pub mod assembly;
pub mod csc;
pub mod direct;
pub mod gmres;
pub mod pattern;
pub mod precond;

pub use assembly::{
    assemble_jacobians, gradient_is_linear, split_matvec, JacobianAssembler, JacobianBlocks, JacobianMode,
    JacobianStamp,
};
pub use csc::CscMatrix;
pub use direct::{kkt_matrix, kkt_solve, sparse_solve};
pub use gmres::{gmres, GmresOutcome};
pub use pattern::{observed_block_counts, NodePattern};
pub use precond::BlockJacobiPreconditioner;

#[cfg(test)]
mod tests;
