//! Line-based discontinuous Galerkin discretization of conservation laws on
//! unstructured quadrilateral meshes, with matrix-free implicit solvers.

pub mod basis;
pub mod discretization;
pub mod driver;
pub mod error;
pub mod mesh;
pub mod physics;
pub mod sparse;
pub mod time;

pub use error::{Error, Result};
