//! Quadrilateral meshes, element geometry and switch assignment.

pub mod mapping;
pub mod quad;
pub mod switches;

pub use mapping::{compute_mapping, face_node, CurveFn, ElementMapping};
pub use quad::{
    annulus, annulus_projection, annulus_tags, load_mesh, perturb_interior, rect_tags, rectangle, refine_uniform,
    unit_square, Face,
    FaceSide, PeriodicPair, QuadMesh,
};
pub use switches::{assign_switches, face_dir, face_is_plus, SwitchAssignment};
