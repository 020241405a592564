//! Boundary condition descriptions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mesh::QuadMesh;

/// Boundary data `g(x, t)` written into an `m`-component slice.
pub type PointFn = Arc<dyn Fn([f64; 2], f64, &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub enum BoundaryKind {
    /// Prescribed solution `g_D`.
    Dirichlet(PointFn),
    /// Prescribed outward normal flux `g_N = F·n̄`.
    Neumann(PointFn),
    /// Dirichlet on components where `dirichlet[c]` is set, Neumann elsewhere.
    Mixed { dirichlet: Vec<bool>, g_d: PointFn, g_n: PointFn },
    /// Far-field state imposed through the numerical flux.
    Characteristic(PointFn),
    SlipWall,
    NoSlipAdiabatic,
}

impl BoundaryKind {
    /// Boundary data that does not vary in space or time.
    pub fn constant(values: Vec<f64>) -> PointFn {
        Arc::new(move |_, _, out: &mut [f64]| out.copy_from_slice(&values))
    }

    pub fn is_wall(&self) -> bool {
        matches!(self, BoundaryKind::SlipWall | BoundaryKind::NoSlipAdiabatic)
    }
}

impl fmt::Debug for BoundaryKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryKind::Dirichlet(_) => write!(f, "Dirichlet"),
            BoundaryKind::Neumann(_) => write!(f, "Neumann"),
            BoundaryKind::Mixed { dirichlet, .. } => write!(f, "Mixed({dirichlet:?})"),
            BoundaryKind::Characteristic(_) => write!(f, "Characteristic"),
            BoundaryKind::SlipWall => write!(f, "SlipWall"),
            BoundaryKind::NoSlipAdiabatic => write!(f, "NoSlipAdiabatic"),
        }
    }
}

/// Map from boundary tag to condition.
#[derive(Clone, Debug, Default)]
pub struct BoundaryConditions {
    pub map: BTreeMap<usize, BoundaryKind>,
}

impl BoundaryConditions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, tag: usize, kind: BoundaryKind) -> Self {
        self.map.insert(tag, kind);
        self
    }

    /// Same condition on every tag of `mesh`.
    pub fn uniform(mesh: &QuadMesh, kind: BoundaryKind) -> Self {
        let mut bc = Self::new();
        for t in mesh.tags() {
            bc.map.insert(t, kind.clone());
        }
        bc
    }

    pub fn get(&self, tag: usize) -> Option<&BoundaryKind> {
        self.map.get(&tag)
    }

    /// Every tag present in the mesh must have a condition.
    pub fn validate(&self, mesh: &QuadMesh, m: usize) -> Result<()> {
        for t in mesh.tags() {
            match self.map.get(&t) {
                None => return Err(Error::Config(format!("no boundary condition for tag {t}"))),
                Some(BoundaryKind::Mixed { dirichlet, .. }) if dirichlet.len() != m => {
                    return Err(Error::Config(format!(
                        "mixed condition on tag {t} has {} flags for {m} components",
                        dirichlet.len()
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }
}
