//! Newton system backed by a Line-DG discretization.

use super::newton::NewtonSystem;
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::physics::PhysicsModel;
use crate::sparse::{gmres, kkt_solve, BlockJacobiPreconditioner, JacobianAssembler, JacobianBlocks, JacobianMode};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearSolver {
    /// GMRES on the split operator, optionally with the block-Jacobi
    /// preconditioner.
    Gmres { precondition: bool },
    /// Sparse LU of the coupled `(U, Q)` system.
    Direct,
}

/// `F(U) = R(U, D(U))` on a discretization with `C22 = 0`, with
/// Jacobian blocks, preconditioner and linear solver.
pub struct DgSystem<'a, M> {
    disc: &'a Discretization<M>,
    assembler: JacobianAssembler,
    blocks: Option<JacobianBlocks>,
    precond: Option<BlockJacobiPreconditioner>,
    shift: (f64, f64),
    pub linear: LinearSolver,
    /// Relative tolerance of the inner GMRES solves.
    pub gmres_rtol: f64,
    evaluations: usize,
}

impl<'a, M: PhysicsModel> DgSystem<'a, M> {
    pub fn new(disc: &'a Discretization<M>, mode: JacobianMode, linear: LinearSolver) -> Self {
        Self {
            disc,
            assembler: JacobianAssembler::new(disc, mode),
            blocks: None,
            precond: None,
            shift: (1.0, 0.0),
            linear,
            gmres_rtol: 1e-12,
            evaluations: 0,
        }
    }

    pub fn disc(&self) -> &Discretization<M> {
        self.disc
    }

    pub fn blocks(&self) -> Option<&JacobianBlocks> {
        self.blocks.as_ref()
    }

    /// Residual evaluations so far.
    pub fn evaluations(&self) -> usize {
        self.evaluations
    }

    fn preconditioner(&mut self) -> Result<&BlockJacobiPreconditioner> {
        if self.precond.is_none() {
            let b = self.blocks.as_ref().ok_or_else(|| Error::invalid("no Jacobian assembled"))?;
            self.precond = Some(BlockJacobiPreconditioner::build_shifted(b, self.shift.0, self.shift.1)?);
        }
        Ok(self.precond.as_ref().unwrap())
    }
}

impl<M: PhysicsModel> NewtonSystem for DgSystem<'_, M> {
    fn dim(&self) -> usize {
        self.disc.n_dofs()
    }

    fn rhs(&mut self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        self.evaluations += 1;
        self.disc.residual_primal(u, t)
    }

    fn refresh_jacobian(&mut self, u: &[f64], t: f64) -> Result<()> {
        self.blocks = Some(self.assembler.assemble(self.disc, u, None, t)?);
        self.precond = None;
        Ok(())
    }

    fn has_jacobian(&self) -> bool {
        self.blocks.is_some()
    }

    fn jacobian_count(&self) -> usize {
        self.assembler.assemblies()
    }

    fn set_shift(&mut self, sigma: f64, beta: f64) -> Result<()> {
        if (sigma, beta) != self.shift {
            self.shift = (sigma, beta);
            self.precond = None;
        }
        Ok(())
    }

    fn solve(&mut self, b: &[f64], iters: usize) -> Result<(Vec<f64>, usize)> {
        let (sigma, beta) = self.shift;
        match self.linear {
            LinearSolver::Direct => {
                let blocks = self.blocks.as_ref().ok_or_else(|| Error::invalid("no Jacobian assembled"))?;
                let zeros = vec![0.0; blocks.n_aux()];
                Ok((kkt_solve(blocks, sigma, beta, b, &zeros)?.0, 1))
            }
            LinearSolver::Gmres { precondition } => {
                if precondition {
                    self.preconditioner()?;
                }
                let blocks = self.blocks.as_ref().ok_or_else(|| Error::invalid("no Jacobian assembled"))?;
                let op = |x: &[f64], y: &mut [f64]| blocks.shifted_apply(sigma, beta, x, y);
                let out = match &self.precond {
                    Some(pc) if precondition => gmres(op, |x: &[f64], y: &mut [f64]| pc.apply(x, y), b, self.gmres_rtol, iters, 0)?,
                    _ => gmres(op, crate::sparse::gmres::identity, b, self.gmres_rtol, iters, 0)?,
                };
                Ok((out.x, out.iterations))
            }
        }
    }
}
