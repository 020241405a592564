//! Jacobian blocks `K11 = ∂R/∂U`, `K12 = ∂R/∂Q`, `K21 = ∂D/∂U`, `K22 = ∂D/∂Q`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::csc::CscMatrix;
use super::pattern::NodePattern;
use crate::discretization::{BoundaryKind, Discretization, JacobianRequest};
use crate::error::{Error, Result};
use crate::physics::PhysicsModel;

/// How the Jacobian entries are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum JacobianMode {
    /// Forward-mode differentiation of the line kernels.
    #[default]
    Analytic,
    /// Central differences over distance-2 column colors.
    FiniteDifference,
}

/// Point at which a set of blocks was assembled.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JacobianStamp {
    pub t: f64,
    pub state_hash: u64,
}

impl JacobianStamp {
    pub fn new(u: &[f64], t: f64) -> Self {
        let mut h = DefaultHasher::new();
        for v in u {
            v.to_bits().hash(&mut h);
        }
        Self { t, state_hash: h.finish() }
    }
}

#[derive(Clone, Debug)]
pub struct JacobianBlocks {
    /// Components per node.
    pub m: usize,
    /// Nodes per element line, `p + 1`.
    pub np: usize,
    pub k11: CscMatrix,
    /// Present for second-order models.
    pub k12: Option<CscMatrix>,
    /// Present for second-order models. Shared between assemblies when the
    /// gradient operator is linear.
    pub k21: Option<Arc<CscMatrix>>,
    /// Present only when `C22 > 0`.
    pub k22: Option<CscMatrix>,
    pub stamp: JacobianStamp,
}

impl JacobianBlocks {
    pub fn n_dofs(&self) -> usize {
        self.k11.nrows()
    }

    pub fn n_aux(&self) -> usize {
        self.k12.as_ref().map_or(0, CscMatrix::ncols)
    }

    /// `out = σ v + β (K11 v + K12 (K21 v))`. Requires `K22` to be absent.
    pub fn shifted_apply(&self, sigma: f64, beta: f64, v: &[f64], out: &mut [f64]) -> Result<()> {
        if self.k22.is_some() {
            return Err(Error::invalid("the reduced operator needs C22 = 0"));
        }
        if v.len() != self.n_dofs() || out.len() != self.n_dofs() {
            return Err(Error::invalid(format!(
                "operator of size {} applied to vectors of length {} and {}",
                self.n_dofs(),
                v.len(),
                out.len()
            )));
        }
        for (o, &x) in out.iter_mut().zip(v) {
            *o = sigma * x;
        }
        self.k11.mul_add(beta, v, out)?;
        if let (Some(k12), Some(k21)) = (&self.k12, &self.k21) {
            let g = k21.matvec(v)?;
            k12.mul_add(beta, &g, out)?;
        }
        Ok(())
    }
}

/// `(I - αΔt (K11 + K12 K21)) v` as nested sparse products.
pub fn split_matvec(blocks: &JacobianBlocks, alpha_dt: f64, v: &[f64]) -> Result<Vec<f64>> {
    if v.len() != blocks.n_dofs() {
        return Err(Error::invalid(format!("vector of length {} for {} unknowns", v.len(), blocks.n_dofs())));
    }
    if alpha_dt == 0.0 {
        return Ok(v.to_vec());
    }
    let mut out = vec![0.0; v.len()];
    blocks.shifted_apply(1.0, -alpha_dt, v, &mut out)?;
    Ok(out)
}

/// Whether `D` is affine in `U` and independent of `Q`, so that `K21` is
/// constant.
pub fn gradient_is_linear<M: PhysicsModel>(disc: &Discretization<M>) -> bool {
    disc.params.c22 == 0.0 && !disc.bcs.map.values().any(|b| matches!(b, BoundaryKind::NoSlipAdiabatic))
}

/// Assembles Jacobian blocks on a fixed discretization, caching the
/// pattern, the column coloring and a constant `K21`.
pub struct JacobianAssembler {
    mode: JacobianMode,
    pattern: NodePattern,
    coloring: Option<(Vec<usize>, usize)>,
    k21: Option<Arc<CscMatrix>>,
    assemblies: usize,
}

impl JacobianAssembler {
    pub fn new<M: PhysicsModel>(disc: &Discretization<M>, mode: JacobianMode) -> Self {
        Self::with_pattern(NodePattern::line_dg(disc), mode)
    }

    /// Assembler restricted to a caller-supplied node pattern. Couplings
    /// outside it are reported as consistency errors.
    pub fn with_pattern(pattern: NodePattern, mode: JacobianMode) -> Self {
        Self { mode, pattern, coloring: None, k21: None, assemblies: 0 }
    }

    pub fn mode(&self) -> JacobianMode {
        self.mode
    }

    pub fn pattern(&self) -> &NodePattern {
        &self.pattern
    }

    /// Number of completed assemblies.
    pub fn assemblies(&self) -> usize {
        self.assemblies
    }

    /// Assembles at `(U, Q, t)`. `q = None` uses the gradient `D(U)`, which
    /// requires `C22 = 0` for second-order models.
    pub fn assemble<M: PhysicsModel>(
        &mut self,
        disc: &Discretization<M>,
        u: &[f64],
        q: Option<&[f64]>,
        t: f64,
    ) -> Result<JacobianBlocks> {
        if u.len() != disc.n_dofs() {
            return Err(Error::invalid(format!("state has {} entries, expected {}", u.len(), disc.n_dofs())));
        }
        if let Some(k) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("state entry {k} is not finite")));
        }
        let m = disc.ncomp();
        let viscous = disc.model.is_viscous();
        let q = match (viscous, q) {
            (true, Some(q)) => q.to_vec(),
            (true, None) => disc.primal_gradient(u, t)?,
            (false, _) => vec![0.0; disc.n_aux()],
        };
        let mut blocks = JacobianBlocks {
            m,
            np: disc.basis.n_nodes(),
            k11: self.pattern.expand(m, m),
            k12: viscous.then(|| self.pattern.expand(m, 2 * m)),
            k21: None,
            k22: (viscous && disc.params.c22 != 0.0).then(|| self.pattern.expand(2 * m, 2 * m)),
            stamp: JacobianStamp::new(u, t),
        };
        let cached = self.mode == JacobianMode::Analytic && self.k21.is_some();
        let mut k21 = (viscous && !cached).then(|| self.pattern.expand(2 * m, m));
        match self.mode {
            JacobianMode::Analytic => self.analytic(disc, u, &q, t, &mut blocks, k21.as_mut())?,
            JacobianMode::FiniteDifference => self.finite_difference(disc, u, &q, t, &mut blocks, k21.as_mut())?,
        }
        blocks.k21 = match k21 {
            Some(k) => {
                let k = Arc::new(k);
                if self.mode == JacobianMode::Analytic && gradient_is_linear(disc) {
                    self.k21 = Some(k.clone());
                }
                Some(k)
            }
            None => self.k21.clone(),
        };
        self.assemblies += 1;
        Ok(blocks)
    }

    fn analytic<M: PhysicsModel>(
        &self,
        disc: &Discretization<M>,
        u: &[f64],
        q: &[f64],
        t: f64,
        b: &mut JacobianBlocks,
        mut k21: Option<&mut CscMatrix>,
    ) -> Result<()> {
        let m = b.m;
        let viscous = k21.is_some() || b.k12.is_some();
        let req = JacobianRequest {
            wrt_u: true,
            wrt_q: viscous,
            r: true,
            d: k21.is_some() || b.k22.is_some(),
        };
        let mut outside = None;
        disc.line_jacobians(u, q, t, req, |lj| {
            let nin = lj.inputs.len();
            for (k, &gn) in lj.info.gnodes.iter().enumerate() {
                if req.r {
                    for c in 0..m {
                        let (row, lr) = (gn * m + c, k * m + c);
                        for (v, &(is_q, idx)) in lj.inputs.iter().enumerate() {
                            let target = if is_q { b.k12.as_mut() } else { Some(&mut b.k11) };
                            if let Some(a) = target {
                                if !a.add_at(row, idx, lj.dr[lr * nin + v]) {
                                    outside = Some((row, idx));
                                }
                            }
                        }
                    }
                }
                if req.d {
                    for s in 0..2 * m {
                        let (row, lr) = (gn * 2 * m + s, k * 2 * m + s);
                        for (v, &(is_q, idx)) in lj.inputs.iter().enumerate() {
                            let target = if is_q { b.k22.as_mut() } else { k21.as_deref_mut() };
                            if let Some(a) = target {
                                if !a.add_at(row, idx, lj.dd[lr * nin + v]) {
                                    outside = Some((row, idx));
                                }
                            }
                        }
                    }
                }
            }
        })?;
        if let Some((i, j)) = outside {
            return Err(Error::Consistency(format!("line Jacobian entry ({i}, {j}) outside the Line-DG pattern")));
        }
        if disc.model.has_source() {
            for g in 0..disc.n_nodes() {
                let (su, sq) = disc.source_jacobian(u, q, t, g);
                for r in 0..m {
                    for c in 0..m {
                        b.k11.add_at(g * m + r, g * m + c, su[r * m + c]);
                    }
                    if let Some(k12) = b.k12.as_mut() {
                        for s in 0..2 * m {
                            k12.add_at(g * m + r, g * 2 * m + s, sq[r * 2 * m + s]);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn finite_difference<M: PhysicsModel>(
        &mut self,
        disc: &Discretization<M>,
        u: &[f64],
        q: &[f64],
        t: f64,
        b: &mut JacobianBlocks,
        mut k21: Option<&mut CscMatrix>,
    ) -> Result<()> {
        let m = b.m;
        let viscous = b.k12.is_some();
        if self.coloring.is_none() {
            self.coloring = Some(self.pattern.column_coloring());
        }
        let (color, ncolors) = self.coloring.as_ref().unwrap();
        let mut groups = vec![Vec::new(); *ncolors];
        for (j, &c) in color.iter().enumerate() {
            groups[c].push(j);
        }
        let eval = |u: &[f64], q: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
            if viscous {
                disc.residual_second_order(u, q, t)
            } else {
                Ok((disc.residual_first_order(u, t)?, Vec::new()))
            }
        };
        let pattern = &self.pattern;
        // writes one colored column group into `a`; rows with no colored
        // column in their stencil must not change
        let scatter = |a: Option<&mut CscMatrix>,
                       plus: &[f64],
                       minus: &[f64],
                       rb: usize,
                       cb: usize,
                       comp: usize,
                       col_color: usize,
                       steps: &[f64]|
         -> Result<()> {
            let mut a = a;
            for (i, (&p, &mn)) in plus.iter().zip(minus).enumerate() {
                let diff = p - mn;
                if diff == 0.0 {
                    continue;
                }
                let rn = i / rb;
                match pattern.row(rn).iter().find(|&&j| color[j] == col_color) {
                    Some(&j) => {
                        if let Some(a) = a.as_deref_mut() {
                            a.add_at(i, j * cb + comp, diff / steps[j]);
                        }
                    }
                    None => {
                        let v = diff / 2e-7;
                        if v.abs() > 1e-12 {
                            return Err(Error::Consistency(format!(
                                "row {i} changed by {v:e} under a perturbation outside its stencil"
                            )));
                        }
                    }
                }
            }
            Ok(())
        };

        let n_nodes = disc.n_nodes();
        let mut steps = vec![0.0; n_nodes];
        for (c, group) in groups.iter().enumerate() {
            for comp in 0..m {
                let (mut up, mut um) = (u.to_vec(), u.to_vec());
                for &j in group {
                    let k = j * m + comp;
                    let h = 1e-7 * (1.0 + u[k].abs());
                    up[k] += h;
                    um[k] -= h;
                    steps[j] = up[k] - um[k];
                }
                let (rp, dp) = eval(&up, q)?;
                let (rm, dm) = eval(&um, q)?;
                scatter(Some(&mut b.k11), &rp, &rm, m, m, comp, c, &steps)?;
                if viscous {
                    scatter(k21.as_deref_mut(), &dp, &dm, 2 * m, m, comp, c, &steps)?;
                }
            }
            if !viscous {
                continue;
            }
            for comp in 0..2 * m {
                let (mut qp, mut qm) = (q.to_vec(), q.to_vec());
                for &j in group {
                    let k = j * 2 * m + comp;
                    let h = 1e-7 * (1.0 + q[k].abs());
                    qp[k] += h;
                    qm[k] -= h;
                    steps[j] = qp[k] - qm[k];
                }
                let (rp, dp) = eval(u, &qp)?;
                let (rm, dm) = eval(u, &qm)?;
                scatter(b.k12.as_mut(), &rp, &rm, m, 2 * m, comp, c, &steps)?;
                scatter(b.k22.as_mut(), &dp, &dm, 2 * m, 2 * m, comp, c, &steps)?;
            }
        }

        // a coupling missing from the stencil is misattributed whenever its
        // column shares a color with an in-stencil column; a random
        // directional derivative exposes it
        let mut rng = ChaCha8Rng::seed_from_u64(0x11d9);
        let mut direction = |x: &[f64]| -> Vec<f64> {
            x.iter().map(|v| 1e-7 * (1.0 + v.abs()) * rng.gen_range(-1.0..1.0)).collect()
        };
        let shifted = |x: &[f64], dx: &[f64], s: f64| -> Vec<f64> { x.iter().zip(dx).map(|(a, b)| a + s * b).collect() };
        let du = direction(u);
        let (rp, dp) = eval(&shifted(u, &du, 1.0), q)?;
        let (rm, dm) = eval(&shifted(u, &du, -1.0), q)?;
        probe(Some(&b.k11), &du, &rp, &rm, "dR/dU")?;
        if viscous {
            probe(k21.as_deref(), &du, &dp, &dm, "dD/dU")?;
            let dq = direction(q);
            let (rp, dp) = eval(u, &shifted(q, &dq, 1.0))?;
            let (rm, dm) = eval(u, &shifted(q, &dq, -1.0))?;
            probe(b.k12.as_ref(), &dq, &rp, &rm, "dR/dQ")?;
            probe(b.k22.as_ref(), &dq, &dp, &dm, "dD/dQ")?;
        }
        Ok(())
    }
}

/// Compares `A dx` with the central difference `(plus - minus) / 2`.
fn probe(a: Option<&CscMatrix>, dx: &[f64], plus: &[f64], minus: &[f64], what: &str) -> Result<()> {
    let pred = match a {
        Some(a) => a.matvec(dx)?,
        None => vec![0.0; plus.len()],
    };
    let (mut err, mut scale) = (0.0f64, 0.0f64);
    for ((p, m), a) in plus.iter().zip(minus).zip(&pred) {
        let fd = 0.5 * (p - m);
        err += (fd - a).powi(2);
        scale += fd * fd + a * a;
    }
    if err.sqrt() > 1e-4 * scale.sqrt() {
        return Err(Error::Consistency(format!(
            "{what} misses couplings outside the stencil: directional error {:e} of {:e}",
            err.sqrt(),
            scale.sqrt()
        )));
    }
    Ok(())
}

/// One-shot assembly with a fresh [`JacobianAssembler`].
pub fn assemble_jacobians<M: PhysicsModel>(
    disc: &Discretization<M>,
    u: &[f64],
    q: Option<&[f64]>,
    t: f64,
    mode: JacobianMode,
) -> Result<JacobianBlocks> {
    JacobianAssembler::new(disc, mode).assemble(disc, u, q, t)
}
