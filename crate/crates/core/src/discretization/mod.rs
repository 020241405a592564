//! Line-DG residual operators.
//!
//! Global vectors are laid out element by element, node by node: the solution
//! `U` has entry `(e * (p+1)^2 + node) * m + c` and the auxiliary gradient `Q`
//! has entry `((e * (p+1)^2 + node) * m + c) * 2 + s`. Node `(i, j)` of an
//! element has local index `i + (p + 1) * j`.
//!
//! The semi-discrete system is
//! `dU/dt = R(U, Q) = S - (r1 + r2) / J` with `Q = D(U, Q) = (d1 + d2) / J`,
//! where `r_n` and `d_n` are one-dimensional DG residuals along the lines of
//! reference direction `n`.

pub mod bc;
pub mod line;

pub use bc::{BoundaryConditions, BoundaryKind, PointFn};
pub use line::LineOps;

use crate::basis::{NodalBasis1D, NodeRule};
use crate::error::{Error, Result};
use crate::mesh::{assign_switches, compute_mapping, face_node, CurveFn, ElementMapping, QuadMesh, SwitchAssignment};
use crate::physics::{Dual, PhysicsModel, Scalar};
use line::{line_kernel, EndState, KernelCtx, LineGeom};

#[cfg(test)]
mod tests;

/// LDG stabilization parameters. The `C12` coefficient is fixed to `n S / 2`
/// through the switch assignment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LdgParams {
    pub c11: f64,
    pub c22: f64,
    /// Penalty on Dirichlet-type boundaries; `None` selects `p^2 / h_face`.
    pub c11_boundary: Option<f64>,
}

impl Default for LdgParams {
    fn default() -> Self {
        Self { c11: 0.0, c22: 0.0, c11_boundary: None }
    }
}

impl LdgParams {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(self.c11) && ok(self.c22) && self.c11_boundary.is_none_or(ok)) {
            return Err(Error::invalid(format!("LDG parameters must be finite and non-negative: {self:?}")));
        }
        Ok(())
    }

    pub fn boundary_penalty(&self, p: usize, h: f64) -> f64 {
        self.c11_boundary.unwrap_or((p * p) as f64 / h)
    }
}

/// Solution values `u_ijk` per element and node.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub m: usize,
    pub nodes_per_elem: usize,
    pub values: Vec<f64>,
}

impl FieldState {
    pub fn node(&self, e: usize, n: usize) -> &[f64] {
        let k = (e * self.nodes_per_elem + n) * self.m;
        &self.values[k..k + self.m]
    }
}

/// Gradient values `q_ijk`, `m x 2` per node.
#[derive(Clone, Debug, PartialEq)]
pub struct AuxGradient {
    pub m: usize,
    pub nodes_per_elem: usize,
    pub values: Vec<f64>,
}

impl AuxGradient {
    pub fn node(&self, e: usize, n: usize) -> &[f64] {
        let k = (e * self.nodes_per_elem + n) * 2 * self.m;
        &self.values[k..k + 2 * self.m]
    }
}

/// Endpoint of a line: a neighbor node or a boundary tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LineEnd {
    Interior { gnode: usize, sign: i8 },
    Boundary { tag: usize },
}

/// A line of `p + 1` nodes of one element in one reference direction.
#[derive(Clone, Debug)]
pub struct LineInfo {
    pub elem: usize,
    pub dir: usize,
    pub line: usize,
    /// Global node indices `e * (p+1)^2 + node` along the line.
    pub gnodes: Vec<usize>,
    /// Ends at `ξ = 0` and `ξ = 1`.
    pub ends: [LineEnd; 2],
    /// Local faces at `ξ = 0` and `ξ = 1`, and the face node index on each.
    pub faces: [(usize, usize); 2],
}

/// Derivatives of one line's residuals with respect to its inputs.
pub struct LineJacobian<'a> {
    pub info: &'a LineInfo,
    /// Global indices of the inputs: `(is_q, index)`.
    pub inputs: &'a [(bool, usize)],
    /// `∂r/∂input`, row-major `(np * m) x inputs.len()`, already scaled by `-1/J`.
    pub dr: &'a [f64],
    /// `∂d/∂input`, row-major `(np * 2m) x inputs.len()`, already scaled by `1/J`.
    pub dd: &'a [f64],
}

/// Which residual parts to differentiate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct JacobianRequest {
    pub wrt_u: bool,
    pub wrt_q: bool,
    pub r: bool,
    pub d: bool,
}

const AD_WIDTH: usize = 8;
type AdScalar = Dual<AD_WIDTH>;

/// Complete spatial discretization of one model on one mesh.
pub struct Discretization<M> {
    pub mesh: QuadMesh,
    pub basis: NodalBasis1D,
    pub geo: Vec<ElementMapping>,
    pub switches: SwitchAssignment,
    pub params: LdgParams,
    pub bcs: BoundaryConditions,
    pub model: M,
    pub ops: LineOps,
    lines: Vec<LineInfo>,
}

impl<M: PhysicsModel> Discretization<M> {
    pub fn new(
        mesh: QuadMesh,
        basis: NodalBasis1D,
        geo: Vec<ElementMapping>,
        model: M,
        params: LdgParams,
        bcs: BoundaryConditions,
    ) -> Result<Self> {
        params.validate()?;
        bcs.validate(&mesh, model.ncomp())?;
        if geo.len() != mesh.n_elems() || geo.iter().any(|g| g.n_nodes() != basis.n_nodes().pow(2)) {
            return Err(Error::invalid("mappings do not match mesh and basis"));
        }
        let switches = assign_switches(&mesh);
        let ops = LineOps::new(&basis);
        let mut disc = Self { mesh, basis, geo, switches, params, bcs, model, ops, lines: Vec::new() };
        disc.lines = disc.build_lines();
        Ok(disc)
    }

    /// Builds basis, geometry and discretization for `mesh` at degree `p`.
    pub fn build(
        mesh: QuadMesh,
        p: usize,
        model: M,
        params: LdgParams,
        bcs: BoundaryConditions,
        curve: Option<CurveFn>,
    ) -> Result<Self> {
        let basis = NodalBasis1D::new(p, NodeRule::GaussLobatto)?;
        let geo = compute_mapping(&mesh, &basis, curve)?;
        Self::new(mesh, basis, geo, model, params, bcs)
    }

    pub fn p(&self) -> usize {
        self.basis.p
    }

    pub fn ncomp(&self) -> usize {
        self.model.ncomp()
    }

    pub fn nodes_per_elem(&self) -> usize {
        self.basis.n_nodes().pow(2)
    }

    pub fn n_nodes(&self) -> usize {
        self.mesh.n_elems() * self.nodes_per_elem()
    }

    pub fn n_dofs(&self) -> usize {
        self.n_nodes() * self.ncomp()
    }

    pub fn n_aux(&self) -> usize {
        2 * self.n_dofs()
    }

    pub fn lines(&self) -> &[LineInfo] {
        &self.lines
    }

    /// Physical coordinates of global node `g`.
    pub fn node_xy(&self, g: usize) -> [f64; 2] {
        let npe = self.nodes_per_elem();
        self.geo[g / npe].nodes_xy[g % npe]
    }

    pub fn node_jac(&self, g: usize) -> f64 {
        let npe = self.nodes_per_elem();
        self.geo[g / npe].jac[g % npe]
    }

    /// Interpolates `f(x, y)` at every node.
    pub fn project(&self, f: impl Fn([f64; 2]) -> Vec<f64>) -> Vec<f64> {
        let m = self.ncomp();
        let mut u = vec![0.0; self.n_dofs()];
        for g in 0..self.n_nodes() {
            let v = f(self.node_xy(g));
            u[g * m..(g + 1) * m].copy_from_slice(&v[..m]);
        }
        u
    }

    /// `∫ u_c dx` per component, by nodal quadrature.
    pub fn integrate(&self, u: &[f64]) -> Vec<f64> {
        let (m, np) = (self.ncomp(), self.basis.n_nodes());
        let w = &self.basis.node_integrals;
        let mut total = vec![0.0; m];
        for g in 0..self.n_nodes() {
            let n = g % (np * np);
            let wt = w[n % np] * w[n / np] * self.node_jac(g);
            for c in 0..m {
                total[c] += wt * u[g * m + c];
            }
        }
        total
    }

    fn build_lines(&self) -> Vec<LineInfo> {
        let p = self.p();
        let np = p + 1;
        let npe = np * np;
        let mut out = Vec::with_capacity(2 * np * self.mesh.n_elems());
        for e in 0..self.mesh.n_elems() {
            for dir in 0..2 {
                for l in 0..np {
                    let gnodes: Vec<usize> = (0..np)
                        .map(|k| e * npe + if dir == 0 { k + np * l } else { l + np * k })
                        .collect();
                    // (face, face node) at ξ = 0 and ξ = 1
                    let faces = if dir == 0 { [(3, p - l), (1, l)] } else { [(0, l), (2, p - l)] };
                    let ends = faces.map(|(f, k)| match self.mesh.neighbor(e, f) {
                        Some(nb) => {
                            let (i, j) = face_node(p, nb.local, p - k);
                            LineEnd::Interior {
                                gnode: nb.elem * npe + i + np * j,
                                sign: self.switches.sign(e, f),
                            }
                        }
                        None => LineEnd::Boundary { tag: self.mesh.boundary_tag(e, f).expect("tagged") },
                    });
                    out.push(LineInfo { elem: e, dir, line: l, gnodes, ends, faces });
                }
            }
        }
        out
    }

    fn line_geom(&self, li: &LineInfo) -> LineGeom<'_> {
        let g = &self.geo[li.elem];
        let nq = self.ops.nq;
        let contra = if li.dir == 0 { &g.contra1 } else { &g.contra2 };
        let pos = |(f, k): (usize, usize)| {
            let (i, j) = face_node(self.p(), f, k);
            g.nodes_xy[i + self.basis.n_nodes() * j]
        };
        LineGeom {
            contra: &contra[li.line * nq..(li.line + 1) * nq],
            normals: li.faces.map(|(f, k)| g.normals[f][k]),
            x_end: li.faces.map(pos),
            h_end: li.faces.map(|(f, _)| g.face_h(f)),
        }
    }

    fn ctx(&self, t: f64, viscous: bool, need_r: bool, need_d: bool) -> KernelCtx<'_, M> {
        KernelCtx {
            model: &self.model,
            ops: &self.ops,
            params: &self.params,
            p: self.p(),
            t,
            viscous: viscous && self.model.is_viscous(),
            need_r,
            need_d,
        }
    }

    fn check_states(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.n_dofs() {
            return Err(Error::invalid(format!("state has {} entries, expected {}", u.len(), self.n_dofs())));
        }
        for chunk in u.chunks(self.ncomp()) {
            self.model.check_state(chunk)?;
        }
        Ok(())
    }

    /// Core evaluation. Returns `R` (if `need_r`) and `D` (if `need_d`).
    fn evaluate(
        &self,
        u: &[f64],
        q: Option<&[f64]>,
        t: f64,
        viscous: bool,
        need_r: bool,
        need_d: bool,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        self.check_states(u)?;
        let cx = self.ctx(t, viscous, need_r, need_d);
        let m = self.ncomp();
        let np = self.basis.n_nodes();
        let zeros;
        let q = match q {
            Some(q) => {
                if q.len() != self.n_aux() {
                    return Err(Error::invalid("gradient has wrong length"));
                }
                q
            }
            None => {
                if cx.viscous && need_r {
                    return Err(Error::invalid("viscous residual needs the auxiliary gradient"));
                }
                zeros = vec![0.0; self.n_aux()];
                &zeros
            }
        };
        let mut acc_r = if need_r { vec![0.0; self.n_dofs()] } else { Vec::new() };
        let mut acc_d = if need_d { vec![0.0; self.n_aux()] } else { Vec::new() };
        let mut ul = vec![0.0; np * m];
        let mut ql = vec![0.0; np * 2 * m];
        let mut r = vec![0.0; np * m];
        let mut d = vec![0.0; np * 2 * m];
        for li in &self.lines {
            for (k, &gn) in li.gnodes.iter().enumerate() {
                ul[k * m..(k + 1) * m].copy_from_slice(&u[gn * m..(gn + 1) * m]);
                ql[k * 2 * m..(k + 1) * 2 * m].copy_from_slice(&q[gn * 2 * m..(gn + 1) * 2 * m]);
            }
            let ends = li.ends.map(|end| match end {
                LineEnd::Interior { gnode, sign } => EndState::Interior {
                    u: &u[gnode * m..(gnode + 1) * m],
                    q: &q[gnode * 2 * m..(gnode + 1) * 2 * m],
                    sign,
                },
                LineEnd::Boundary { tag } => EndState::Boundary(self.bcs.get(tag).expect("validated")),
            });
            line_kernel(&cx, &self.line_geom(li), &ul, &ql, ends, &mut r, &mut d);
            if r.iter().chain(d.iter()).any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { elem: li.elem, dir: li.dir + 1, line: li.line });
            }
            for (k, &gn) in li.gnodes.iter().enumerate() {
                if need_r {
                    for c in 0..m {
                        acc_r[gn * m + c] += r[k * m + c];
                    }
                }
                if need_d {
                    for s in 0..2 * m {
                        acc_d[gn * 2 * m + s] += d[k * 2 * m + s];
                    }
                }
            }
        }
        let mut src = vec![0.0; m];
        for g in 0..self.n_nodes() {
            let inv_j = 1.0 / self.node_jac(g);
            if need_r {
                let rg = &mut acc_r[g * m..(g + 1) * m];
                for v in rg.iter_mut() {
                    *v *= -inv_j;
                }
                if self.model.has_source() {
                    self.model.source(&u[g * m..(g + 1) * m], &q[g * 2 * m..(g + 1) * 2 * m], self.node_xy(g), t, &mut src);
                    for c in 0..m {
                        rg[c] += src[c];
                    }
                }
            }
            if need_d {
                for v in acc_d[g * 2 * m..(g + 1) * 2 * m].iter_mut() {
                    *v *= inv_j;
                }
            }
        }
        Ok((acc_r, acc_d))
    }

    /// `S(u) - (r1 + r2) / J` with inviscid fluxes only.
    pub fn residual_first_order(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(self.evaluate(u, None, t, false, true, false)?.0)
    }

    /// Auxiliary gradient `D(U, Q)`. `q` is only read when `C22 > 0`.
    pub fn gradient(&self, u: &[f64], q: Option<&[f64]>, t: f64) -> Result<Vec<f64>> {
        if self.params.c22 != 0.0 && q.is_none() && self.model.is_viscous() {
            return Err(Error::invalid("C22 > 0 needs the current gradient"));
        }
        Ok(self.evaluate(u, q, t, true, false, true)?.1)
    }

    /// Divergence residual `R(U, Q)` including viscous fluxes.
    pub fn residual(&self, u: &[f64], q: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok(self.evaluate(u, Some(q), t, true, true, false)?.0)
    }

    /// Both `R(U, Q)` and `D(U, Q)`.
    pub fn residual_second_order(&self, u: &[f64], q: &[f64], t: f64) -> Result<(Vec<f64>, Vec<f64>)> {
        self.evaluate(u, Some(q), t, true, true, true)
    }

    /// Reduced operator `F(U) = R(U, D(U))`. Requires `C22 = 0` for viscous
    /// models.
    pub fn residual_primal(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        if !self.model.is_viscous() {
            return self.residual_first_order(u, t);
        }
        if self.params.c22 != 0.0 {
            return Err(Error::Config("the reduced operator needs C22 = 0; use the split solve".into()));
        }
        let q = self.gradient(u, None, t)?;
        self.residual(u, &q, t)
    }

    /// Gradient for the reduced operator (`C22 = 0`), or zeros for first-order models.
    pub fn primal_gradient(&self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        if self.model.is_viscous() {
            self.gradient(u, None, t)
        } else {
            Ok(vec![0.0; self.n_aux()])
        }
    }

    /// Differentiates every line kernel by forward-mode AD and hands the
    /// scaled local derivatives to `sink`. The source term is handled by
    /// [`Discretization::source_jacobian`].
    pub fn line_jacobians(
        &self,
        u: &[f64],
        q: &[f64],
        t: f64,
        req: JacobianRequest,
        mut sink: impl FnMut(&LineJacobian),
    ) -> Result<()> {
        self.check_states(u)?;
        let m = self.ncomp();
        let np = self.basis.n_nodes();
        let viscous = self.model.is_viscous();
        let cx = self.ctx(t, true, req.r, req.d);
        let r_uses_q = viscous;
        let d_uses_q = viscous && self.params.c22 != 0.0;
        let want_q = req.wrt_q && ((req.r && r_uses_q) || (req.d && d_uses_q));
        let mut inputs: Vec<(bool, usize)> = Vec::new();
        let mut ur = vec![AdScalar::zero(); np * m];
        let mut qr = vec![AdScalar::zero(); np * 2 * m];
        let mut outs_u = [vec![AdScalar::zero(); m], vec![AdScalar::zero(); m]];
        let mut outs_q = [vec![AdScalar::zero(); 2 * m], vec![AdScalar::zero(); 2 * m]];
        let mut r = vec![AdScalar::zero(); np * m];
        let mut d = vec![AdScalar::zero(); np * 2 * m];
        for li in &self.lines {
            inputs.clear();
            // line nodes first, then neighbor end nodes; a neighbor may be on
            // the line itself for self-periodic elements
            let mut nodes = li.gnodes.clone();
            for end in &li.ends {
                if let LineEnd::Interior { gnode, .. } = *end {
                    if !nodes.contains(&gnode) {
                        nodes.push(gnode);
                    }
                }
            }
            if req.wrt_u {
                for &gn in &nodes {
                    inputs.extend((0..m).map(|c| (false, gn * m + c)));
                }
            }
            if want_q {
                for &gn in &nodes {
                    inputs.extend((0..2 * m).map(|c| (true, gn * 2 * m + c)));
                }
            }
            let nin = inputs.len();
            let mut dr = vec![0.0; if req.r { np * m * nin } else { 0 }];
            let mut dd = vec![0.0; if req.d { np * 2 * m * nin } else { 0 }];
            let geom = self.line_geom(li);
            for chunk in 0..nin.div_ceil(AD_WIDTH) {
                let lo = chunk * AD_WIDTH;
                let hi = (lo + AD_WIDTH).min(nin);
                let seed = |is_q: bool, idx: usize, v: f64| {
                    match inputs[lo..hi].iter().position(|&x| x == (is_q, idx)) {
                        Some(k) => AdScalar::var(v, k),
                        None => AdScalar::constant(v),
                    }
                };
                for (k, &gn) in li.gnodes.iter().enumerate() {
                    for c in 0..m {
                        ur[k * m + c] = seed(false, gn * m + c, u[gn * m + c]);
                    }
                    for s in 0..2 * m {
                        qr[k * 2 * m + s] = seed(true, gn * 2 * m + s, q[gn * 2 * m + s]);
                    }
                }
                for (e, end) in li.ends.iter().enumerate() {
                    if let LineEnd::Interior { gnode, .. } = end {
                        for c in 0..m {
                            outs_u[e][c] = seed(false, gnode * m + c, u[gnode * m + c]);
                        }
                        for s in 0..2 * m {
                            outs_q[e][s] = seed(true, gnode * 2 * m + s, q[gnode * 2 * m + s]);
                        }
                    }
                }
                let ends: [EndState<AdScalar>; 2] = std::array::from_fn(|e| match li.ends[e] {
                    LineEnd::Interior { sign, .. } => EndState::Interior { u: &outs_u[e], q: &outs_q[e], sign },
                    LineEnd::Boundary { tag } => EndState::Boundary(self.bcs.get(tag).expect("validated")),
                });
                line_kernel(&cx, &geom, &ur, &qr, ends, &mut r, &mut d);
                for (k, &gn) in li.gnodes.iter().enumerate() {
                    let inv_j = 1.0 / self.node_jac(gn);
                    if req.r {
                        for c in 0..m {
                            let row = k * m + c;
                            for v in lo..hi {
                                dr[row * nin + v] = -inv_j * r[row].d[v - lo];
                            }
                        }
                    }
                    if req.d {
                        for s in 0..2 * m {
                            let row = k * 2 * m + s;
                            for v in lo..hi {
                                dd[row * nin + v] = inv_j * d[row].d[v - lo];
                            }
                        }
                    }
                }
            }
            sink(&LineJacobian { info: li, inputs: &inputs, dr: &dr, dd: &dd });
        }
        Ok(())
    }

    /// `(∂S/∂u, ∂S/∂q)` at global node `g`, row-major `m x m` and `m x 2m`.
    pub fn source_jacobian(&self, u: &[f64], q: &[f64], t: f64, g: usize) -> (Vec<f64>, Vec<f64>) {
        let m = self.ncomp();
        let mut su = vec![0.0; m * m];
        let mut sq = vec![0.0; m * 2 * m];
        if !self.model.has_source() {
            return (su, sq);
        }
        let x = self.node_xy(g);
        let nin = 3 * m;
        let mut out = vec![AdScalar::zero(); m];
        for chunk in 0..nin.div_ceil(AD_WIDTH) {
            let lo = chunk * AD_WIDTH;
            let var = |k: usize, v: f64| {
                if (lo..lo + AD_WIDTH).contains(&k) {
                    AdScalar::var(v, k - lo)
                } else {
                    AdScalar::constant(v)
                }
            };
            let ud: Vec<AdScalar> = (0..m).map(|c| var(c, u[g * m + c])).collect();
            let qd: Vec<AdScalar> = (0..2 * m).map(|s| var(m + s, q[g * 2 * m + s])).collect();
            self.model.source(&ud, &qd, x, t, &mut out);
            for c in 0..m {
                for k in lo..(lo + AD_WIDTH).min(nin) {
                    let v = out[c].d[k - lo];
                    if k < m {
                        su[c * m + k] = v;
                    } else {
                        sq[c * 2 * m + (k - m)] = v;
                    }
                }
            }
        }
        (su, sq)
    }
}
