//! One-dimensional DG solves along a single line of element nodes.

use super::bc::BoundaryKind;
use super::LdgParams;
use crate::basis::NodalBasis1D;
use crate::physics::{normal_flux, PhysicsModel, Scalar};

/// Line operators derived from the 1-D basis, with the inverse mass matrix
/// already applied.
#[derive(Clone, Debug)]
pub struct LineOps {
    pub np: usize,
    pub nq: usize,
    /// `φ_i(ξ_q)`, index `q * np + i`.
    pub phi: Vec<f64>,
    /// `-(M^{-1} W D^T)_{iq}`, index `i * nq + q`.
    pub vol: Vec<f64>,
    /// Columns of `M^{-1}` at the two endpoints, `[ξ = 0, ξ = 1]`.
    pub end: [Vec<f64>; 2],
}

impl LineOps {
    pub fn new(basis: &NodalBasis1D) -> Self {
        let (np, nq) = (basis.n_nodes(), basis.n_quad());
        let minv = basis.inverse_mass();
        let mut phi = vec![0.0; nq * np];
        for q in 0..nq {
            for i in 0..np {
                phi[q * np + i] = basis.phi_at_quad[i * nq + q];
            }
        }
        let mut vol = vec![0.0; np * nq];
        for i in 0..np {
            for q in 0..nq {
                vol[i * nq + q] = -(0..np)
                    .map(|k| minv[i * np + k] * basis.quad_weights[q] * basis.dphi_at_quad[k * nq + q])
                    .sum::<f64>();
            }
        }
        let end = [
            (0..np).map(|i| minv[i * np]).collect(),
            (0..np).map(|i| minv[i * np + np - 1]).collect(),
        ];
        Self { np, nq, phi, vol, end }
    }
}

/// Geometry of one line.
pub struct LineGeom<'a> {
    /// Contravariant row `J G^{-1}` at the quadrature points.
    pub contra: &'a [[f64; 2]],
    /// Outward normals at `[ξ = 0, ξ = 1]`.
    pub normals: [[f64; 2]; 2],
    pub x_end: [[f64; 2]; 2],
    /// Length scale of the end faces, used by the boundary penalty.
    pub h_end: [f64; 2],
}

/// State across one line endpoint.
pub enum EndState<'a, T> {
    Interior { u: &'a [T], q: &'a [T], sign: i8 },
    Boundary(&'a BoundaryKind),
}

pub struct KernelCtx<'a, M> {
    pub model: &'a M,
    pub ops: &'a LineOps,
    pub params: &'a LdgParams,
    pub p: usize,
    pub t: f64,
    pub viscous: bool,
    pub need_r: bool,
    pub need_d: bool,
}

/// Evaluates the line residuals. `r` receives `np * m` values of the
/// divergence residual, `d` receives `np * 2m` values of the gradient
/// residual, both before division by `J`.
pub fn line_kernel<T: Scalar, M: PhysicsModel>(
    cx: &KernelCtx<M>,
    g: &LineGeom,
    u: &[T],
    q: &[T],
    ends: [EndState<T>; 2],
    r: &mut [T],
    d: &mut [T],
) {
    let m = cx.model.ncomp();
    let (np, nq) = (cx.ops.np, cx.ops.nq);
    let visc = cx.viscous;
    if cx.need_r {
        r.iter_mut().for_each(|x| *x = T::zero());
    }
    if cx.need_d {
        d.iter_mut().for_each(|x| *x = T::zero());
    }

    let mut uq = vec![T::zero(); m];
    let mut qq = vec![T::zero(); 2 * m];
    let mut f = vec![T::zero(); 2 * m];
    let mut fv = vec![T::zero(); 2 * m];
    for iq in 0..nq {
        let phi = &cx.ops.phi[iq * np..(iq + 1) * np];
        for c in 0..m {
            uq[c] = (0..np).fold(T::zero(), |acc, i| acc + u[i * m + c] * phi[i]);
        }
        let a = g.contra[iq];
        if cx.need_r {
            if visc {
                for k in 0..2 * m {
                    qq[k] = (0..np).fold(T::zero(), |acc, i| acc + q[i * 2 * m + k] * phi[i]);
                }
            }
            if cx.model.has_inviscid() {
                cx.model.inviscid_flux(&uq, &mut f);
            } else {
                f.iter_mut().for_each(|x| *x = T::zero());
            }
            if visc {
                cx.model.viscous_flux(&uq, &qq, &mut fv);
                for k in 0..2 * m {
                    f[k] += fv[k];
                }
            }
            for c in 0..m {
                let ft = f[2 * c] * a[0] + f[2 * c + 1] * a[1];
                for i in 0..np {
                    r[i * m + c] += ft * cx.ops.vol[i * nq + iq];
                }
            }
        }
        if cx.need_d {
            for c in 0..m {
                for s in 0..2 {
                    let v = uq[c] * a[s];
                    for i in 0..np {
                        d[i * 2 * m + 2 * c + s] += v * cx.ops.vol[i * nq + iq];
                    }
                }
            }
        }
    }

    let mut fhat = vec![T::zero(); m];
    let mut uhat = vec![T::zero(); m];
    for (e, end) in ends.iter().enumerate() {
        let i_end = if e == 0 { 0 } else { np - 1 };
        let u_in = &u[i_end * m..(i_end + 1) * m];
        let q_in = if visc { &q[i_end * 2 * m..(i_end + 1) * 2 * m] } else { &q[0..0] };
        let n = g.normals[e];
        end_fluxes(cx, u_in, q_in, end, n, g.x_end[e], g.h_end[e], &mut fhat, &mut uhat);
        let col = &cx.ops.end[e];
        if cx.need_r {
            for c in 0..m {
                for i in 0..np {
                    r[i * m + c] += fhat[c] * col[i];
                }
            }
        }
        if cx.need_d {
            for c in 0..m {
                for s in 0..2 {
                    let v = uhat[c] * n[s];
                    for i in 0..np {
                        d[i * 2 * m + 2 * c + s] += v * col[i];
                    }
                }
            }
        }
    }
}

/// Numerical flux `F̂·n` and solution trace `û` at one line endpoint.
#[allow(clippy::too_many_arguments)]
fn end_fluxes<T: Scalar, M: PhysicsModel>(
    cx: &KernelCtx<M>,
    u_in: &[T],
    q_in: &[T],
    end: &EndState<T>,
    n: [f64; 2],
    x: [f64; 2],
    h: f64,
    fhat: &mut [T],
    uhat: &mut [T],
) {
    let model = cx.model;
    let m = model.ncomp();
    let visc = cx.viscous;
    let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
    let c22 = cx.params.c22;
    let mut fv = vec![T::zero(); 2 * m];
    let mut fin = vec![T::zero(); m];
    let mut fout = vec![T::zero(); m];
    let mut ghost = vec![T::zero(); m];
    let inviscid = |uo: &[T], fhat: &mut [T]| {
        if model.has_inviscid() {
            model.riemann_flux(uo, u_in, n, fhat);
        } else {
            fhat.iter_mut().for_each(|x| *x = T::zero());
        }
    };
    let mut viscous_normal = |u: &[T], q: &[T], out: &mut [T]| {
        model.viscous_flux(u, q, &mut fv);
        normal_flux(&fv, n, out);
    };

    match end {
        EndState::Interior { u: u_out, q: q_out, sign } => {
            let s = *sign as f64;
            inviscid(u_out, fhat);
            if visc {
                viscous_normal(u_in, q_in, &mut fin);
                viscous_normal(u_out, q_out, &mut fout);
                let c11 = cx.params.c11 * len;
                for c in 0..m {
                    fhat[c] += (fin[c] + fout[c]) * 0.5
                        + (u_in[c] - u_out[c]) * c11
                        + (fin[c] - fout[c]) * (0.5 * s);
                }
            }
            if cx.need_d {
                for c in 0..m {
                    uhat[c] = (u_in[c] + u_out[c]) * 0.5 - (u_in[c] - u_out[c]) * (0.5 * s);
                    if visc && c22 != 0.0 {
                        uhat[c] += (fin[c] - fout[c]) * (c22 / len);
                    }
                }
            }
        }
        EndState::Boundary(kind) => {
            let c11b = cx.params.boundary_penalty(cx.p, h) * len;
            match kind {
                BoundaryKind::Dirichlet(_) | BoundaryKind::Neumann(_) | BoundaryKind::Mixed { .. } => {
                    let mut gd = vec![0.0; m];
                    let mut gn = vec![0.0; m];
                    let is_d: Vec<bool> = match kind {
                        BoundaryKind::Dirichlet(g) => {
                            g(x, cx.t, &mut gd);
                            vec![true; m]
                        }
                        BoundaryKind::Neumann(g) => {
                            g(x, cx.t, &mut gn);
                            vec![false; m]
                        }
                        BoundaryKind::Mixed { dirichlet, g_d, g_n } => {
                            g_d(x, cx.t, &mut gd);
                            g_n(x, cx.t, &mut gn);
                            dirichlet.clone()
                        }
                        _ => unreachable!(),
                    };
                    for c in 0..m {
                        ghost[c] = if is_d[c] { T::cst(gd[c]) } else { u_in[c] };
                    }
                    inviscid(&ghost, fhat);
                    if visc {
                        viscous_normal(u_in, q_in, &mut fin);
                    }
                    for c in 0..m {
                        if is_d[c] {
                            if visc {
                                fhat[c] += fin[c] + (u_in[c] - gd[c]) * c11b;
                            }
                            uhat[c] = T::cst(gd[c]);
                        } else {
                            if visc {
                                fhat[c] += T::cst(gn[c] * len);
                            }
                            uhat[c] = u_in[c];
                            if visc && c22 != 0.0 {
                                uhat[c] += (fin[c] * (1.0 / len) - gn[c]) * c22;
                            }
                        }
                    }
                }
                BoundaryKind::Characteristic(g) => {
                    let mut far = vec![0.0; m];
                    g(x, cx.t, &mut far);
                    for c in 0..m {
                        ghost[c] = T::cst(far[c]);
                    }
                    inviscid(&ghost, fhat);
                    if visc {
                        viscous_normal(u_in, q_in, &mut fin);
                        for c in 0..m {
                            fhat[c] += fin[c];
                        }
                    }
                    uhat.copy_from_slice(&ghost);
                }
                BoundaryKind::SlipWall => {
                    model.wall_ghost(u_in, n, &mut ghost);
                    inviscid(&ghost, fhat);
                    for c in 0..m {
                        uhat[c] = (u_in[c] + ghost[c]) * 0.5;
                    }
                }
                BoundaryKind::NoSlipAdiabatic => {
                    model.no_slip_ghost(u_in, &mut ghost);
                    inviscid(&ghost, fhat);
                    model.no_slip_state(u_in, uhat);
                    if visc {
                        viscous_normal(uhat, q_in, &mut fin);
                        let adiabatic = model.adiabatic_component();
                        for c in 0..m {
                            if Some(c) != adiabatic {
                                fhat[c] += fin[c] + (u_in[c] - uhat[c]) * c11b;
                            }
                        }
                    }
                }
            }
        }
    }
}
