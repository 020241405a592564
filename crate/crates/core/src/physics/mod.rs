//! Conservation-law models `u_t + ∇·(F_inv(u) + F_vis(u, ∇u)) = S`.
//!
//! Fluxes use the layout `f[c * 2 + d]` for component `c` and space direction
//! `d`; gradients `q` use the same layout. Kernels are generic over
//! [`Scalar`] so that Jacobians come from forward-mode differentiation.

pub mod dual;
pub mod euler;
pub mod scalar;
pub mod vortex;

pub use dual::{Dual, Scalar};
pub use euler::{CompressibleFlow, GasModel};
pub use scalar::{Advection, Diffusion, LinearSource, PoissonManufactured};
pub use vortex::VortexParams;

use crate::error::Result;

pub trait PhysicsModel: Send + Sync {
    /// Number of conserved components `m`.
    fn ncomp(&self) -> usize;

    fn has_inviscid(&self) -> bool {
        true
    }

    fn is_viscous(&self) -> bool {
        false
    }

    fn has_source(&self) -> bool {
        false
    }

    fn inviscid_flux<T: Scalar>(&self, u: &[T], f: &mut [T]);

    fn viscous_flux<T: Scalar>(&self, _u: &[T], _q: &[T], f: &mut [T]) {
        f.iter_mut().for_each(|x| *x = T::zero());
    }

    fn source<T: Scalar>(&self, _u: &[T], _q: &[T], _x: [f64; 2], _t: f64, s: &mut [T]) {
        s.iter_mut().for_each(|x| *x = T::zero());
    }

    /// Numerical flux along the (non-normalized) normal `n` pointing from the
    /// inside state toward the outside state.
    fn riemann_flux<T: Scalar>(&self, u_out: &[T], u_in: &[T], n: [f64; 2], f: &mut [T]);

    /// Ghost state of an impermeable wall with outward normal `n`.
    fn wall_ghost<T: Scalar>(&self, u_in: &[T], _n: [f64; 2], ghost: &mut [T]) {
        ghost.copy_from_slice(u_in);
    }

    /// Ghost state of a no-slip wall, used by the inviscid flux.
    fn no_slip_ghost<T: Scalar>(&self, u_in: &[T], ghost: &mut [T]) {
        ghost.copy_from_slice(u_in);
    }

    /// Boundary trace of a no-slip wall.
    fn no_slip_state<T: Scalar>(&self, u_in: &[T], out: &mut [T]) {
        out.copy_from_slice(u_in);
    }

    /// Component whose viscous wall flux vanishes at an adiabatic wall.
    fn adiabatic_component(&self) -> Option<usize> {
        None
    }

    /// Rejects non-physical states.
    fn check_state(&self, _u: &[f64]) -> Result<()> {
        Ok(())
    }
}

/// `F·n` for a flux tensor in the `f[c * 2 + d]` layout.
#[inline]
pub fn normal_flux<T: Scalar>(f: &[T], n: [f64; 2], out: &mut [T]) {
    for (c, o) in out.iter_mut().enumerate() {
        *o = f[2 * c] * n[0] + f[2 * c + 1] * n[1];
    }
}

/// Dense Jacobian `∂(F·n)/∂u` of the inviscid normal flux, row-major `m x m`.
pub fn inviscid_normal_jacobian<M: PhysicsModel>(model: &M, u: &[f64], n: [f64; 2]) -> Vec<f64> {
    let m = model.ncomp();
    let mut jac = vec![0.0; m * m];
    let ud: Vec<Dual<8>> = u.iter().enumerate().map(|(k, &v)| Dual::var(v, k)).collect();
    let mut f = vec![Dual::<8>::zero(); 2 * m];
    let mut fnrm = vec![Dual::<8>::zero(); m];
    model.inviscid_flux(&ud, &mut f);
    normal_flux(&f, n, &mut fnrm);
    for r in 0..m {
        for k in 0..m {
            jac[r * m + k] = fnrm[r].d[k];
        }
    }
    jac
}

/// Jacobians of the numerical flux with respect to `(u_out, u_in)`, each
/// row-major `m x m`.
pub fn riemann_jacobians<M: PhysicsModel>(
    model: &M,
    u_out: &[f64],
    u_in: &[f64],
    n: [f64; 2],
) -> (Vec<f64>, Vec<f64>) {
    let m = model.ncomp();
    assert!(2 * m <= 8, "riemann_jacobians supports up to 4 components");
    let uo: Vec<Dual<8>> = u_out.iter().enumerate().map(|(k, &v)| Dual::var(v, k)).collect();
    let ui: Vec<Dual<8>> = u_in.iter().enumerate().map(|(k, &v)| Dual::var(v, m + k)).collect();
    let mut f = vec![Dual::<8>::zero(); m];
    model.riemann_flux(&uo, &ui, n, &mut f);
    let mut jo = vec![0.0; m * m];
    let mut ji = vec![0.0; m * m];
    for r in 0..m {
        for k in 0..m {
            jo[r * m + k] = f[r].d[k];
            ji[r * m + k] = f[r].d[m + k];
        }
    }
    (jo, ji)
}
