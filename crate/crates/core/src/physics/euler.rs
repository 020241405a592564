//! Compressible Euler and Navier-Stokes equations in conservative variables
//! `(ρ, ρu, ρv, ρE)`.

use super::{PhysicsModel, Scalar};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GasModel {
    pub gamma: f64,
    /// Dynamic viscosity.
    pub mu: f64,
    /// Prandtl number.
    pub pr: f64,
}

impl Default for GasModel {
    fn default() -> Self {
        Self { gamma: 1.4, mu: 0.0, pr: 0.72 }
    }
}

impl GasModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0 && self.mu >= 0.0 && self.pr > 0.0) {
            return Err(Error::invalid(format!("bad gas model {self:?}")));
        }
        Ok(())
    }

    pub fn pressure<T: Scalar>(&self, u: &[T]) -> T {
        let ke = (u[1] * u[1] + u[2] * u[2]) / u[0] * 0.5;
        (u[3] - ke) * (self.gamma - 1.0)
    }

    /// Conservative state from primitive `(ρ, u, v, p)`.
    pub fn conservative(&self, rho: f64, vx: f64, vy: f64, p: f64) -> [f64; 4] {
        [rho, rho * vx, rho * vy, p / (self.gamma - 1.0) + 0.5 * rho * (vx * vx + vy * vy)]
    }

    /// Entropy function `p / ρ^γ`.
    pub fn entropy(&self, u: &[f64]) -> f64 {
        self.pressure(u) / u[0].powf(self.gamma)
    }

    pub fn check(&self, u: &[f64]) -> Result<()> {
        let p = self.pressure(u);
        if !(u[0] > 0.0 && p > 0.0 && u.iter().all(|v| v.is_finite())) {
            return Err(Error::PhysicalState {
                state: u.to_vec(),
                msg: format!("density {} and pressure {p} must be positive", u[0]),
            });
        }
        Ok(())
    }

    /// Inviscid flux tensor.
    pub fn euler_flux<T: Scalar>(&self, u: &[T], f: &mut [T]) {
        let p = self.pressure(u);
        let (vx, vy) = (u[1] / u[0], u[2] / u[0]);
        f[0] = u[1];
        f[1] = u[2];
        f[2] = u[1] * vx + p;
        f[3] = u[1] * vy;
        f[4] = u[2] * vx;
        f[5] = u[2] * vy + p;
        f[6] = (u[3] + p) * vx;
        f[7] = (u[3] + p) * vy;
    }

    /// Flux tensor with state validation.
    pub fn euler_flux_checked(&self, u: &[f64]) -> Result<[f64; 8]> {
        self.check(u)?;
        let mut f = [0.0; 8];
        self.euler_flux(u, &mut f);
        Ok(f)
    }

    /// Roe flux along the non-normalized normal `n`, with a smooth
    /// Harten-type entropy fix of width `fix * (|V·n̄| + a)`.
    pub fn roe_flux<T: Scalar>(&self, u_out: &[T], u_in: &[T], n: [f64; 2], fix: f64, f: &mut [T]) {
        let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
        let (nx, ny) = (n[0] / len, n[1] / len);
        let g = self.gamma;
        let (l, r) = (u_in, u_out);

        let prim = |u: &[T]| {
            let vx = u[1] / u[0];
            let vy = u[2] / u[0];
            let p = self.pressure(u);
            let h = (u[3] + p) / u[0];
            (vx, vy, p, h)
        };
        let (ul, vl, pl, hl) = prim(l);
        let (ur, vr, pr, hr) = prim(r);
        let vnl = ul * nx + vl * ny;
        let vnr = ur * nx + vr * ny;

        let sl = l[0].sqrt();
        let sr = r[0].sqrt();
        let inv = T::cst(1.0) / (sl + sr);
        let rho = sl * sr;
        let u = (sl * ul + sr * ur) * inv;
        let v = (sl * vl + sr * vr) * inv;
        let h = (sl * hl + sr * hr) * inv;
        let q2 = u * u + v * v;
        let a2 = (h - q2 * 0.5) * (g - 1.0);
        let a = a2.sqrt();
        let vn = u * nx + v * ny;

        let delta = (vn.abs() + a) * fix;
        let fixed = |lam: T| {
            let al = lam.abs();
            if fix > 0.0 && al.val() < delta.val() {
                (lam * lam + delta * delta) / (delta * 2.0)
            } else {
                al
            }
        };
        let l1 = fixed(vn - a);
        let l2 = fixed(vn);
        let l3 = fixed(vn + a);

        let dp = pr - pl;
        let dvn = vnr - vnl;
        let drho = r[0] - l[0];
        let (du, dv) = (ur - ul, vr - vl);
        let a1 = (dp - rho * a * dvn) / (a2 * 2.0);
        let a2w = drho - dp / a2;
        let a3 = (dp + rho * a * dvn) / (a2 * 2.0);

        let w1 = l1 * a1;
        let w3 = l3 * a3;
        let d = [
            w1 + l2 * a2w + w3,
            w1 * (u - a * nx) + l2 * (a2w * u + rho * (du - dvn * nx)) + w3 * (u + a * nx),
            w1 * (v - a * ny) + l2 * (a2w * v + rho * (dv - dvn * ny)) + w3 * (v + a * ny),
            w1 * (h - a * vn)
                + l2 * (a2w * q2 * 0.5 + rho * (u * du + v * dv - vn * dvn))
                + w3 * (h + a * vn),
        ];
        let fl = [l[0] * vnl, l[1] * vnl + pl * nx, l[2] * vnl + pl * ny, (l[3] + pl) * vnl];
        let fr = [r[0] * vnr, r[1] * vnr + pr * nx, r[2] * vnr + pr * ny, (r[3] + pr) * vnr];
        for k in 0..4 {
            f[k] = ((fl[k] + fr[k]) * 0.5 - d[k] * 0.5) * len;
        }
    }

    /// Viscous part of the flux, `-(τ, u·τ - q_heat)` per space direction,
    /// from gradients of the conservative variables.
    pub fn ns_viscous_flux<T: Scalar>(&self, u: &[T], q: &[T], f: &mut [T]) {
        f[0] = T::zero();
        f[1] = T::zero();
        if self.mu == 0.0 {
            f[2..8].iter_mut().for_each(|x| *x = T::zero());
            return;
        }
        let rho = u[0];
        let vx = u[1] / rho;
        let vy = u[2] / rho;
        let e = u[3] / rho;
        // gradients of primitive variables, index [d]
        let grad = |c: usize, vel: T, d: usize| (q[2 * c + d] - vel * q[d]) / rho;
        let dvx = [grad(1, vx, 0), grad(1, vx, 1)];
        let dvy = [grad(2, vy, 0), grad(2, vy, 1)];
        let de = [grad(3, e, 0), grad(3, e, 1)];
        let mu = self.mu;
        let div = dvx[0] + dvy[1];
        let txx = (dvx[0] * 2.0 - div * (2.0 / 3.0)) * mu;
        let tyy = (dvy[1] * 2.0 - div * (2.0 / 3.0)) * mu;
        let txy = (dvx[1] + dvy[0]) * mu;
        let k = mu * self.gamma / self.pr;
        // heat flux -k ∇(E - |v|²/2)
        let hx = -(de[0] - vx * dvx[0] - vy * dvy[0]) * k;
        let hy = -(de[1] - vx * dvx[1] - vy * dvy[1]) * k;
        f[2] = -txx;
        f[3] = -txy;
        f[4] = -txy;
        f[5] = -tyy;
        f[6] = -(vx * txx + vy * txy - hx);
        f[7] = -(vx * txy + vy * tyy - hy);
    }
}

/// Euler (`mu = 0`) or Navier-Stokes flow of an ideal gas.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressibleFlow {
    pub gas: GasModel,
    /// Relative width of the entropy fix on the Roe eigenvalues.
    pub entropy_fix: f64,
}

impl CompressibleFlow {
    pub fn euler(gamma: f64) -> Self {
        Self { gas: GasModel { gamma, mu: 0.0, pr: 0.72 }, entropy_fix: 0.05 }
    }

    pub fn navier_stokes(gamma: f64, mu: f64, pr: f64) -> Self {
        Self { gas: GasModel { gamma, mu, pr }, entropy_fix: 0.05 }
    }
}

impl PhysicsModel for CompressibleFlow {
    fn ncomp(&self) -> usize {
        4
    }
    fn is_viscous(&self) -> bool {
        self.gas.mu > 0.0
    }
    fn inviscid_flux<T: Scalar>(&self, u: &[T], f: &mut [T]) {
        self.gas.euler_flux(u, f);
    }
    fn viscous_flux<T: Scalar>(&self, u: &[T], q: &[T], f: &mut [T]) {
        self.gas.ns_viscous_flux(u, q, f);
    }
    fn riemann_flux<T: Scalar>(&self, u_out: &[T], u_in: &[T], n: [f64; 2], f: &mut [T]) {
        self.gas.roe_flux(u_out, u_in, n, self.entropy_fix, f);
    }
    fn wall_ghost<T: Scalar>(&self, u_in: &[T], n: [f64; 2], ghost: &mut [T]) {
        let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
        let (nx, ny) = (n[0] / len, n[1] / len);
        let mn = u_in[1] * nx + u_in[2] * ny;
        ghost[0] = u_in[0];
        ghost[1] = u_in[1] - mn * (2.0 * nx);
        ghost[2] = u_in[2] - mn * (2.0 * ny);
        ghost[3] = u_in[3];
    }
    fn no_slip_ghost<T: Scalar>(&self, u_in: &[T], ghost: &mut [T]) {
        ghost[0] = u_in[0];
        ghost[1] = -u_in[1];
        ghost[2] = -u_in[2];
        ghost[3] = u_in[3];
    }
    fn no_slip_state<T: Scalar>(&self, u_in: &[T], out: &mut [T]) {
        let ke = (u_in[1] * u_in[1] + u_in[2] * u_in[2]) / u_in[0] * 0.5;
        out[0] = u_in[0];
        out[1] = T::zero();
        out[2] = T::zero();
        out[3] = u_in[3] - ke;
    }
    fn adiabatic_component(&self) -> Option<usize> {
        Some(3)
    }
    fn check_state(&self, u: &[f64]) -> Result<()> {
        self.gas.check(u)
    }
}
