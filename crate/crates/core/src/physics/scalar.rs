//! Scalar models: diffusion (Poisson, heat), linear advection and a pure
//! source term.

use std::sync::Arc;

use super::{PhysicsModel, Scalar};

/// Source term `f(x, t)`.
pub type SourceFn = Arc<dyn Fn([f64; 2], f64) -> f64 + Send + Sync>;

/// `u_t - κ Δu = f`, written with `F_vis = -κ q`.
#[derive(Clone)]
pub struct Diffusion {
    pub kappa: f64,
    pub source: Option<SourceFn>,
}

impl Diffusion {
    pub fn heat(kappa: f64) -> Self {
        Self { kappa, source: None }
    }

    /// Unit-diffusivity Poisson problem `-Δu = f` for the manufactured solution.
    pub fn poisson(ms: PoissonManufactured) -> Self {
        Self { kappa: 1.0, source: Some(Arc::new(move |x, _| ms.source(x[0], x[1]))) }
    }
}

impl PhysicsModel for Diffusion {
    fn ncomp(&self) -> usize {
        1
    }
    fn has_inviscid(&self) -> bool {
        false
    }
    fn is_viscous(&self) -> bool {
        true
    }
    fn has_source(&self) -> bool {
        self.source.is_some()
    }
    fn inviscid_flux<T: Scalar>(&self, _u: &[T], f: &mut [T]) {
        f.iter_mut().for_each(|x| *x = T::zero());
    }
    fn viscous_flux<T: Scalar>(&self, _u: &[T], q: &[T], f: &mut [T]) {
        f[0] = -q[0] * self.kappa;
        f[1] = -q[1] * self.kappa;
    }
    fn source<T: Scalar>(&self, _u: &[T], _q: &[T], x: [f64; 2], t: f64, s: &mut [T]) {
        s[0] = T::cst(self.source.as_ref().map_or(0.0, |f| f(x, t)));
    }
    fn riemann_flux<T: Scalar>(&self, _u_out: &[T], _u_in: &[T], _n: [f64; 2], f: &mut [T]) {
        f[0] = T::zero();
    }
}

/// `u_t + a·∇u = 0` with upwind numerical flux.
#[derive(Clone, Copy, Debug)]
pub struct Advection {
    pub velocity: [f64; 2],
}

impl PhysicsModel for Advection {
    fn ncomp(&self) -> usize {
        1
    }
    fn inviscid_flux<T: Scalar>(&self, u: &[T], f: &mut [T]) {
        f[0] = u[0] * self.velocity[0];
        f[1] = u[0] * self.velocity[1];
    }
    fn riemann_flux<T: Scalar>(&self, u_out: &[T], u_in: &[T], n: [f64; 2], f: &mut [T]) {
        let an = self.velocity[0] * n[0] + self.velocity[1] * n[1];
        f[0] = if an >= 0.0 { u_in[0] * an } else { u_out[0] * an };
    }
}

/// No flux, `S(u) = λ u` in every component.
#[derive(Clone, Copy, Debug)]
pub struct LinearSource {
    pub m: usize,
    pub lambda: f64,
}

impl PhysicsModel for LinearSource {
    fn ncomp(&self) -> usize {
        self.m
    }
    fn has_inviscid(&self) -> bool {
        false
    }
    fn has_source(&self) -> bool {
        true
    }
    fn inviscid_flux<T: Scalar>(&self, _u: &[T], f: &mut [T]) {
        f.iter_mut().for_each(|x| *x = T::zero());
    }
    fn source<T: Scalar>(&self, u: &[T], _q: &[T], _x: [f64; 2], _t: f64, s: &mut [T]) {
        for (s, &u) in s.iter_mut().zip(u) {
            *s = u * self.lambda;
        }
    }
    fn riemann_flux<T: Scalar>(&self, _u_out: &[T], _u_in: &[T], _n: [f64; 2], f: &mut [T]) {
        f.iter_mut().for_each(|x| *x = T::zero());
    }
}

/// Manufactured solution `u = exp(α sin(ax + by) + β cos(cx + dy))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonManufactured {
    pub alpha: f64,
    pub beta: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Default for PoissonManufactured {
    fn default() -> Self {
        Self { alpha: 0.1, beta: 0.3, a: 5.1, b: -6.2, c: 4.3, d: 3.4 }
    }
}

impl PoissonManufactured {
    pub fn u(&self, x: f64, y: f64) -> f64 {
        (self.alpha * (self.a * x + self.b * y).sin() + self.beta * (self.c * x + self.d * y).cos()).exp()
    }

    pub fn grad(&self, x: f64, y: f64) -> [f64; 2] {
        let g = self.exponent_grad(x, y);
        let u = self.u(x, y);
        [u * g[0], u * g[1]]
    }

    /// `f = -Δu`.
    pub fn source(&self, x: f64, y: f64) -> f64 {
        let (s1, s2) = (self.a * x + self.b * y, self.c * x + self.d * y);
        let g = self.exponent_grad(x, y);
        let lap_g = -self.alpha * (self.a * self.a + self.b * self.b) * s1.sin()
            - self.beta * (self.c * self.c + self.d * self.d) * s2.cos();
        -self.u(x, y) * (g[0] * g[0] + g[1] * g[1] + lap_g)
    }

    fn exponent_grad(&self, x: f64, y: f64) -> [f64; 2] {
        let (s1, s2) = (self.a * x + self.b * y, self.c * x + self.d * y);
        [
            self.alpha * self.a * s1.cos() - self.beta * self.c * s2.sin(),
            self.alpha * self.b * s1.cos() - self.beta * self.d * s2.sin(),
        ]
    }
}
