//! Isentropic vortex convected by a uniform free stream.

use super::euler::GasModel;
use super::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VortexParams {
    pub eps: f64,
    pub r_c: f64,
    pub mach: f64,
    pub theta: f64,
    pub center: [f64; 2],
    pub rho_inf: f64,
    pub gamma: f64,
}

impl Default for VortexParams {
    fn default() -> Self {
        Self {
            eps: 0.3,
            r_c: 1.5,
            mach: 0.5,
            theta: 0.5f64.atan(),
            center: [5.0, 5.0],
            rho_inf: 1.0,
            gamma: 1.4,
        }
    }
}

impl VortexParams {
    /// Free-stream speed, with unit free-stream sound speed.
    pub fn u_inf(&self) -> f64 {
        self.mach
    }

    pub fn p_inf(&self) -> f64 {
        self.rho_inf / self.gamma
    }

    /// End time of the convergence runs. With `u_inf = M` the vortex moves
    /// `(0.5, 0.25)` by then.
    pub fn end_time(&self) -> f64 {
        (10f64.powi(2) + 5f64.powi(2)).sqrt() / 10.0
    }

    pub fn free_stream(&self) -> [f64; 4] {
        let u = self.u_inf();
        GasModel { gamma: self.gamma, ..Default::default() }.conservative(
            self.rho_inf,
            u * self.theta.cos(),
            u * self.theta.sin(),
            self.p_inf(),
        )
    }

    /// Exact conservative state at `(x, y, t)`.
    pub fn exact(&self, x: f64, y: f64, t: f64) -> [f64; 4] {
        self.exact_generic(x, y, t)
    }

    pub fn exact_generic<T: Scalar>(&self, x: T, y: T, t: T) -> [T; 4] {
        let g = self.gamma;
        let u_inf = self.u_inf();
        let (ub, vb) = (u_inf * self.theta.cos(), u_inf * self.theta.sin());
        let dx = x - self.center[0] - t * ub;
        let dy = y - self.center[1] - t * vb;
        let f = (-(dx * dx) - dy * dy + 1.0) / (self.r_c * self.r_c);
        let amp = self.eps / (2.0 * std::f64::consts::PI * self.r_c);
        let e2 = (f * 0.5).exp();
        let vx = (-(dy * e2 * amp) + self.theta.cos()) * u_inf;
        let vy = (dx * e2 * amp + self.theta.sin()) * u_inf;
        let c = self.eps * self.eps * (g - 1.0) * self.mach * self.mach / (8.0 * std::f64::consts::PI.powi(2));
        let base = -(f.exp() * c) + 1.0;
        let rho = base.powf(1.0 / (g - 1.0)) * self.rho_inf;
        let p = base.powf(g / (g - 1.0)) * self.p_inf();
        [rho, rho * vx, rho * vy, p / (g - 1.0) + rho * (vx * vx + vy * vy) * 0.5]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::physics::Dual;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn center_values() {
        let v = VortexParams::default();
        let s = v.exact(5.0, 5.0, 0.0);
        let rho = (1.0 - (0.09 * 0.1 / (8.0 * std::f64::consts::PI.powi(2))) * (1.0 / 2.25f64).exp()).powf(2.5);
        assert!((s[0] - rho).abs() < 1e-15);
        assert!((s[0] - 0.999556).abs() < 5e-7);
        assert!((s[1] / s[0] - 0.5 * v.theta.cos()).abs() < 1e-15);
        assert!((s[2] / s[0] - 0.5 * v.theta.sin()).abs() < 1e-15);
    }

    #[test]
    fn far_field_is_free_stream() {
        let v = VortexParams::default();
        let s = v.exact(60.0, -40.0, 0.0);
        let fs = v.free_stream();
        for k in 0..4 {
            assert!((s[k] - fs[k]).abs() < 1e-14);
        }
    }

    #[test]
    fn isentropic() {
        let v = VortexParams::default();
        let gas = GasModel::default();
        let s_inf = gas.entropy(&v.free_stream());
        for &(x, y) in &[(5.0, 5.0), (5.5, 4.2), (3.0, 6.0), (9.0, 9.0)] {
            assert!((gas.entropy(&v.exact(x, y, 0.3)) / s_inf - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn satisfies_euler_equations() {
        let v = VortexParams::default();
        let gas = GasModel::default();
        let h = 1e-4;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let (x, y, t) = (rng.gen_range(2.0..8.0), rng.gen_range(2.0..8.0), rng.gen_range(0.0..1.0));
            let flux = |x: f64, y: f64| {
                let mut f = [0.0; 8];
                gas.euler_flux(&v.exact(x, y, t), &mut f);
                f
            };
            let (fxp, fxm, fyp, fym) = (flux(x + h, y), flux(x - h, y), flux(x, y + h), flux(x, y - h));
            let (up, um) = (v.exact(x, y, t + h), v.exact(x, y, t - h));
            for c in 0..4 {
                let r = (up[c] - um[c]) / (2.0 * h)
                    + (fxp[2 * c] - fxm[2 * c]) / (2.0 * h)
                    + (fyp[2 * c + 1] - fym[2 * c + 1]) / (2.0 * h);
                assert!(r.abs() < 1e-5, "component {c}: {r}");
            }
            // the dual-number time derivative agrees with differences
            let d = v.exact_generic(Dual::<1>::constant(x), Dual::constant(y), Dual::var(t, 0));
            for c in 0..4 {
                assert!((d[c].d[0] - (up[c] - um[c]) / (2.0 * h)).abs() < 1e-7);
            }
        }
    }
}
