//! Three-stage, third-order, L-stable diagonally implicit Runge-Kutta.

use std::io::Write;

use super::newton::{newton_solve, NewtonConfig, NewtonStats, NewtonSystem};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct DirkTableau {
    pub alpha: f64,
    pub tau2: f64,
    pub b1: f64,
    pub b2: f64,
    pub a: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub c: [f64; 3],
    /// Second-order weights on the same stages, used for the local error
    /// estimate.
    pub b_embedded: [f64; 3],
}

impl Default for DirkTableau {
    fn default() -> Self {
        let alpha = 0.435866521508459;
        let tau2 = (1.0 + alpha) / 2.0;
        let b1 = -(6.0 * alpha * alpha - 16.0 * alpha + 1.0) / 4.0;
        let b2 = (6.0 * alpha * alpha - 20.0 * alpha + 5.0) / 4.0;
        // Σ b̂ = 1 and Σ b̂ c = 1/2 with b̂3 = 0
        let e2 = (0.5 - alpha) / (tau2 - alpha);
        Self {
            alpha,
            tau2,
            b1,
            b2,
            a: [[alpha, 0.0, 0.0], [tau2 - alpha, alpha, 0.0], [b1, b2, alpha]],
            b: [b1, b2, alpha],
            c: [alpha, tau2, 1.0],
            b_embedded: [1.0 - e2, e2, 0.0],
        }
    }
}

impl DirkTableau {
    /// Stability function `R(z) = 1 + z bᵀ (I - z A)^{-1} 1`.
    pub fn stability(&self, z: f64) -> f64 {
        let mut y = [0.0; 3];
        for i in 0..3 {
            let s: f64 = (0..i).map(|j| self.a[i][j] * y[j]).sum();
            y[i] = (1.0 + z * s) / (1.0 - z * self.a[i][i]);
        }
        1.0 + z * (0..3).map(|i| self.b[i] * y[i]).sum::<f64>()
    }
}

/// Per-stage solver record, one CSV row each.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StageRecord {
    pub step: usize,
    pub stage: usize,
    pub newton_iters: usize,
    pub gmres_iters: usize,
    pub jacobian_refreshed: bool,
    pub residual_norm: f64,
}

pub fn write_stats_csv(rows: &[StageRecord], mut w: impl Write) -> Result<()> {
    writeln!(w, "step,stage,newton_iters,gmres_iters,jacobian_refreshed,residual_norm")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{:e}",
            r.step,
            r.stage,
            r.newton_iters,
            r.gmres_iters,
            u8::from(r.jacobian_refreshed),
            r.residual_norm
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DirkStepStats {
    pub stages: [NewtonStats; 3],
    /// `Δt ‖Σ (b - b̂) K‖∞`.
    pub error_estimate: f64,
}

/// One step with stage slopes `K_i = F(U_n + Δt Σ a_ij K_j)` as unknowns.
/// Each stage is converged to `Δt ‖K_i - F(·)‖∞ <= tol`.
pub fn dirk3_step<S: NewtonSystem>(
    sys: &mut S,
    tab: &DirkTableau,
    u: &[f64],
    t: f64,
    dt: f64,
    tol: f64,
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, DirkStepStats)> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    let n = u.len();
    let mut ks: Vec<Vec<f64>> = Vec::with_capacity(3);
    let mut stats = DirkStepStats::default();
    let ad = tab.alpha * dt;
    for i in 0..3 {
        let mut base = u.to_vec();
        for (j, kj) in ks.iter().enumerate() {
            let a = dt * tab.a[i][j];
            for (b, k) in base.iter_mut().zip(kj) {
                *b += a * k;
            }
        }
        let ti = t + tab.c[i] * dt;
        let guess = match ks.last() {
            Some(k) => k.clone(),
            None => sys.rhs(u, t)?,
        };
        let stage_state = |k: &[f64]| -> Vec<f64> { base.iter().zip(k).map(|(b, k)| b + ad * k).collect() };
        let (k, st) = newton_solve(
            sys,
            |s, k| {
                let f = s.rhs(&stage_state(k), ti)?;
                Ok(k.iter().zip(&f).map(|(k, f)| dt * (k - f)).collect())
            },
            |k| (stage_state(k), ti),
            guess,
            (1.0, -ad),
            dt,
            tol,
            cfg,
        )?;
        stats.stages[i] = st;
        ks.push(k);
    }
    let mut out = u.to_vec();
    let mut est = 0.0f64;
    for i in 0..n {
        let inc: f64 = dt * (0..3).map(|j| tab.b[j] * ks[j][i]).sum::<f64>();
        if inc != 0.0 {
            out[i] += inc;
        }
        let e: f64 = dt * (0..3).map(|j| (tab.b[j] - tab.b_embedded[j]) * ks[j][i]).sum::<f64>();
        est = est.max(e.abs());
    }
    stats.error_estimate = est;
    Ok((out, stats))
}

/// DIRK3 time stepping with error-driven Newton tolerances, the Jacobian
/// reuse policy of the system and a per-stage log.
pub struct DirkIntegrator {
    pub tableau: DirkTableau,
    pub cfg: NewtonConfig,
    pub log: Vec<StageRecord>,
    tol: f64,
    steps: usize,
}

impl DirkIntegrator {
    pub fn new(cfg: NewtonConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { tableau: DirkTableau::default(), tol: cfg.tol, cfg, log: Vec::new(), steps: 0 })
    }

    /// Current Newton tolerance in state units.
    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Number of stage Newton solves so far.
    pub fn newton_solves(&self) -> usize {
        self.log.len()
    }

    /// Number of Jacobian refreshes triggered by Newton solves.
    pub fn refreshes(&self) -> usize {
        self.log.iter().filter(|r| r.jacobian_refreshed).count()
    }

    /// One accepted step. On a Newton failure the Jacobian is refreshed and
    /// the step is retried as two half steps, down to `Δt / 2^6`.
    pub fn step<S: NewtonSystem>(&mut self, sys: &mut S, u: &[f64], t: f64, dt: f64) -> Result<Vec<f64>> {
        self.step_split(sys, u, t, dt, 0)
    }

    fn step_split<S: NewtonSystem>(
        &mut self,
        sys: &mut S,
        u: &[f64],
        t: f64,
        dt: f64,
        depth: usize,
    ) -> Result<Vec<f64>> {
        match dirk3_step(sys, &self.tableau, u, t, dt, self.tol, &self.cfg) {
            Ok((next, st)) => {
                self.steps += 1;
                for (i, s) in st.stages.iter().enumerate() {
                    self.log.push(StageRecord {
                        step: self.steps,
                        stage: i + 1,
                        newton_iters: s.iterations,
                        gmres_iters: s.linear_iterations,
                        jacobian_refreshed: s.refreshes > 0,
                        residual_norm: s.residual,
                    });
                }
                self.tol = (self.cfg.tol_factor * st.error_estimate).max(self.cfg.tol_floor);
                Ok(next)
            }
            Err(Error::StepFailure(_) | Error::Divergence { .. } | Error::PhysicalState { .. }) if depth < 6 => {
                sys.refresh_jacobian(u, t)?;
                let half = self.step_split(sys, u, t, 0.5 * dt, depth + 1)?;
                self.step_split(sys, &half, t + 0.5 * dt, 0.5 * dt, depth + 1)
            }
            Err(e) => Err(e),
        }
    }

    /// Integrates to `t_end` with equal steps no larger than `dt_max`.
    pub fn integrate<S: NewtonSystem>(
        &mut self,
        sys: &mut S,
        u0: &[f64],
        t0: f64,
        t_end: f64,
        dt_max: f64,
    ) -> Result<Vec<f64>> {
        if !(dt_max > 0.0) || t_end < t0 {
            return Err(Error::invalid("need dt_max > 0 and t_end >= t0"));
        }
        let n = ((t_end - t0) / dt_max).ceil() as usize;
        let dt = if n == 0 { 0.0 } else { (t_end - t0) / n as f64 };
        let mut u = u0.to_vec();
        for k in 0..n {
            u = self.step(sys, &u, t0 + k as f64 * dt, dt)?;
        }
        Ok(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::time::newton::DenseSystem;

    #[test]
    fn tableau_identities() {
        let t = DirkTableau::default();
        for i in 0..3 {
            assert!((t.a[i].iter().sum::<f64>() - t.c[i]).abs() < 1e-15);
            assert_eq!(t.a[i][i], t.alpha);
        }
        assert!((t.b.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((t.b_embedded.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        // order conditions up to three
        let bc: f64 = (0..3).map(|i| t.b[i] * t.c[i]).sum();
        let bc2: f64 = (0..3).map(|i| t.b[i] * t.c[i] * t.c[i]).sum();
        let bac: f64 = (0..3).map(|i| t.b[i] * (0..3).map(|j| t.a[i][j] * t.c[j]).sum::<f64>()).sum();
        assert!((bc - 0.5).abs() < 1e-14);
        assert!((bc2 - 1.0 / 3.0).abs() < 1e-14);
        assert!((bac - 1.0 / 6.0).abs() < 1e-14);
        assert!(t.stability(-1e6).abs() < 1e-5);
    }

    #[test]
    fn zero_rhs_keeps_state() {
        let mut sys = DenseSystem::new(2, |_, _| vec![0.0, 0.0], |_, _| vec![0.0; 4]);
        let u = [0.7, -1.2];
        let (out, _) = dirk3_step(&mut sys, &DirkTableau::default(), &u, 0.0, 0.1, 1e-12, &NewtonConfig::default()).unwrap();
        assert_eq!(out, u.to_vec());
    }

    #[test]
    fn linear_step_matches_stability_function() {
        let lambda = -10.0;
        let dt = 0.13;
        let mut sys = DenseSystem::new(1, move |u, _| vec![lambda * u[0]], move |_, _| vec![lambda]);
        let tab = DirkTableau::default();
        let (out, st) = dirk3_step(&mut sys, &tab, &[1.0], 0.0, dt, 1e-14, &NewtonConfig::default()).unwrap();
        assert!((out[0] - tab.stability(lambda * dt)).abs() < 1e-12);
        assert!(st.stages.iter().all(|s| s.iterations <= 1));
    }

    #[test]
    fn linear_step_independent_of_reuse_policy() {
        let run = |reuse: bool| {
            let mut sys = DenseSystem::new(
                2,
                |u, t| vec![-3.0 * u[0] + u[1] + t.sin(), 0.5 * u[0] - 2.0 * u[1]],
                |_, _| vec![-3.0, 1.0, 0.5, -2.0],
            );
            let cfg = NewtonConfig { reuse_jacobian: reuse, ..Default::default() };
            let mut integ = DirkIntegrator::new(cfg).unwrap();
            integ.integrate(&mut sys, &[1.0, 1.0], 0.0, 1.0, 0.1).unwrap()
        };
        let (a, b) = (run(true), run(false));
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn third_order_on_nonlinear_ode() {
        // u' = -u^2, u(0) = 1, u(t) = 1 / (1 + t)
        let err = |dt: f64| {
            let mut sys = DenseSystem::new(1, |u, _| vec![-u[0] * u[0]], |u, _| vec![-2.0 * u[0]]);
            let cfg = NewtonConfig { tol: 1e-14, tol_floor: 1e-14, ..Default::default() };
            let mut integ = DirkIntegrator::new(cfg).unwrap();
            let u = integ.integrate(&mut sys, &[1.0], 0.0, 1.0, dt).unwrap();
            (u[0] - 0.5).abs()
        };
        let e: Vec<f64> = [0.1, 0.05, 0.025].iter().map(|&d| err(d)).collect();
        for k in 1..3 {
            let rate = (e[k - 1] / e[k]).log2();
            assert!((rate - 3.0).abs() < 0.15, "{rate}");
        }
    }

    #[test]
    fn stats_csv_has_header_and_rows() {
        let mut sys = DenseSystem::new(1, |u, _| vec![-u[0]], |_, _| vec![-1.0]);
        let mut integ = DirkIntegrator::new(NewtonConfig::default()).unwrap();
        integ.integrate(&mut sys, &[1.0], 0.0, 0.3, 0.1).unwrap();
        let mut buf = Vec::new();
        write_stats_csv(&integ.log, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 9);
        assert!(text.starts_with("step,stage,newton_iters,gmres_iters,jacobian_refreshed,residual_norm\n"));
        assert_eq!(integ.newton_solves(), 9);
    }
}
