//! Steady solves: backward-Euler continuation followed by Newton on
//! `F(U) = 0`, and the direct Newton solve of the coupled `(U, Q)` system.

use super::newton::{newton_solve, NewtonConfig, NewtonSystem};
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::physics::PhysicsModel;
use crate::sparse::{kkt_solve, JacobianAssembler, JacobianMode};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SteadyStats {
    pub continuation_steps: usize,
    /// Newton iterations over all phases.
    pub newton_iterations: usize,
    /// Newton iterations of the final `F(U) = 0` phase.
    pub final_iterations: usize,
    pub residual: f64,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

/// `dt0 * 2^k` for `k = 0..n`.
pub fn geometric_schedule(dt0: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| dt0 * 2f64.powi(k as i32)).collect()
}

/// Backward-Euler steps with the given increasing time steps, then Newton
/// on `F(U) = 0` until `‖F‖∞ < cfg.tol`. Continuation stops early once the
/// steady residual is met.
pub fn pseudo_transient_steady<S: NewtonSystem>(
    sys: &mut S,
    u0: &[f64],
    t: f64,
    dt_schedule: &[f64],
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, SteadyStats)> {
    cfg.validate()?;
    if dt_schedule.iter().any(|&d| !(d > 0.0)) || dt_schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("time step schedule must be positive and increasing"));
    }
    let mut stats = SteadyStats::default();
    let mut u = u0.to_vec();
    let mut r = max_norm(&sys.rhs(&u, t)?);
    stats.residual = r;
    if r < cfg.tol {
        return Ok((u, stats));
    }
    for &dt in dt_schedule {
        let prev = u.clone();
        // each continuation step is solved loosely; only the final phase
        // is held to the steady tolerance
        let tol = (1e-3 * dt * r).max(cfg.tol);
        let (next, st) = newton_solve(
            sys,
            |s, x| {
                let f = s.rhs(x, t)?;
                Ok(x.iter().zip(&prev).zip(&f).map(|((x, p), f)| x - p - dt * f).collect())
            },
            |x| (x.to_vec(), t),
            prev.clone(),
            (1.0, -dt),
            1.0,
            tol,
            cfg,
        )?;
        u = next;
        stats.continuation_steps += 1;
        stats.newton_iterations += st.iterations;
        r = max_norm(&sys.rhs(&u, t)?);
        stats.residual = r;
        if r < cfg.tol {
            return Ok((u, stats));
        }
    }
    let (u, st) = newton_solve(sys, |s, x| s.rhs(x, t), |x| (x.to_vec(), t), u, (0.0, 1.0), 1.0, cfg.tol, cfg)?;
    stats.newton_iterations += st.iterations;
    stats.final_iterations = st.iterations;
    stats.residual = st.residual;
    Ok((u, stats))
}

/// Newton on `R(U, Q) = 0`, `Q - D(U, Q) = 0` with sparse direct solves of
/// the coupled system. Works for any `C22`. Returns `(U, Q, iterations)`.
pub fn solve_split_steady<M: PhysicsModel>(
    disc: &Discretization<M>,
    u0: &[f64],
    q0: &[f64],
    t: f64,
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, Vec<f64>, usize)> {
    if !disc.model.is_viscous() {
        return Err(Error::Config("the split solve needs a second-order model".into()));
    }
    let mut asm = JacobianAssembler::new(disc, JacobianMode::Analytic);
    let (mut u, mut q) = (u0.to_vec(), q0.to_vec());
    for it in 0..=max_iter {
        let (r, d) = disc.residual_second_order(&u, &q, t)?;
        let gq: Vec<f64> = q.iter().zip(&d).map(|(q, d)| q - d).collect();
        let norm = max_norm(&r).max(max_norm(&gq));
        if norm <= tol {
            return Ok((u, q, it));
        }
        if it == max_iter {
            return Err(Error::StepFailure(format!("split Newton stalled at residual {norm:e}")));
        }
        let blocks = asm.assemble(disc, &u, Some(&q), t)?;
        let neg = |v: &[f64]| -> Vec<f64> { v.iter().map(|x| -x).collect() };
        let (du, dq) = kkt_solve(&blocks, 0.0, 1.0, &neg(&r), &neg(&gq))?;
        for (x, d) in u.iter_mut().zip(&du) {
            *x += d;
        }
        for (x, d) in q.iter_mut().zip(&dq) {
            *x += d;
        }
    }
    unreachable!()
}
