//! Classical fourth-order Runge-Kutta.

use crate::error::{Error, Result};

fn check(k: &[f64], stage: usize, t: f64) -> Result<()> {
    if k.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::BlowUp { stage, t })
    }
}

/// One RK4 step of `dU/dt = f(U, t)`.
pub fn rk4_step(
    mut f: impl FnMut(&[f64], f64) -> Result<Vec<f64>>,
    u: &[f64],
    t: f64,
    dt: f64,
) -> Result<Vec<f64>> {
    if !(dt > 0.0) {
        return Err(Error::invalid(format!("time step must be positive, got {dt}")));
    }
    let axpy = |k: &[f64], a: f64| -> Vec<f64> { u.iter().zip(k).map(|(x, y)| x + a * y).collect() };
    let k1 = f(u, t)?;
    check(&k1, 1, t)?;
    let k2 = f(&axpy(&k1, 0.5 * dt), t + 0.5 * dt)?;
    check(&k2, 2, t)?;
    let k3 = f(&axpy(&k2, 0.5 * dt), t + 0.5 * dt)?;
    check(&k3, 3, t)?;
    let k4 = f(&axpy(&k3, dt), t + dt)?;
    check(&k4, 4, t)?;
    let mut out = u.to_vec();
    for (i, o) in out.iter_mut().enumerate() {
        let inc = dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if inc != 0.0 {
            *o += inc;
        }
    }
    Ok(out)
}

/// Integrates from `t0` to `t_end` with equal steps no larger than `dt_max`.
/// `observer` sees every accepted state.
pub fn rk4_integrate(
    mut f: impl FnMut(&[f64], f64) -> Result<Vec<f64>>,
    u0: &[f64],
    t0: f64,
    t_end: f64,
    dt_max: f64,
    mut observer: impl FnMut(usize, f64, &[f64]),
) -> Result<Vec<f64>> {
    if !(dt_max > 0.0) || t_end < t0 {
        return Err(Error::invalid("need dt_max > 0 and t_end >= t0"));
    }
    let n = ((t_end - t0) / dt_max).ceil() as usize;
    let dt = if n == 0 { 0.0 } else { (t_end - t0) / n as f64 };
    let mut u = u0.to_vec();
    for k in 0..n {
        let t = t0 + k as f64 * dt;
        u = rk4_step(&mut f, &u, t, dt)?;
        observer(k + 1, t + dt, &u);
    }
    Ok(u)
}
