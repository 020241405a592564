//! Newton iterations on `G(x) = 0` with a reusable, shifted Jacobian
//! `σ I + β A`, where `A = ∂F/∂U` of the semi-discrete operator.

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonConfig {
    /// GMRES iterations per Newton update.
    pub gmres_iters_per_step: usize,
    /// A solve that needs more Newton iterations than this refreshes the
    /// Jacobian.
    pub recompute_threshold: usize,
    /// Keep Jacobians across iterations and solves. When `false` every
    /// iteration assembles a fresh Jacobian.
    pub reuse_jacobian: bool,
    /// Initial Newton tolerance on the state-level residual.
    pub tol: f64,
    /// Lower bound on the tolerance derived from the error estimate.
    pub tol_floor: f64,
    /// Newton tolerance relative to the local error estimate.
    pub tol_factor: f64,
    pub max_newton: usize,
    /// Residual growth factor treated as divergence.
    pub divergence_factor: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self {
            gmres_iters_per_step: 5,
            recompute_threshold: 15,
            reuse_jacobian: true,
            tol: 1e-8,
            tol_floor: 1e-11,
            tol_factor: 1e-3,
            max_newton: 50,
            divergence_factor: 1e4,
        }
    }
}

impl NewtonConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gmres_iters_per_step == 0 || self.recompute_threshold == 0 || self.max_newton == 0 {
            return Err(Error::invalid("Newton iteration limits must be positive"));
        }
        if !(self.tol > 0.0 && self.tol_floor > 0.0 && self.tol_factor > 0.0 && self.divergence_factor > 1.0) {
            return Err(Error::invalid("Newton tolerances must be positive and the divergence factor above one"));
        }
        Ok(())
    }
}

/// A semi-discrete system `dU/dt = F(U, t)` with Jacobian support.
pub trait NewtonSystem {
    fn dim(&self) -> usize;

    fn rhs(&mut self, u: &[f64], t: f64) -> Result<Vec<f64>>;

    /// Assembles `A = ∂F/∂U` at `(u, t)`.
    fn refresh_jacobian(&mut self, u: &[f64], t: f64) -> Result<()>;

    fn has_jacobian(&self) -> bool;

    /// Number of Jacobian assemblies so far.
    fn jacobian_count(&self) -> usize;

    /// Selects the operator `σ I + β A` for subsequent solves.
    fn set_shift(&mut self, sigma: f64, beta: f64) -> Result<()>;

    /// Approximate solution of `(σ I + β A) x = b` with at most `iters`
    /// Krylov iterations where applicable. Returns `x` and the iteration
    /// count.
    fn solve(&mut self, b: &[f64], iters: usize) -> Result<(Vec<f64>, usize)>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NewtonStats {
    pub iterations: usize,
    pub linear_iterations: usize,
    pub refreshes: usize,
    pub residual: f64,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

/// Solves `G(x) = 0` where `G'(x) ≈ σ I + β A(state(x))`.
///
/// `residual` returns `G(x)` scaled to state units; convergence is
/// `‖G‖∞ <= tol`. `state` maps an iterate to the `(U, t)` at which a
/// refreshed Jacobian is assembled.
#[allow(clippy::too_many_arguments)]
pub fn newton_solve<S: NewtonSystem>(
    sys: &mut S,
    mut residual: impl FnMut(&mut S, &[f64]) -> Result<Vec<f64>>,
    state: impl Fn(&[f64]) -> (Vec<f64>, f64),
    x0: Vec<f64>,
    (sigma, beta): (f64, f64),
    // `G` is scaled by this factor relative to `σ x + β F`
    scale: f64,
    tol: f64,
    cfg: &NewtonConfig,
) -> Result<(Vec<f64>, NewtonStats)> {
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("Newton initial guess is not finite"));
    }
    let mut stats = NewtonStats::default();
    let mut x = x0;
    let refresh = |sys: &mut S, x: &[f64], stats: &mut NewtonStats| -> Result<()> {
        let (u, t) = state(x);
        sys.refresh_jacobian(&u, t)?;
        sys.set_shift(sigma, beta)?;
        stats.refreshes += 1;
        Ok(())
    };
    if !sys.has_jacobian() {
        refresh(sys, &x, &mut stats)?;
    } else {
        sys.set_shift(sigma, beta)?;
    }
    let mut refreshed_here = stats.refreshes > 0;
    let mut initial = None;
    loop {
        let g = residual(sys, &x)?;
        let norm = max_norm(&g);
        stats.residual = norm;
        if !norm.is_finite() {
            return Err(Error::Divergence { initial: initial.unwrap_or(f64::NAN), current: norm });
        }
        let g0 = *initial.get_or_insert(norm);
        if norm <= tol {
            return Ok((x, stats));
        }
        if norm > cfg.divergence_factor * g0 {
            return Err(Error::Divergence { initial: g0, current: norm });
        }
        if stats.iterations >= cfg.max_newton {
            return Err(Error::StepFailure(format!(
                "Newton did not converge in {} iterations (residual {norm:e}, tolerance {tol:e})",
                stats.iterations
            )));
        }
        let stale = !refreshed_here && stats.iterations >= cfg.recompute_threshold;
        if (!cfg.reuse_jacobian && stats.iterations > 0) || stale {
            refresh(sys, &x, &mut stats)?;
            refreshed_here = true;
        }
        if !cfg.reuse_jacobian && stats.iterations == 0 && stats.refreshes == 0 {
            refresh(sys, &x, &mut stats)?;
        }
        let rhs: Vec<f64> = g.iter().map(|v| -v / scale).collect();
        let (dx, its) = sys.solve(&rhs, cfg.gmres_iters_per_step)?;
        stats.linear_iterations += its;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi += d;
        }
        stats.iterations += 1;
    }
}

type DenseFn<'a> = Box<dyn FnMut(&[f64], f64) -> Vec<f64> + 'a>;

/// Small dense system with exact linear solves, for ODE tests.
pub struct DenseSystem<'a> {
    n: usize,
    f: DenseFn<'a>,
    jac: DenseFn<'a>,
    a: Option<Vec<f64>>,
    shift: (f64, f64),
    count: usize,
}

impl<'a> DenseSystem<'a> {
    /// `f(u, t)` and its row-major Jacobian `jac(u, t)`.
    pub fn new(
        n: usize,
        f: impl FnMut(&[f64], f64) -> Vec<f64> + 'a,
        jac: impl FnMut(&[f64], f64) -> Vec<f64> + 'a,
    ) -> Self {
        Self { n, f: Box::new(f), jac: Box::new(jac), a: None, shift: (1.0, 0.0), count: 0 }
    }
}

impl NewtonSystem for DenseSystem<'_> {
    fn dim(&self) -> usize {
        self.n
    }

    fn rhs(&mut self, u: &[f64], t: f64) -> Result<Vec<f64>> {
        Ok((self.f)(u, t))
    }

    fn refresh_jacobian(&mut self, u: &[f64], t: f64) -> Result<()> {
        self.a = Some((self.jac)(u, t));
        self.count += 1;
        Ok(())
    }

    fn has_jacobian(&self) -> bool {
        self.a.is_some()
    }

    fn jacobian_count(&self) -> usize {
        self.count
    }

    fn set_shift(&mut self, sigma: f64, beta: f64) -> Result<()> {
        self.shift = (sigma, beta);
        Ok(())
    }

    fn solve(&mut self, b: &[f64], _iters: usize) -> Result<(Vec<f64>, usize)> {
        let a = self.a.as_ref().ok_or_else(|| Error::invalid("no Jacobian assembled"))?;
        let n = self.n;
        let (s, be) = self.shift;
        let m = Mat::<f64>::from_fn(n, n, |i, j| be * a[i * n + j] + if i == j { s } else { 0.0 });
        let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
        m.partial_piv_lu().solve_in_place(rhs.as_mut());
        let x: Vec<f64> = (0..n).map(|i| rhs[(i, 0)]).collect();
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Singular("dense Newton matrix".into()));
        }
        Ok((x, 1))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cubic<'a>() -> DenseSystem<'a> {
        // F(u) = u^3 - 8, so F(u) = 0 at u = 2
        DenseSystem::new(1, |u, _| vec![u[0].powi(3) - 8.0], |u, _| vec![3.0 * u[0] * u[0]])
    }

    fn solve_cubic(reuse: bool) -> (Vec<f64>, NewtonStats, Vec<f64>) {
        let mut sys = cubic();
        let cfg = NewtonConfig { reuse_jacobian: reuse, recompute_threshold: 100, max_newton: 100, ..Default::default() };
        let mut trace = Vec::new();
        let (x, st) = newton_solve(
            &mut sys,
            |s, x| {
                trace.push(x[0]);
                s.rhs(x, 0.0)
            },
            |x| (x.to_vec(), 0.0),
            vec![3.0],
            (0.0, 1.0),
            1.0,
            1e-13,
            &cfg,
        )
        .unwrap();
        (x, st, trace)
    }

    #[test]
    fn cubic_converges_quadratically() {
        let (x, st, trace) = solve_cubic(false);
        assert!((x[0] - 2.0).abs() < 1e-14);
        // hand trace: 3 -> 2.2963 -> 2.03659 -> 2.000653 -> 2.0000002
        assert!((trace[1] - 62.0 / 27.0).abs() < 1e-14);
        let e: Vec<f64> = trace.iter().map(|v| (v - 2.0).abs()).collect();
        for k in 2..5 {
            assert!(e[k] < 0.6 * e[k - 1] * e[k - 1], "{e:?}");
        }
        assert_eq!(st.refreshes, st.iterations);
    }

    #[test]
    fn stale_jacobian_converges_linearly_with_more_iterations() {
        let (_, fresh, _) = solve_cubic(false);
        let (x, stale, trace) = solve_cubic(true);
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert_eq!(stale.refreshes, 1);
        assert!(stale.iterations > fresh.iterations);
        let e: Vec<f64> = trace.iter().map(|v| (v - 2.0).abs()).collect();
        let ratios: Vec<f64> = (3..8).map(|k| e[k] / e[k - 1]).collect();
        // constant contraction 1 - F'(2) / F'(3) = 1 - 12/27
        for r in ratios {
            assert!((r - 15.0 / 27.0).abs() < 0.05, "{r}");
        }
    }

    #[test]
    fn linear_problem_one_iteration() {
        let mut sys = DenseSystem::new(
            2,
            |u, _| vec![2.0 * u[0] - u[1] - 1.0, -u[0] + 3.0 * u[1] + 2.0],
            |_, _| vec![2.0, -1.0, -1.0, 3.0],
        );
        let (x, st) = newton_solve(
            &mut sys,
            |s, x| s.rhs(x, 0.0),
            |x| (x.to_vec(), 0.0),
            vec![5.0, -7.0],
            (0.0, 1.0),
            1.0,
            1e-12,
            &NewtonConfig::default(),
        )
        .unwrap();
        assert_eq!(st.iterations, 1);
        assert!((x[0] - 0.2).abs() < 1e-14 && (x[1] + 0.6).abs() < 1e-14);
    }

    #[test]
    fn divergence_is_reported() {
        // wrong-signed Jacobian drives the iterate away from the root
        let mut sys = DenseSystem::new(1, |u, _| vec![u[0] - 1.0], |_, _| vec![-1.0]);
        let r = newton_solve(
            &mut sys,
            |s, x| s.rhs(x, 0.0),
            |x| (x.to_vec(), 0.0),
            vec![2.0],
            (0.0, 1.0),
            1.0,
            1e-12,
            &NewtonConfig::default(),
        );
        assert!(matches!(r, Err(Error::Divergence { .. })));
    }

    #[test]
    fn threshold_triggers_refresh() {
        let mut sys = cubic();
        // stale Jacobian from a poor point contracts slowly
        sys.refresh_jacobian(&[40.0], 0.0).unwrap();
        let cfg = NewtonConfig { recompute_threshold: 3, ..Default::default() };
        let (x, st) = newton_solve(
            &mut sys,
            |s, x| s.rhs(x, 0.0),
            |x| (x.to_vec(), 0.0),
            vec![2.5],
            (0.0, 1.0),
            1.0,
            1e-12,
            &cfg,
        )
        .unwrap();
        assert!((x[0] - 2.0).abs() < 1e-12);
        assert_eq!(st.refreshes, 1);
        assert!(st.iterations > 3);
    }
}
