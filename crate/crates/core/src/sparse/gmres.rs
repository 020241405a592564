//! Right-preconditioned GMRES with modified Gram-Schmidt.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Final true residual norm `‖b - A x‖`.
    pub residual: f64,
}

/// Preconditioner that does nothing.
pub fn identity(x: &[f64], y: &mut [f64]) -> Result<()> {
    y.copy_from_slice(x);
    Ok(())
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn check_finite(v: &[f64], what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Breakdown(format!("non-finite entry in {what}")))
    }
}

/// Solves `A x = b` from `x = 0`, stopping when `‖b - A x‖ <= rtol ‖b‖` or
/// after `maxit` iterations in total. `restart = 0` disables restarting.
/// Stagnation is not an error; the caller inspects `converged`.
pub fn gmres(
    mut op: impl FnMut(&[f64], &mut [f64]) -> Result<()>,
    mut precond: impl FnMut(&[f64], &mut [f64]) -> Result<()>,
    b: &[f64],
    rtol: f64,
    maxit: usize,
    restart: usize,
) -> Result<GmresOutcome> {
    if !(rtol > 0.0) || maxit == 0 {
        return Err(Error::invalid(format!("gmres needs rtol > 0 and maxit >= 1, got {rtol} and {maxit}")));
    }
    check_finite(b, "right-hand side")?;
    let n = b.len();
    let cycle = if restart == 0 { maxit } else { restart.min(maxit) };
    let bnorm = norm(b);
    let tol = rtol * bnorm;
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut rnorm = bnorm;
    let mut iterations = 0;
    let mut w = vec![0.0; n];
    let mut z = vec![0.0; n];

    loop {
        if rnorm <= tol || iterations >= maxit {
            return Ok(GmresOutcome { x, iterations, converged: rnorm <= tol, residual: rnorm });
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|a| a / rnorm).collect()];
        // column-major Hessenberg, column k has k + 2 entries
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(cycle);
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::with_capacity(cycle), Vec::with_capacity(cycle));
        let mut g = vec![rnorm];
        while h.len() < cycle && iterations < maxit {
            let k = h.len();
            precond(&v[k], &mut z)?;
            check_finite(&z, "preconditioned Krylov vector")?;
            op(&z, &mut w)?;
            check_finite(&w, "Krylov vector")?;
            let mut col = vec![0.0; k + 2];
            for (i, vi) in v.iter().enumerate() {
                col[i] = dot(&w, vi);
                for (wj, vj) in w.iter_mut().zip(vi) {
                    *wj -= col[i] * vj;
                }
            }
            let hnext = norm(&w);
            col[k + 1] = hnext;
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let rho = col[k].hypot(col[k + 1]);
            let (c, s) = if rho == 0.0 { (1.0, 0.0) } else { (col[k] / rho, col[k + 1] / rho) };
            col[k] = rho;
            col[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g.push(-s * g[k]);
            g[k] *= c;
            h.push(col);
            iterations += 1;
            if hnext == 0.0 || g[k + 1].abs() <= tol {
                break;
            }
            v.push(w.iter().map(|a| a / hnext).collect());
        }
        let k = h.len();
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| h[j][i] * y[j]).sum();
            if h[i][i] == 0.0 {
                return Err(Error::Breakdown("singular Hessenberg matrix".into()));
            }
            y[i] = (g[i] - s) / h[i][i];
        }
        let mut update = vec![0.0; n];
        for (yi, vi) in y.iter().zip(&v) {
            for (u, a) in update.iter_mut().zip(vi) {
                *u += yi * a;
            }
        }
        precond(&update, &mut z)?;
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += zi;
        }
        op(&x, &mut w)?;
        for ((ri, bi), wi) in r.iter_mut().zip(b).zip(&w) {
            *ri = bi - wi;
        }
        check_finite(&r, "residual")?;
        rnorm = norm(&r);
    }
}
