//! Sparse direct solves, including the coupled `(U, Q)` system.

use faer::linalg::solvers::Solve;
use faer::Mat;

use super::assembly::JacobianBlocks;
use super::csc::CscMatrix;
use crate::error::{Error, Result};

/// Solves `A x = b` by sparse LU.
pub fn sparse_solve(a: &CscMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if a.nrows() != a.ncols() || b.len() != a.nrows() {
        return Err(Error::invalid(format!(
            "direct solve of a {} x {} system with {} right-hand side entries",
            a.nrows(),
            a.ncols(),
            b.len()
        )));
    }
    let lu = a.to_faer()?.sp_lu().map_err(|e| Error::Singular(format!("{e:?}")))?;
    let mut rhs = Mat::<f64>::from_fn(b.len(), 1, |i, _| b[i]);
    lu.solve_in_place(rhs.as_mut());
    let x: Vec<f64> = (0..b.len()).map(|i| rhs[(i, 0)]).collect();
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Singular("non-finite solution".into()));
    }
    Ok(x)
}

/// Coupled matrix
/// ```text
/// [ σ I + β K11    β K12   ]
/// [    -K21      I - K22   ]
/// ```
/// or `σ I + β K11` alone for first-order models.
pub fn kkt_matrix(blocks: &JacobianBlocks, sigma: f64, beta: f64) -> Result<CscMatrix> {
    let n = blocks.n_dofs();
    let na = blocks.n_aux();
    let mut t: Vec<(usize, usize, f64)> = blocks.k11.triplets().map(|(i, j, v)| (i, j, beta * v)).collect();
    if sigma != 0.0 {
        t.extend((0..n).map(|i| (i, i, sigma)));
    }
    if let (Some(k12), Some(k21)) = (&blocks.k12, &blocks.k21) {
        t.extend(k12.triplets().map(|(i, j, v)| (i, n + j, beta * v)));
        t.extend(k21.triplets().map(|(i, j, v)| (n + i, j, -v)));
        t.extend((0..na).map(|i| (n + i, n + i, 1.0)));
        if let Some(k22) = &blocks.k22 {
            t.extend(k22.triplets().map(|(i, j, v)| (n + i, n + j, -v)));
        }
    }
    let dim = if blocks.k21.is_some() { n + na } else { n };
    CscMatrix::from_triplets(dim, dim, &t)
}

/// Solves the coupled system for `(x_u, x_q)` with right-hand sides
/// `(b_u, b_q)`; `b_q` is ignored for first-order models.
pub fn kkt_solve(blocks: &JacobianBlocks, sigma: f64, beta: f64, b_u: &[f64], b_q: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let a = kkt_matrix(blocks, sigma, beta)?;
    let n = blocks.n_dofs();
    if blocks.k21.is_none() {
        return Ok((sparse_solve(&a, b_u)?, Vec::new()));
    }
    let rhs: Vec<f64> = b_u.iter().chain(b_q).copied().collect();
    let mut x = sparse_solve(&a, &rhs)?;
    let xq = x.split_off(n);
    Ok((x, xq))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_system_solves() {
        let a = CscMatrix::from_triplets(3, 3, &[(0, 0, 2.0), (1, 1, 3.0), (2, 2, 4.0), (0, 2, 1.0), (2, 0, -1.0)]).unwrap();
        let x = [1.0, -2.0, 0.5];
        let b = a.matvec(&x).unwrap();
        let s = sparse_solve(&a, &b).unwrap();
        for (s, x) in s.iter().zip(&x) {
            assert!((s - x).abs() < 1e-14);
        }
    }

    #[test]
    fn singular_system_is_reported() {
        let a = CscMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 1.0)]).unwrap();
        assert!(sparse_solve(&a, &[1.0, 1.0]).is_err());
    }
}
