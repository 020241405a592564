//! Element block-Jacobi preconditioner on the intra-element Line-DG pattern.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use super::assembly::JacobianBlocks;
use super::csc::CscMatrix;
use crate::error::{Error, Result};

struct ElementBlock {
    offset: usize,
    size: usize,
    lu: Lu<usize, f64>,
}

/// Per-element sparse LU factors of `σ I + β Ã`, where `Ã` keeps the entries
/// of `K11 + K12 K21` that couple two nodes on a common element line.
pub struct BlockJacobiPreconditioner {
    blocks: Vec<ElementBlock>,
    nnz: usize,
}

/// Sparse dot product of two sorted index lists.
fn sparse_dot((ia, va): (&[usize], &[f64]), (ib, vb): (&[usize], &[f64])) -> f64 {
    let (mut a, mut b, mut s) = (0, 0, 0.0);
    while a < ia.len() && b < ib.len() {
        match ia[a].cmp(&ib[b]) {
            std::cmp::Ordering::Less => a += 1,
            std::cmp::Ordering::Greater => b += 1,
            std::cmp::Ordering::Equal => {
                s += va[a] * vb[b];
                a += 1;
                b += 1;
            }
        }
    }
    s
}

impl BlockJacobiPreconditioner {
    /// Factors `I - αΔt Ã`.
    pub fn build(blocks: &JacobianBlocks, alpha_dt: f64) -> Result<Self> {
        Self::build_shifted(blocks, 1.0, -alpha_dt)
    }

    /// Factors `σ I + β Ã`.
    pub fn build_shifted(blocks: &JacobianBlocks, sigma: f64, beta: f64) -> Result<Self> {
        let m = blocks.m;
        let np = blocks.np;
        let npe = np * np;
        let bs = npe * m;
        let n_elems = blocks.n_dofs() / bs;
        let k12t: Option<CscMatrix> = blocks.k12.as_ref().map(CscMatrix::transpose);
        let product = k12t.as_ref().zip(blocks.k21.as_deref());
        let mut out = Vec::with_capacity(n_elems);
        let mut nnz = 0;
        let mut trip = Vec::new();
        for e in 0..n_elems {
            trip.clear();
            let offset = e * bs;
            for a in 0..npe {
                let (ai, aj) = (a % np, a / np);
                for b in 0..npe {
                    if b % np != ai && b / np != aj {
                        continue;
                    }
                    for c1 in 0..m {
                        let row = offset + a * m + c1;
                        for c2 in 0..m {
                            let col = offset + b * m + c2;
                            let mut v = blocks.k11.get(row, col);
                            if let Some((k12t, k21)) = product {
                                v += sparse_dot(k12t.column(row), k21.column(col));
                            }
                            let mut entry = beta * v;
                            if row == col {
                                entry += sigma;
                            }
                            trip.push(Triplet::new(a * m + c1, b * m + c2, entry));
                        }
                    }
                }
            }
            nnz += trip.len();
            let mat = SparseColMat::<usize, f64>::try_new_from_triplets(bs, bs, &trip)
                .map_err(|e| Error::Consistency(format!("preconditioner block assembly failed: {e:?}")))?;
            let lu = mat.sp_lu().map_err(|_| Error::SingularBlock { elem: e })?;
            let mut probe = Mat::<f64>::from_fn(bs, 1, |i, _| 1.0 + i as f64 / bs as f64);
            lu.solve_in_place(probe.as_mut());
            if (0..bs).any(|i| !probe[(i, 0)].is_finite()) {
                return Err(Error::SingularBlock { elem: e });
            }
            out.push(ElementBlock { offset, size: bs, lu });
        }
        Ok(Self { blocks: out, nnz })
    }

    /// Stored entries of `Ã` over all element blocks.
    pub fn nnz(&self) -> usize {
        self.nnz
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// `y = (σ I + β Ã)^{-1} x`.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) -> Result<()> {
        let n = self.blocks.last().map_or(0, |b| b.offset + b.size);
        if x.len() != n || y.len() != n {
            return Err(Error::invalid(format!("preconditioner of size {n} got vectors of length {} and {}", x.len(), y.len())));
        }
        for b in &self.blocks {
            let mut rhs = Mat::<f64>::from_fn(b.size, 1, |i, _| x[b.offset + i]);
            b.lu.solve_in_place(rhs.as_mut());
            for i in 0..b.size {
                y[b.offset + i] = rhs[(i, 0)];
            }
        }
        Ok(())
    }
}
