//! Node-level sparsity of the Line-DG operators.
//!
//! Row node `i` couples to column node `j` when `j` lies on one of the two
//! lines through `i`, or is the face neighbor of an end node of those lines.
//! Every block of the Jacobian shares this pattern; only the block sizes
//! differ.

use super::csc::CscMatrix;
use crate::discretization::{Discretization, LineEnd};
use crate::physics::PhysicsModel;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NodePattern {
    n: usize,
    /// Sorted column nodes of each row node.
    rows: Vec<Vec<usize>>,
    /// Sorted row nodes of each column node.
    cols: Vec<Vec<usize>>,
}

impl NodePattern {
    pub fn from_rows(n: usize, mut rows: Vec<Vec<usize>>) -> Self {
        let mut cols = vec![Vec::new(); n];
        for (i, r) in rows.iter_mut().enumerate() {
            r.sort_unstable();
            r.dedup();
            for &j in r.iter() {
                cols[j].push(i);
            }
        }
        Self { n, rows, cols }
    }

    /// Full Line-DG stencil including inter-element couplings.
    pub fn line_dg<M: PhysicsModel>(disc: &Discretization<M>) -> Self {
        let mut rows = vec![Vec::new(); disc.n_nodes()];
        for li in disc.lines() {
            let mut cols = li.gnodes.clone();
            for end in &li.ends {
                if let LineEnd::Interior { gnode, .. } = *end {
                    cols.push(gnode);
                }
            }
            for &g in &li.gnodes {
                rows[g].extend_from_slice(&cols);
            }
        }
        Self::from_rows(disc.n_nodes(), rows)
    }

    /// Couplings along element lines only, without face neighbors.
    pub fn intra_element<M: PhysicsModel>(disc: &Discretization<M>) -> Self {
        let mut rows = vec![Vec::new(); disc.n_nodes()];
        for li in disc.lines() {
            for &g in &li.gnodes {
                rows[g].extend_from_slice(&li.gnodes);
            }
        }
        Self::from_rows(disc.n_nodes(), rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.rows[i]
    }

    pub fn col(&self, j: usize) -> &[usize] {
        &self.cols[j]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.rows[i].binary_search(&j).is_ok()
    }

    /// Average number of column nodes per row node.
    pub fn avg_cols_per_row(&self) -> f64 {
        self.nnz() as f64 / self.n as f64
    }

    /// Zero matrix with `rb x cb` dense blocks on the node pattern.
    pub fn expand(&self, rb: usize, cb: usize) -> CscMatrix {
        let mut col_ptr = Vec::with_capacity(self.n * cb + 1);
        col_ptr.push(0);
        let mut row_idx = Vec::with_capacity(self.nnz() * rb * cb);
        for j in 0..self.n {
            for _ in 0..cb {
                for &i in &self.cols[j] {
                    row_idx.extend(i * rb..(i + 1) * rb);
                }
                col_ptr.push(row_idx.len());
            }
        }
        let nnz = row_idx.len();
        CscMatrix::new(self.n * rb, self.n * cb, col_ptr, row_idx, vec![0.0; nnz]).expect("pattern is sorted")
    }

    /// Greedy distance-2 coloring of the column nodes: two columns that
    /// share a row get different colors. Returns the color of each node and
    /// the number of colors.
    pub fn column_coloring(&self) -> (Vec<usize>, usize) {
        let mut color = vec![usize::MAX; self.n];
        let mut mark = Vec::new();
        let mut ncolors = 0;
        for j in 0..self.n {
            mark.clear();
            mark.resize(ncolors + 1, false);
            for &i in &self.cols[j] {
                for &k in &self.rows[i] {
                    if color[k] != usize::MAX {
                        mark[color[k]] = true;
                    }
                }
            }
            let c = mark.iter().position(|&m| !m).unwrap();
            color[j] = c;
            ncolors = ncolors.max(c + 1);
        }
        (color, ncolors)
    }
}

/// Number of distinct column nodes per row node holding at least one
/// non-zero value of `a`, whose blocks are `rb x cb`.
pub fn observed_block_counts(a: &CscMatrix, rb: usize, cb: usize) -> Vec<usize> {
    let n = a.nrows() / rb;
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, j, v) in a.triplets() {
        if v != 0.0 {
            rows[i / rb].push(j / cb);
        }
    }
    rows.iter_mut()
        .map(|r| {
            r.sort_unstable();
            r.dedup();
            r.len()
        })
        .collect()
}
