//! One-dimensional nodal Lagrange basis on the reference interval `[0, 1]`.
//!
//! Everything a line solve needs is tabulated once here: the nodes, a
//! Gauss-Legendre rule with `ceil((3p+1)/2)` points, basis values and
//! derivatives at the quadrature points, and the Cholesky-factored mass
//! matrix.

use crate::error::{Error, Result};

/// Distribution of the `p + 1` nodes inside `[0, 1]`. Both rules include the
/// endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeRule {
    GaussLobatto,
    Uniform,
}

impl std::str::FromStr for NodeRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gauss_lobatto" | "gausslobatto" | "gll" => Ok(NodeRule::GaussLobatto),
            "uniform" => Ok(NodeRule::Uniform),
            other => Err(Error::Config(format!("unknown node rule '{other}'"))),
        }
    }
}

/// Legendre polynomial `P_n(x)` and its derivative on `[-1, 1]`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint limit P_n'(±1) = (±1)^{n-1} n(n+1)/2
        let s = if x > 0.0 { 1.0 } else if n.is_multiple_of(2) { -1.0 } else { 1.0 };
        s * nf * (nf + 1.0) / 2.0
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, dp)
}

/// Gauss-Legendre rule with `n` points, mapped to `[0, 1]`.
///
/// The rule integrates polynomials up to degree `2n - 1` exactly and its
/// weights sum to one.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::invalid("gauss_legendre needs at least one point"));
    }
    let mut pts = vec![0.0; n];
    let mut wts = vec![0.0; n];
    let nf = n as f64;
    for k in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is descending in k; store ascending on [0, 1]
        pts[k] = 0.5 * (1.0 - x);
        pts[n - 1 - k] = 0.5 * (1.0 + x);
        wts[k] = 0.5 * w;
        wts[n - 1 - k] = 0.5 * w;
    }
    if n % 2 == 1 {
        pts[n / 2] = 0.5;
    }
    Ok((pts, wts))
}

/// Gauss-Lobatto points (roots of `P_p'` plus the endpoints) on `[0, 1]`.
fn gauss_lobatto_points(p: usize) -> Vec<f64> {
    let n = p + 1;
    let mut pts = vec![0.0; n];
    pts[0] = 0.0;
    pts[p] = 1.0;
    let pf = p as f64;
    for k in 1..p {
        // Chebyshev-Gauss-Lobatto initial guess, descending in k
        let mut x = -(std::f64::consts::PI * k as f64 / pf).cos();
        for _ in 0..100 {
            // Newton on q(x) = P_p'(x); q' from the Legendre ODE
            let (pv, dp) = legendre(p, x);
            let d2p = (2.0 * x * dp - pf * (pf + 1.0) * pv) / (1.0 - x * x);
            let dx = dp / d2p;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        pts[k] = 0.5 * (1.0 + x);
    }
    // enforce exact symmetry s_{p-k} = 1 - s_k
    for k in 1..n / 2 {
        let avg = 0.5 * (pts[k] + (1.0 - pts[p - k]));
        pts[k] = avg;
        pts[p - k] = 1.0 - avg;
    }
    if p.is_multiple_of(2) {
        pts[p / 2] = 0.5;
    }
    pts
}

/// Values of all Lagrange polynomials through `nodes` at `x`.
pub fn lagrange_values(nodes: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let mut v = 1.0;
            for j in 0..n {
                if j != i {
                    v *= (x - nodes[j]) / (nodes[i] - nodes[j]);
                }
            }
            v
        })
        .collect()
}

/// Derivatives of all Lagrange polynomials through `nodes` at `x`.
pub fn lagrange_derivatives(nodes: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let mut sum = 0.0;
            for k in 0..n {
                if k == i {
                    continue;
                }
                let mut prod = 1.0 / (nodes[i] - nodes[k]);
                for j in 0..n {
                    if j != i && j != k {
                        prod *= (x - nodes[j]) / (nodes[i] - nodes[j]);
                    }
                }
                sum += prod;
            }
            sum
        })
        .collect()
}

/// Number of quadrature points used for degree `p`: `ceil((3p + 1) / 2)`.
pub fn quadrature_size(p: usize) -> usize {
    (3 * p + 1).div_ceil(2)
}

/// Immutable 1-D tables shared by every line of every element.
#[derive(Clone, Debug)]
pub struct NodalBasis1D {
    pub p: usize,
    pub rule: NodeRule,
    pub nodes: Vec<f64>,
    pub quad_points: Vec<f64>,
    pub quad_weights: Vec<f64>,
    /// `phi_at_quad[i * nq + q] = φ_i(ξ_q)`
    pub phi_at_quad: Vec<f64>,
    /// `dphi_at_quad[i * nq + q] = φ_i'(ξ_q)`
    pub dphi_at_quad: Vec<f64>,
    /// Row-major `(p+1) x (p+1)` mass matrix.
    pub mass: Vec<f64>,
    /// Lower Cholesky factor of `mass`, row-major.
    pub mass_factor: Vec<f64>,
    /// `diff_at_nodes[k * (p+1) + i] = φ_i'(s_k)`
    pub diff_at_nodes: Vec<f64>,
    /// `∫ φ_i`, the weights of the nodal quadrature induced by the basis.
    pub node_integrals: Vec<f64>,
}

impl NodalBasis1D {
    /// Builds the basis of degree `p` with the given node distribution.
    pub fn new(p: usize, rule: NodeRule) -> Result<Self> {
        Self::with_quadrature(p, rule, quadrature_size(p))
    }

    /// Same as [`NodalBasis1D::new`] but with an explicit number of
    /// quadrature points (must be at least `p` so the mass matrix is exact).
    pub fn with_quadrature(p: usize, rule: NodeRule, nq: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::invalid("polynomial degree must be at least 1"));
        }
        if nq < p + 1 {
            return Err(Error::invalid(format!(
                "{nq} quadrature points cannot integrate the degree-{p} mass matrix"
            )));
        }
        let np = p + 1;
        let nodes = match rule {
            NodeRule::GaussLobatto => gauss_lobatto_points(p),
            NodeRule::Uniform => (0..np).map(|i| i as f64 / p as f64).collect(),
        };
        let (quad_points, quad_weights) = gauss_legendre(nq)?;
        let mut phi_at_quad = vec![0.0; np * nq];
        let mut dphi_at_quad = vec![0.0; np * nq];
        for (q, &xq) in quad_points.iter().enumerate() {
            let v = lagrange_values(&nodes, xq);
            let d = lagrange_derivatives(&nodes, xq);
            for i in 0..np {
                phi_at_quad[i * nq + q] = v[i];
                dphi_at_quad[i * nq + q] = d[i];
            }
        }
        let mut mass = vec![0.0; np * np];
        for i in 0..np {
            for j in 0..=i {
                let m: f64 = (0..nq)
                    .map(|q| quad_weights[q] * phi_at_quad[i * nq + q] * phi_at_quad[j * nq + q])
                    .sum();
                mass[i * np + j] = m;
                mass[j * np + i] = m;
            }
        }
        let mass_factor = cholesky(&mass, np)?;
        let mut diff_at_nodes = vec![0.0; np * np];
        for k in 0..np {
            let d = lagrange_derivatives(&nodes, nodes[k]);
            diff_at_nodes[k * np..(k + 1) * np].copy_from_slice(&d);
        }
        let node_integrals = (0..np)
            .map(|i| (0..nq).map(|q| quad_weights[q] * phi_at_quad[i * nq + q]).sum())
            .collect();
        Ok(Self {
            p,
            rule,
            nodes,
            quad_points,
            quad_weights,
            phi_at_quad,
            dphi_at_quad,
            mass,
            mass_factor,
            diff_at_nodes,
            node_integrals,
        })
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.p + 1
    }

    #[inline]
    pub fn n_quad(&self) -> usize {
        self.quad_points.len()
    }

    /// Returns `M⁻¹ rhs` for a row-major `(p+1) x ncols` batch.
    pub fn apply_inverse_mass(&self, rhs: &[f64], ncols: usize) -> Result<Vec<f64>> {
        if ncols == 0 || rhs.len() != self.n_nodes() * ncols {
            return Err(Error::invalid(format!(
                "inverse mass expects {} rows x {ncols} columns, got {} values",
                self.n_nodes(),
                rhs.len()
            )));
        }
        let mut out = rhs.to_vec();
        self.solve_mass_in_place(&mut out, ncols);
        Ok(out)
    }

    /// In-place `M⁻¹` on a row-major `(p+1) x ncols` batch. Every column sees
    /// the same sequence of operations regardless of `ncols`.
    pub fn solve_mass_in_place(&self, rhs: &mut [f64], ncols: usize) {
        let np = self.n_nodes();
        let l = &self.mass_factor;
        debug_assert_eq!(rhs.len(), np * ncols);
        for i in 0..np {
            for k in 0..i {
                let lik = l[i * np + k];
                for c in 0..ncols {
                    rhs[i * ncols + c] -= lik * rhs[k * ncols + c];
                }
            }
            let d = l[i * np + i];
            for c in 0..ncols {
                rhs[i * ncols + c] /= d;
            }
        }
        for i in (0..np).rev() {
            for k in i + 1..np {
                let lki = l[k * np + i];
                for c in 0..ncols {
                    rhs[i * ncols + c] -= lki * rhs[k * ncols + c];
                }
            }
            let d = l[i * np + i];
            for c in 0..ncols {
                rhs[i * ncols + c] /= d;
            }
        }
    }

    /// Explicit `M⁻¹`, row-major.
    pub fn inverse_mass(&self) -> Vec<f64> {
        let np = self.n_nodes();
        let mut id = vec![0.0; np * np];
        for i in 0..np {
            id[i * np + i] = 1.0;
        }
        self.solve_mass_in_place(&mut id, np);
        id
    }

    /// Evaluates the interpolant of nodal values `coeffs` at `x`.
    pub fn interpolate(&self, coeffs: &[f64], x: f64) -> f64 {
        lagrange_values(&self.nodes, x)
            .iter()
            .zip(coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }
}

/// Dense Cholesky factorization of a row-major SPD matrix; returns the lower factor.
fn cholesky(a: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::invalid("mass matrix is not positive definite"));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}
