//! Isoparametric element geometry at the nodal and line quadrature points.

use crate::basis::NodalBasis1D;
use crate::error::{Error, Result};
use crate::mesh::quad::QuadMesh;

/// Projection applied to points on tagged boundary faces. Returns `None` for
/// tags that stay straight.
pub type CurveFn<'a> = &'a dyn Fn(usize, [f64; 2]) -> Option<[f64; 2]>;

/// Geometry of one element. Nodes are indexed `i + (p + 1) * j` where `i` runs
/// along `ξ1`.
#[derive(Clone, Debug)]
pub struct ElementMapping {
    pub nodes_xy: Vec<[f64; 2]>,
    /// Jacobian determinant at the nodes.
    pub jac: Vec<f64>,
    /// `[∂x/∂ξ1, ∂x/∂ξ2, ∂y/∂ξ1, ∂y/∂ξ2]` at the nodes.
    pub grad: Vec<[f64; 4]>,
    /// First row of `J G^{-1}` at `(ξ_q, s_j)`, index `j * nq + q`.
    pub contra1: Vec<[f64; 2]>,
    /// Second row of `J G^{-1}` at `(s_i, ξ_q)`, index `i * nq + q`.
    pub contra2: Vec<[f64; 2]>,
    /// Jacobian determinant at the points of `contra1` and `contra2`.
    pub jac1: Vec<f64>,
    pub jac2: Vec<f64>,
    /// Outward, unnormalized normals (`J G^{-1}` rows) at the face nodes of each
    /// local face, in counter-clockwise traversal order.
    pub normals: [Vec<[f64; 2]>; 4],
    /// Face lengths.
    pub face_len: [f64; 4],
    pub area: f64,
}

impl ElementMapping {
    pub fn n_nodes(&self) -> usize {
        self.nodes_xy.len()
    }

    /// Length scale `area / face_len` of a face.
    pub fn face_h(&self, local: usize) -> f64 {
        self.area / self.face_len[local]
    }
}

/// Element node `(i, j)` of face node `k` on local face `f`.
pub fn face_node(p: usize, f: usize, k: usize) -> (usize, usize) {
    match f {
        0 => (k, 0),
        1 => (p, k),
        2 => (p - k, p),
        3 => (0, p - k),
        _ => unreachable!("local face {f}"),
    }
}

/// Computes the geometry of every element. Faces whose boundary tag maps to a
/// curve under `curve` are projected onto it; interiors follow by transfinite
/// blending.
pub fn compute_mapping(
    mesh: &QuadMesh,
    basis: &NodalBasis1D,
    curve: Option<CurveFn>,
) -> Result<Vec<ElementMapping>> {
    (0..mesh.n_elems()).map(|e| element_mapping(mesh, basis, curve, e)).collect()
}

fn element_mapping(
    mesh: &QuadMesh,
    basis: &NodalBasis1D,
    curve: Option<CurveFn>,
    e: usize,
) -> Result<ElementMapping> {
    let p = basis.p;
    let np = p + 1;
    let nq = basis.n_quad();
    let s = &basis.nodes;
    let c: Vec<[f64; 2]> = mesh.elems[e].iter().map(|&v| mesh.vertices[v]).collect();
    let lerp = |a: [f64; 2], b: [f64; 2], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];

    // Edge points parametrized along the reference coordinate (not traversal).
    let edge_pts = |f: usize, a: [f64; 2], b: [f64; 2]| -> Vec<[f64; 2]> {
        let tag = mesh.boundary_tag(e, f);
        s.iter()
            .map(|&t| {
                let x = lerp(a, b, t);
                match (curve, tag) {
                    (Some(cf), Some(tag)) => cf(tag, x).unwrap_or(x),
                    _ => x,
                }
            })
            .collect()
    };
    let bottom = edge_pts(0, c[0], c[1]);
    let right = edge_pts(1, c[1], c[2]);
    let top = edge_pts(2, c[3], c[2]);
    let left = edge_pts(3, c[0], c[3]);

    let mut nodes_xy = vec![[0.0; 2]; np * np];
    for j in 0..np {
        for i in 0..np {
            let (xi, eta) = (s[i], s[j]);
            let mut x = [0.0; 2];
            for d in 0..2 {
                let bilinear = (1.0 - xi) * (1.0 - eta) * c[0][d]
                    + xi * (1.0 - eta) * c[1][d]
                    + xi * eta * c[2][d]
                    + (1.0 - xi) * eta * c[3][d];
                x[d] = (1.0 - eta) * bottom[i][d] + eta * top[i][d] + (1.0 - xi) * left[j][d]
                    + xi * right[j][d]
                    - bilinear;
            }
            nodes_xy[i + np * j] = x;
        }
    }

    let dmat = &basis.diff_at_nodes;
    let mut grad = vec![[0.0; 4]; np * np];
    for j in 0..np {
        for i in 0..np {
            let mut g = [0.0; 4];
            for k in 0..np {
                let d1 = dmat[i * np + k];
                let d2 = dmat[j * np + k];
                let a = nodes_xy[k + np * j];
                let b = nodes_xy[i + np * k];
                g[0] += d1 * a[0];
                g[2] += d1 * a[1];
                g[1] += d2 * b[0];
                g[3] += d2 * b[1];
            }
            grad[i + np * j] = g;
        }
    }
    let det = |g: &[f64; 4]| g[0] * g[3] - g[1] * g[2];
    let jac: Vec<f64> = grad.iter().map(det).collect();
    if let Some((n, &j)) = jac.iter().enumerate().find(|(_, &j)| j <= 0.0 || !j.is_finite()) {
        return Err(Error::InvertedElement {
            elem: e,
            msg: format!("Jacobian {j:e} at node {n}"),
        });
    }

    let phi = &basis.phi_at_quad;
    let mut contra1 = vec![[0.0; 2]; np * nq];
    let mut jac1 = vec![0.0; np * nq];
    let mut contra2 = vec![[0.0; 2]; np * nq];
    let mut jac2 = vec![0.0; np * nq];
    for line in 0..np {
        for q in 0..nq {
            let mut g1 = [0.0; 4];
            let mut g2 = [0.0; 4];
            for k in 0..np {
                let w = phi[k * nq + q];
                let a = grad[k + np * line];
                let b = grad[line + np * k];
                for t in 0..4 {
                    g1[t] += w * a[t];
                    g2[t] += w * b[t];
                }
            }
            contra1[line * nq + q] = [g1[3], -g1[1]];
            jac1[line * nq + q] = det(&g1);
            contra2[line * nq + q] = [-g2[2], g2[0]];
            jac2[line * nq + q] = det(&g2);
        }
    }

    let mut normals: [Vec<[f64; 2]>; 4] = Default::default();
    let mut face_len = [0.0; 4];
    for (f, nf) in normals.iter_mut().enumerate() {
        for k in 0..np {
            let (i, j) = face_node(p, f, k);
            let g = grad[i + np * j];
            let n = match f {
                0 => [g[2], -g[0]],
                1 => [g[3], -g[1]],
                2 => [-g[2], g[0]],
                3 => [-g[3], g[1]],
                _ => unreachable!(),
            };
            face_len[f] += basis.node_integrals[k] * (n[0] * n[0] + n[1] * n[1]).sqrt();
            nf.push(n);
        }
    }
    let w = &basis.node_integrals;
    let area = (0..np)
        .flat_map(|j| (0..np).map(move |i| (i, j)))
        .map(|(i, j)| w[i] * w[j] * jac[i + np * j])
        .sum();

    Ok(ElementMapping { nodes_xy, jac, grad, contra1, contra2, jac1, jac2, normals, face_len, area })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::NodeRule;
    use crate::mesh::quad::{annulus, annulus_projection, perturb_interior, rectangle, unit_square};

    #[test]
    fn unit_square_identity_map() {
        let basis = NodalBasis1D::new(3, NodeRule::GaussLobatto).unwrap();
        let m = QuadMesh::parse("4 1 4\n0 0\n1 0\n1 1\n0 1\n0 1 2 3\n0 0 1\n0 1 2\n0 2 3\n0 3 4\n").unwrap();
        let g = &compute_mapping(&m, &basis, None).unwrap()[0];
        for &j in &g.jac {
            assert!((j - 1.0).abs() < 1e-14);
        }
        assert!((g.area - 1.0).abs() < 1e-14);
        assert_eq!(g.face_len.map(|l| (l * 1e12).round() / 1e12), [1.0; 4]);
        let expected = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
        for f in 0..4 {
            for n in &g.normals[f] {
                assert!((n[0] - expected[f][0]).abs() < 1e-14 && (n[1] - expected[f][1]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn areas_sum_on_straight_meshes() {
        let basis = NodalBasis1D::new(2, NodeRule::GaussLobatto).unwrap();
        let m = perturb_interior(&rectangle(4, 3, (0.0, 2.0), (-1.0, 1.0), false, false).unwrap(), 0.25, 11)
            .unwrap();
        let geo = compute_mapping(&m, &basis, None).unwrap();
        let total: f64 = geo.iter().map(|g| g.area).sum();
        assert!((total - 4.0).abs() < 1e-10);
    }

    #[test]
    fn metric_identity_on_curved_elements() {
        // Σ_i ∂(J G^{-1})_{i,:}/∂ξ_i = 0 discretely at every node
        let p = 4;
        let basis = NodalBasis1D::new(p, NodeRule::GaussLobatto).unwrap();
        let m = annulus(6, 2, 1.0, 3.0, 0.0, std::f64::consts::PI).unwrap();
        let proj = annulus_projection(1.0, 3.0);
        let geo = compute_mapping(&m, &basis, Some(&proj)).unwrap();
        let np = p + 1;
        let d = &basis.diff_at_nodes;
        for g in &geo {
            for j in 0..np {
                for i in 0..np {
                    let mut div = [0.0; 2];
                    for k in 0..np {
                        let a1 = g.grad[k + np * j];
                        let a2 = g.grad[i + np * k];
                        div[0] += d[i * np + k] * a1[3] + d[j * np + k] * (-a2[2]);
                        div[1] += d[i * np + k] * (-a1[1]) + d[j * np + k] * a2[0];
                    }
                    assert!(div[0].abs() < 1e-11 && div[1].abs() < 1e-11, "{div:?}");
                }
            }
        }
    }

    #[test]
    fn curved_boundary_nodes_on_circle() {
        let basis = NodalBasis1D::new(3, NodeRule::GaussLobatto).unwrap();
        let m = annulus(8, 1, 1.0, 2.0, 0.0, 2.0 * std::f64::consts::PI).unwrap();
        let proj = annulus_projection(1.0, 2.0);
        let geo = compute_mapping(&m, &basis, Some(&proj)).unwrap();
        for g in &geo {
            for k in 0..4 {
                let (i, j) = face_node(3, 3, k);
                let x = g.nodes_xy[i + 4 * j];
                assert!(((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0).abs() < 1e-14);
            }
        }
        let area: f64 = geo.iter().map(|g| g.area).sum();
        let exact = std::f64::consts::PI * 3.0;
        assert!((area - exact).abs() < 1e-2 * exact);
    }

    #[test]
    fn rejects_folded_geometry() {
        let basis = NodalBasis1D::new(2, NodeRule::GaussLobatto).unwrap();
        let m = unit_square(1).unwrap();
        let fold = |_: usize, x: [f64; 2]| (x[1] < 0.5).then(|| [x[0], x[1] + 6.0 * x[0] * (1.0 - x[0])]);
        let err = compute_mapping(&m, &basis, Some(&fold)).unwrap_err();
        assert!(matches!(err, Error::InvertedElement { elem: 0, .. }));
    }
}
