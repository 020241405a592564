use std::sync::Arc;

use super::*;
use crate::basis::{gauss_legendre, lagrange_derivatives, lagrange_values};
use crate::mesh::{annulus, annulus_projection, perturb_interior, rectangle, unit_square};
use crate::physics::{Advection, CompressibleFlow, Diffusion, LinearSource, PoissonManufactured, VortexParams};

fn periodic(nx: usize, ny: usize, lx: f64, ly: f64) -> QuadMesh {
    rectangle(nx, ny, (0.0, lx), (0.0, ly), true, true).unwrap()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, &x| a.max(x.abs()))
}

#[test]
fn constant_state_has_zero_residual() {
    let flow = CompressibleFlow::euler(1.4);
    let state = flow.gas.conservative(1.1, 0.3, -0.2, 0.8);
    let mesh = perturb_interior(&periodic(3, 3, 1.0, 1.0), 0.15, 2).unwrap();
    for p in 1..=4 {
        let disc =
            Discretization::build(mesh.clone(), p, flow, LdgParams::default(), BoundaryConditions::new(), None)
                .unwrap();
        let u = disc.project(|_| state.to_vec());
        assert!(max_abs(&disc.residual_first_order(&u, 0.0).unwrap()) < 1e-12);
    }
}

/// Nodal upwind DG for `u_t + u_x = 0` on a periodic 1-D grid, built from
/// scratch with dense quadrature and Gaussian elimination.
fn dg1d_advection(nodes: &[f64], h: f64, u: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let np = nodes.len();
    let (xq, wq) = gauss_legendre(2 * np).unwrap();
    let mut mass = vec![vec![0.0; np]; np];
    for (x, w) in xq.iter().zip(&wq) {
        let phi = lagrange_values(nodes, *x);
        for i in 0..np {
            for j in 0..np {
                mass[i][j] += w * phi[i] * phi[j];
            }
        }
    }
    let n = u.len();
    let mut out = Vec::new();
    for e in 0..n {
        let left = &u[(e + n - 1) % n];
        let mut rhs = vec![0.0; np];
        for (x, w) in xq.iter().zip(&wq) {
            let phi = lagrange_values(nodes, *x);
            let dphi = lagrange_derivatives(nodes, *x);
            let ux: f64 = (0..np).map(|k| phi[k] * u[e][k]).sum();
            for i in 0..np {
                rhs[i] += w * ux * dphi[i];
            }
        }
        rhs[np - 1] -= u[e][np - 1];
        rhs[0] += left[np - 1];
        // solve mass * r = rhs
        let mut a = mass.clone();
        let mut b = rhs.clone();
        for k in 0..np {
            for i in k + 1..np {
                let f = a[i][k] / a[k][k];
                for j in k..np {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut r = vec![0.0; np];
        for i in (0..np).rev() {
            r[i] = (b[i] - (i + 1..np).map(|j| a[i][j] * r[j]).sum::<f64>()) / a[i][i];
        }
        out.push(r.into_iter().map(|v| v / h).collect());
    }
    out
}

#[test]
fn advection_matches_one_dimensional_oracle() {
    let n = 5;
    for p in 1..=4 {
        let disc = Discretization::build(
            periodic(n, 1, 1.0, 0.3),
            p,
            Advection { velocity: [1.0, 0.0] },
            LdgParams::default(),
            BoundaryConditions::new(),
            None,
        )
        .unwrap();
        let f = |x: f64| (2.0 * std::f64::consts::PI * x).sin() + x * x;
        let u = disc.project(|x| vec![f(x[0])]);
        let r = disc.residual_first_order(&u, 0.0).unwrap();
        let np = p + 1;
        let h = 1.0 / n as f64;
        let u1d: Vec<Vec<f64>> =
            (0..n).map(|e| disc.basis.nodes.iter().map(|s| f((e as f64 + s) * h)).collect()).collect();
        let oracle = dg1d_advection(&disc.basis.nodes, h, &u1d);
        for e in 0..n {
            for j in 0..np {
                for i in 0..np {
                    let got = r[e * np * np + i + np * j];
                    assert!((got - oracle[e][i]).abs() < 1e-12 * (1.0 + oracle[e][i].abs()), "{got} {}", oracle[e][i]);
                }
            }
        }
    }
}

#[test]
fn scaled_element_scales_residual() {
    let adv = Advection { velocity: [0.7, -0.4] };
    let run = |scale: f64| {
        let disc = Discretization::build(
            periodic(2, 2, scale, scale),
            3,
            adv,
            LdgParams::default(),
            BoundaryConditions::new(),
            None,
        )
        .unwrap();
        // same nodal values on both meshes
        let u = disc.project(|x| vec![(x[0] / scale * 5.0).sin() + (x[1] / scale * 3.0).cos()]);
        disc.residual_first_order(&u, 0.0).unwrap()
    };
    let (r1, r2) = (run(1.0), run(0.5));
    for (a, b) in r1.iter().zip(&r2) {
        assert!((b - 2.0 * a).abs() < 1e-11 * (1.0 + a.abs()));
    }
}

#[test]
fn free_stream_on_curved_annulus() {
    let flow = CompressibleFlow::euler(1.4);
    let state = flow.gas.conservative(1.0, 0.4, 0.1, 1.0 / 1.4);
    let mesh = annulus(12, 4, 1.0, 5.0, 0.0, 2.0 * std::f64::consts::PI).unwrap();
    let proj = annulus_projection(1.0, 5.0);
    for p in [2, 4] {
        let bcs = BoundaryConditions::uniform(&mesh, BoundaryKind::Characteristic(BoundaryKind::constant(state.to_vec())));
        let disc = Discretization::build(mesh.clone(), p, flow, LdgParams::default(), bcs, Some(&proj)).unwrap();
        let u = disc.project(|_| state.to_vec());
        assert!(max_abs(&disc.residual_first_order(&u, 0.0).unwrap()) < 1e-11);
    }
}

#[test]
fn pure_source_returns_state() {
    let disc = Discretization::build(
        unit_square(2).unwrap(),
        2,
        LinearSource { m: 2, lambda: 1.0 },
        LdgParams::default(),
        BoundaryConditions::uniform(&unit_square(2).unwrap(), BoundaryKind::SlipWall),
        None,
    )
    .unwrap();
    let u: Vec<f64> = (0..disc.n_dofs()).map(|k| (k as f64).sin()).collect();
    assert_eq!(disc.residual_first_order(&u, 0.0).unwrap(), u);
}

fn linear_dirichlet(a: f64, b: f64, c: f64) -> BoundaryKind {
    BoundaryKind::Dirichlet(Arc::new(move |x, _, out: &mut [f64]| out[0] = a + b * x[0] + c * x[1]))
}

#[test]
fn gradient_of_linear_field_is_exact() {
    let mesh = perturb_interior(&unit_square(4).unwrap(), 0.2, 9).unwrap();
    for p in 1..=3 {
        let bcs = BoundaryConditions::uniform(&mesh, linear_dirichlet(0.3, 1.7, -2.2));
        let disc = Discretization::build(mesh.clone(), p, Diffusion::heat(1.0), LdgParams::default(), bcs, None).unwrap();
        let u = disc.project(|x| vec![0.3 + 1.7 * x[0] - 2.2 * x[1]]);
        let q = disc.gradient(&u, None, 0.0).unwrap();
        for g in q.chunks(2) {
            assert!((g[0] - 1.7).abs() < 1e-11 && (g[1] + 2.2).abs() < 1e-11, "{g:?}");
        }
    }
}

#[test]
fn constant_field_has_zero_gradient_and_residual_with_neumann() {
    let mesh = perturb_interior(&unit_square(3).unwrap(), 0.2, 4).unwrap();
    let bcs = BoundaryConditions::uniform(&mesh, BoundaryKind::Neumann(BoundaryKind::constant(vec![0.0])));
    let disc = Discretization::build(mesh, 3, Diffusion::heat(1.0), LdgParams::default(), bcs, None).unwrap();
    let u = vec![2.5; disc.n_dofs()];
    let q = disc.gradient(&u, None, 0.0).unwrap();
    assert!(max_abs(&q) < 1e-12);
    let (r, d) = disc.residual_second_order(&u, &q, 0.0).unwrap();
    // r differentiates round-off in q, hence the looser bound
    assert!(max_abs(&r) < 1e-10 && max_abs(&d) < 1e-12, "{} {}", max_abs(&r), max_abs(&d));
}

#[test]
fn single_element_polynomial_gradient() {
    let p = 3;
    let poly = |x: [f64; 2]| x[0].powi(3) - 2.0 * x[0] * x[1] * x[1] + x[1].powi(2);
    let grad = |x: [f64; 2]| [3.0 * x[0] * x[0] - 2.0 * x[1] * x[1], -4.0 * x[0] * x[1] + 2.0 * x[1]];
    let bcs = BoundaryConditions::new()
        .with(1, BoundaryKind::Dirichlet(Arc::new(move |x, _, out: &mut [f64]| out[0] = poly(x))));
    // parallelogram, so the map is affine and the field stays a polynomial
    let mesh = QuadMesh::parse("4 1 4\n0 0\n2 0\n2.2 1\n0.2 1\n0 1 2 3\n0 0 1\n0 1 1\n0 2 1\n0 3 1\n").unwrap();
    let disc = Discretization::build(mesh, p, Diffusion::heat(1.0), LdgParams::default(), bcs, None).unwrap();
    let u = disc.project(|x| vec![poly(x)]);
    let q = disc.gradient(&u, None, 0.0).unwrap();
    for g in 0..disc.n_nodes() {
        let e = grad(disc.node_xy(g));
        assert!((q[2 * g] - e[0]).abs() < 1e-11 && (q[2 * g + 1] - e[1]).abs() < 1e-11);
    }
}

#[test]
fn inviscid_navier_stokes_is_first_order_bitwise() {
    let v = VortexParams::default();
    let mesh = rectangle(4, 3, (0.0, 20.0), (0.0, 15.0), true, true).unwrap();
    let euler = Discretization::build(
        mesh.clone(),
        2,
        CompressibleFlow::euler(1.4),
        LdgParams::default(),
        BoundaryConditions::new(),
        None,
    )
    .unwrap();
    let ns = Discretization::build(
        mesh,
        2,
        CompressibleFlow::navier_stokes(1.4, 0.0, 0.72),
        LdgParams::default(),
        BoundaryConditions::new(),
        None,
    )
    .unwrap();
    let u = euler.project(|x| v.exact(x[0], x[1], 0.0).to_vec());
    assert_eq!(euler.residual_first_order(&u, 0.0).unwrap(), ns.residual_primal(&u, 0.0).unwrap());
}

#[test]
fn periodic_vortex_conserves_all_components() {
    let v = VortexParams::default();
    let mesh = perturb_interior(&periodic(6, 5, 20.0, 15.0), 0.1, 3).unwrap();
    for (mu, p) in [(0.0, 2), (0.05, 3)] {
        let disc = Discretization::build(
            mesh.clone(),
            p,
            CompressibleFlow::navier_stokes(1.4, mu, 0.72),
            LdgParams::default(),
            BoundaryConditions::new(),
            None,
        )
        .unwrap();
        let u = disc.project(|x| v.exact(x[0], x[1], 0.0).to_vec());
        let r = disc.residual_primal(&u, 0.0).unwrap();
        for total in disc.integrate(&r) {
            assert!(total.abs() < 1e-11, "{total}");
        }
    }
}

#[test]
fn c22_requires_split_form() {
    let mesh = unit_square(2).unwrap();
    let bcs = BoundaryConditions::uniform(&mesh, BoundaryKind::Dirichlet(BoundaryKind::constant(vec![0.0])));
    let params = LdgParams { c11: 0.05, c22: 0.05, c11_boundary: None };
    let disc = Discretization::build(mesh, 2, Diffusion::heat(1.0), params, bcs, None).unwrap();
    let u = vec![0.0; disc.n_dofs()];
    assert!(matches!(disc.residual_primal(&u, 0.0), Err(Error::Config(_))));
}

#[test]
fn missing_condition_is_config_error() {
    let mesh = unit_square(2).unwrap();
    let bcs = BoundaryConditions::new().with(1, BoundaryKind::SlipWall);
    let err = Discretization::build(mesh, 1, Diffusion::heat(1.0), LdgParams::default(), bcs, None).err().unwrap();
    assert!(matches!(err, Error::Config(_)));
}

#[test]
fn non_physical_state_reported() {
    let disc = Discretization::build(
        periodic(2, 2, 1.0, 1.0),
        1,
        CompressibleFlow::euler(1.4),
        LdgParams::default(),
        BoundaryConditions::new(),
        None,
    )
    .unwrap();
    let mut u = disc.project(|_| vec![1.0, 0.0, 0.0, 2.5]);
    u[4] = -1.0;
    assert!(matches!(disc.residual_first_order(&u, 0.0), Err(Error::PhysicalState { .. })));
}

/// Max-norm of `F(U_h) + f` for the manufactured Poisson interpolant.
fn poisson_consistency(n: usize, p: usize) -> f64 {
    let ms = PoissonManufactured::default();
    let mesh = unit_square(n).unwrap();
    let bcs = BoundaryConditions::uniform(
        &mesh,
        BoundaryKind::Dirichlet(Arc::new(move |x, _, out: &mut [f64]| out[0] = ms.u(x[0], x[1]))),
    );
    let disc = Discretization::build(mesh, p, Diffusion::heat(1.0), LdgParams::default(), bcs, None).unwrap();
    let u = disc.project(|x| vec![ms.u(x[0], x[1])]);
    let r = disc.residual_primal(&u, 0.0).unwrap();
    (0..disc.n_nodes())
        .map(|g| {
            let x = disc.node_xy(g);
            (r[g] + ms.source(x[0], x[1])).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn poisson_divergence_converges_to_source() {
    for p in 2..=3 {
        let e: Vec<f64> = [4, 8, 16].iter().map(|&n| poisson_consistency(n, p)).collect();
        let rate = (e[1] / e[2]).log2();
        assert!(rate > p as f64 - 1.0 - 0.3, "p = {p}: errors {e:?}, rate {rate}");
    }
}
