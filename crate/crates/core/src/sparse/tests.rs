use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::discretization::{BoundaryConditions, BoundaryKind, Discretization, LdgParams};
use crate::mesh::{perturb_interior, rect_tags, rectangle, unit_square};
use crate::physics::{Advection, CompressibleFlow, Diffusion, LinearSource, PhysicsModel, VortexParams};

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn vortex_state<M: PhysicsModel>(disc: &Discretization<M>) -> Vec<f64> {
    let v = VortexParams::default();
    disc.project(|x| v.exact(x[0], x[1], 0.0).to_vec())
}

fn ns_periodic(p: usize) -> Discretization<CompressibleFlow> {
    let mesh = rectangle(2, 2, (0.0, 10.0), (0.0, 10.0), true, true).unwrap();
    Discretization::build(
        mesh,
        p,
        CompressibleFlow::navier_stokes(1.4, 0.05, 0.72),
        LdgParams::default(),
        BoundaryConditions::new(),
        None,
    )
    .unwrap()
}

fn ns_walls(p: usize, params: LdgParams) -> Discretization<CompressibleFlow> {
    let mesh = perturb_interior(&rectangle(2, 2, (0.0, 10.0), (0.0, 10.0), false, false).unwrap(), 0.2, 5).unwrap();
    let v = VortexParams::default();
    let far: crate::discretization::PointFn = std::sync::Arc::new(move |x, t, out: &mut [f64]| {
        out.copy_from_slice(&v.exact(x[0], x[1], t))
    });
    let bcs = BoundaryConditions::new()
        .with(rect_tags::BOTTOM, BoundaryKind::NoSlipAdiabatic)
        .with(rect_tags::TOP, BoundaryKind::SlipWall)
        .with(rect_tags::LEFT, BoundaryKind::Characteristic(far.clone()))
        .with(rect_tags::RIGHT, BoundaryKind::Characteristic(far));
    Discretization::build(mesh, p, CompressibleFlow::navier_stokes(1.4, 0.05, 0.72), params, bcs, None).unwrap()
}

fn poisson(n: usize, p: usize, params: LdgParams) -> Discretization<Diffusion> {
    let bcs = BoundaryConditions::new()
        .with(rect_tags::BOTTOM, BoundaryKind::Dirichlet(BoundaryKind::constant(vec![0.0])))
        .with(rect_tags::LEFT, BoundaryKind::Dirichlet(BoundaryKind::constant(vec![0.0])))
        .with(rect_tags::TOP, BoundaryKind::Neumann(BoundaryKind::constant(vec![0.3])))
        .with(rect_tags::RIGHT, BoundaryKind::Dirichlet(BoundaryKind::constant(vec![1.0])));
    Discretization::build(unit_square(n).unwrap(), p, Diffusion::heat(1.0), params, bcs, None).unwrap()
}

fn rel_frobenius(a: &CscMatrix, b: &CscMatrix) -> f64 {
    assert_eq!(a.col_ptr(), b.col_ptr());
    assert_eq!(a.row_idx(), b.row_idx());
    let diff: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    diff / a.frobenius_norm().max(f64::MIN_POSITIVE)
}

/// Dense row-major `I - αΔt (K11 + K12 K21)`.
fn dense_shifted(b: &JacobianBlocks, alpha_dt: f64) -> Vec<f64> {
    let n = b.n_dofs();
    let mut a = b.k11.to_dense();
    if let (Some(k12), Some(k21)) = (&b.k12, &b.k21) {
        let (d12, d21, na) = (k12.to_dense(), k21.to_dense(), b.n_aux());
        for i in 0..n {
            for k in 0..na {
                let x = d12[i * na + k];
                if x != 0.0 {
                    for j in 0..n {
                        a[i * n + j] += x * d21[k * n + j];
                    }
                }
            }
        }
    }
    for (k, v) in a.iter_mut().enumerate() {
        *v *= -alpha_dt;
        if k / n == k % n {
            *v += 1.0;
        }
    }
    a
}

fn dense_solve(a: &[f64], b: &[f64]) -> Vec<f64> {
    use faer::linalg::solvers::Solve;
    let n = b.len();
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i * n + j]);
    let mut rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    m.partial_piv_lu().solve_in_place(rhs.as_mut());
    (0..n).map(|i| rhs[(i, 0)]).collect()
}

#[test]
fn advection_jacobian_matches_directional_derivative() {
    let mesh = rectangle(2, 2, (0.0, 1.0), (0.0, 1.0), true, true).unwrap();
    let disc = Discretization::build(
        mesh,
        1,
        Advection { velocity: [1.0, -0.6] },
        LdgParams::default(),
        BoundaryConditions::new(),
        None,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u = random_vec(&mut rng, disc.n_dofs());
    let b = assemble_jacobians(&disc, &u, None, 0.0, JacobianMode::Analytic).unwrap();
    // linear residual: differencing about zero keeps round-off relative to h
    let zero = vec![0.0; disc.n_dofs()];
    let h = 1e-7;
    for _ in 0..10 {
        let v = random_vec(&mut rng, disc.n_dofs());
        let plus: Vec<f64> = zero.iter().zip(&v).map(|(a, b)| a + h * b).collect();
        let minus: Vec<f64> = zero.iter().zip(&v).map(|(a, b)| a - h * b).collect();
        let rp = disc.residual_first_order(&plus, 0.0).unwrap();
        let rm = disc.residual_first_order(&minus, 0.0).unwrap();
        let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let kv = b.k11.matvec(&v).unwrap();
        let err: Vec<f64> = kv.iter().zip(&fd).map(|(a, b)| a - b).collect();
        assert!(norm(&err) < 1e-11 * norm(&kv), "{}", norm(&err) / norm(&kv));
    }
}

#[test]
fn pure_source_gives_identity() {
    let disc = Discretization::build(
        unit_square(2).unwrap(),
        2,
        LinearSource { m: 2, lambda: 1.0 },
        LdgParams::default(),
        BoundaryConditions::new().with(1, BoundaryKind::SlipWall).with(2, BoundaryKind::SlipWall)
            .with(3, BoundaryKind::SlipWall).with(4, BoundaryKind::SlipWall),
        None,
    )
    .unwrap();
    let u: Vec<f64> = (0..disc.n_dofs()).map(|k| k as f64 * 0.01).collect();
    for mode in [JacobianMode::Analytic, JacobianMode::FiniteDifference] {
        let b = assemble_jacobians(&disc, &u, None, 0.0, mode).unwrap();
        for (i, j, v) in b.k11.triplets() {
            let expect = if i == j { 1.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-9, "{mode:?} ({i},{j}) = {v}");
        }
    }
}

#[test]
fn analytic_matches_finite_difference_navier_stokes() {
    for disc in [ns_periodic(2), ns_walls(2, LdgParams::default())] {
        let u = vortex_state(&disc);
        let a = assemble_jacobians(&disc, &u, None, 0.0, JacobianMode::Analytic).unwrap();
        let f = assemble_jacobians(&disc, &u, None, 0.0, JacobianMode::FiniteDifference).unwrap();
        assert!(rel_frobenius(&a.k11, &f.k11) < 1e-6);
        assert!(rel_frobenius(a.k12.as_ref().unwrap(), f.k12.as_ref().unwrap()) < 1e-6);
        assert!(rel_frobenius(a.k21.as_ref().unwrap(), f.k21.as_ref().unwrap()) < 1e-6);
    }
}

#[test]
fn analytic_matches_finite_difference_with_c22() {
    let params = LdgParams { c11: 0.05, c22: 0.05, c11_boundary: None };
    let disc = ns_walls(1, params);
    let u = vortex_state(&disc);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let q: Vec<f64> = random_vec(&mut rng, disc.n_aux()).iter().map(|x| 0.1 * x).collect();
    let a = assemble_jacobians(&disc, &u, Some(&q), 0.3, JacobianMode::Analytic).unwrap();
    let f = assemble_jacobians(&disc, &u, Some(&q), 0.3, JacobianMode::FiniteDifference).unwrap();
    assert!(rel_frobenius(&a.k11, &f.k11) < 1e-6);
    assert!(rel_frobenius(a.k12.as_ref().unwrap(), f.k12.as_ref().unwrap()) < 1e-6);
    assert!(rel_frobenius(a.k21.as_ref().unwrap(), f.k21.as_ref().unwrap()) < 1e-6);
    assert!(rel_frobenius(a.k22.as_ref().unwrap(), f.k22.as_ref().unwrap()) < 1e-6);
    assert!(a.k22.as_ref().unwrap().frobenius_norm() > 0.0);
}

#[test]
fn gradient_block_is_constant() {
    let disc = ns_periodic(2);
    let u1 = vortex_state(&disc);
    let u2: Vec<f64> = u1.iter().enumerate().map(|(k, v)| v * (1.0 + 0.01 * ((k % 7) as f64))).collect();
    let a = assemble_jacobians(&disc, &u1, None, 0.0, JacobianMode::Analytic).unwrap();
    let b = assemble_jacobians(&disc, &u2, None, 1.5, JacobianMode::Analytic).unwrap();
    assert_eq!(a.k21.as_deref().unwrap(), b.k21.as_deref().unwrap());
    assert_ne!(a.k11, b.k11);
    assert_ne!(a.stamp, b.stamp);

    let mut asm = JacobianAssembler::new(&disc, JacobianMode::Analytic);
    let first = asm.assemble(&disc, &u1, None, 0.0).unwrap();
    let second = asm.assemble(&disc, &u2, None, 0.0).unwrap();
    assert!(std::sync::Arc::ptr_eq(first.k21.as_ref().unwrap(), second.k21.as_ref().unwrap()));
    assert_eq!(asm.assemblies(), 2);
}

#[test]
fn no_slip_wall_makes_gradient_block_state_dependent() {
    let disc = ns_walls(1, LdgParams::default());
    assert!(!gradient_is_linear(&disc));
    let mut asm = JacobianAssembler::new(&disc, JacobianMode::Analytic);
    let u1 = vortex_state(&disc);
    let u2: Vec<f64> = u1.iter().map(|v| v * 1.01).collect();
    let a = asm.assemble(&disc, &u1, None, 0.0).unwrap();
    let b = asm.assemble(&disc, &u2, None, 0.0).unwrap();
    assert!(!std::sync::Arc::ptr_eq(a.k21.as_ref().unwrap(), b.k21.as_ref().unwrap()));
}

#[test]
fn observed_pattern_equals_predicted_stencil() {
    let v = VortexParams::default();
    for p in 1..=3 {
        let mesh = rectangle(4, 3, (0.0, 10.0), (0.0, 10.0), true, true).unwrap();
        let disc = Discretization::build(
            mesh,
            p,
            CompressibleFlow::euler(1.4),
            LdgParams::default(),
            BoundaryConditions::new(),
            None,
        )
        .unwrap();
        let u = disc.project(|x| v.exact(x[0], x[1], 0.0).to_vec());
        let b = assemble_jacobians(&disc, &u, None, 0.0, JacobianMode::Analytic).unwrap();
        let counts = observed_block_counts(&b.k11, 4, 4);
        let pat = NodePattern::line_dg(&disc);
        for (i, &c) in counts.iter().enumerate() {
            assert_eq!(c, pat.row(i).len());
            assert_eq!(c, 2 * p + 5);
        }
    }
}

#[test]
fn restricted_pattern_is_a_consistency_error() {
    let disc = ns_periodic(1);
    let u = vortex_state(&disc);
    for mode in [JacobianMode::Analytic, JacobianMode::FiniteDifference] {
        let mut asm = JacobianAssembler::with_pattern(NodePattern::intra_element(&disc), mode);
        assert!(matches!(asm.assemble(&disc, &u, None, 0.0), Err(crate::Error::Consistency(_))));
    }
}

#[test]
fn split_matvec_matches_dense_product() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let disc = ns_periodic(2);
    let u = vortex_state(&disc);
    let b = assemble_jacobians(&disc, &u, None, 0.0, JacobianMode::Analytic).unwrap();
    assert!(b.n_dofs() <= 400);
    let alpha_dt = 0.37;
    let dense = dense_shifted(&b, alpha_dt);
    let n = b.n_dofs();
    for _ in 0..20 {
        let v = random_vec(&mut rng, n);
        let s = split_matvec(&b, alpha_dt, &v).unwrap();
        let d: Vec<f64> = (0..n).map(|i| (0..n).map(|j| dense[i * n + j] * v[j]).sum()).collect();
        let err: Vec<f64> = s.iter().zip(&d).map(|(a, b)| a - b).collect();
        assert!(norm(&err) <= 1e-13 * norm(&d));
    }
    let v = random_vec(&mut rng, n);
    assert_eq!(split_matvec(&b, 0.0, &v).unwrap(), v);
    assert!(split_matvec(&b, 0.1, &v[1..]).is_err());
}

#[test]
fn split_matvec_first_order_uses_k11_only() {
    let disc = ns_periodic(1);
    let euler = Discretization::build(
        disc.mesh.clone(),
        1,
        CompressibleFlow::euler(1.4),
        LdgParams::default(),
        BoundaryConditions::new(),
        None,
    )
    .unwrap();
    let u = vortex_state(&euler);
    let b = assemble_jacobians(&euler, &u, None, 0.0, JacobianMode::Analytic).unwrap();
    assert!(b.k12.is_none());
    let v: Vec<f64> = (0..b.n_dofs()).map(|k| (k as f64).sin()).collect();
    let kv = b.k11.matvec(&v).unwrap();
    let s = split_matvec(&b, 0.2, &v).unwrap();
    for k in 0..v.len() {
        assert!((s[k] - (v[k] - 0.2 * kv[k])).abs() < 1e-14 * (1.0 + kv[k].abs()));
    }
}

#[test]
fn single_element_preconditioner_is_exact() {
    let mesh = rectangle(1, 1, (0.0, 1.0), (0.0, 2.0), false, false).unwrap();
    let bcs = BoundaryConditions::uniform(&mesh, BoundaryKind::Dirichlet(BoundaryKind::constant(vec![0.0])));
    let disc = Discretization::build(mesh, 3, Advection { velocity: [1.0, 0.7] }, LdgParams::default(), bcs, None)
        .unwrap();
    let u = vec![0.0; disc.n_dofs()];
    let b = assemble_jacobians(&disc, &u, None, 0.0, JacobianMode::Analytic).unwrap();
    let alpha_dt = 0.05;
    let pc = BlockJacobiPreconditioner::build(&b, alpha_dt).unwrap();
    assert_eq!(pc.n_blocks(), 1);
    let dense = dense_shifted(&b, alpha_dt);
    let x: Vec<f64> = (0..disc.n_dofs()).map(|k| 1.0 + (k as f64 * 0.7).cos()).collect();
    let exact = dense_solve(&dense, &x);
    let mut y = vec![0.0; x.len()];
    pc.apply(&x, &mut y).unwrap();
    for (a, e) in y.iter().zip(&exact) {
        assert!((a - e).abs() < 1e-12 * (1.0 + e.abs()));
    }
}

#[test]
fn zero_shift_preconditioner_is_identity() {
    let disc = ns_periodic(1);
    let u = vortex_state(&disc);
    let b = assemble_jacobians(&disc, &u, None, 0.0, JacobianMode::Analytic).unwrap();
    let pc = BlockJacobiPreconditioner::build(&b, 0.0).unwrap();
    let x: Vec<f64> = (0..b.n_dofs()).map(|k| k as f64 - 3.0).collect();
    let mut y = vec![0.0; x.len()];
    pc.apply(&x, &mut y).unwrap();
    assert_eq!(x, y);
}

#[test]
fn block_jacobi_halves_poisson_iterations() {
    let mesh = unit_square(8).unwrap();
    let bcs = BoundaryConditions::uniform(&mesh, BoundaryKind::Dirichlet(BoundaryKind::constant(vec![0.0])));
    let disc = Discretization::build(mesh, 3, Diffusion::heat(1.0), LdgParams::default(), bcs, None).unwrap();
    let u = vec![0.0; disc.n_dofs()];
    let b = assemble_jacobians(&disc, &u, None, 0.0, JacobianMode::Analytic).unwrap();
    let pc = BlockJacobiPreconditioner::build_shifted(&b, 0.0, 1.0).unwrap();
    let rhs: Vec<f64> = disc.project(|x| vec![(3.0 * x[0]).sin() + x[1]]);
    let op = |x: &[f64], y: &mut [f64]| b.shifted_apply(0.0, 1.0, x, y);
    let plain = gmres::gmres(op, gmres::identity, &rhs, 1e-6, 2000, 0).unwrap();
    let pre = gmres::gmres(op, |x: &[f64], y: &mut [f64]| pc.apply(x, y), &rhs, 1e-6, 2000, 0).unwrap();
    assert!(plain.converged && pre.converged);
    assert!(2 * pre.iterations <= plain.iterations, "{} vs {}", pre.iterations, plain.iterations);
}

#[test]
fn kkt_with_zero_c22_matches_reduced_solve() {
    let disc = poisson(2, 2, LdgParams::default());
    let u = vec![0.0; disc.n_dofs()];
    let b = assemble_jacobians(&disc, &u, None, 0.0, JacobianMode::Analytic).unwrap();
    let rhs: Vec<f64> = disc.project(|x| vec![x[0] * x[1]]);
    let (xu, xq) = kkt_solve(&b, 1.0, -0.1, &rhs, &vec![0.0; disc.n_aux()]).unwrap();
    let back = split_matvec(&b, 0.1, &xu).unwrap();
    for (a, r) in back.iter().zip(&rhs) {
        assert!((a - r).abs() < 1e-10);
    }
    let g = b.k21.as_ref().unwrap().matvec(&xu).unwrap();
    for (a, e) in xq.iter().zip(&g) {
        assert!((a - e).abs() < 1e-10);
    }
}
