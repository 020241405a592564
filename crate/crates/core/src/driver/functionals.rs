//! Error norms, wall forces, entropy error and field dumps.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use crate::basis::{gauss_legendre, lagrange_values};
use crate::discretization::Discretization;
use crate::error::{Error, Result};
use crate::mesh::face_node;
use crate::physics::{CompressibleFlow, GasModel, PhysicsModel};

/// Maximum nodal error of `u` against `exact`, and of `q` against
/// `exact_q` when both are given. `exact_q` fills `2m` values ordered
/// `(component, direction)`.
pub fn error_norms<M: PhysicsModel>(
    disc: &Discretization<M>,
    u: &[f64],
    exact: impl Fn([f64; 2]) -> Vec<f64>,
    q: Option<(&[f64], &dyn Fn([f64; 2]) -> Vec<f64>)>,
) -> (f64, Option<f64>) {
    let m = disc.ncomp();
    let mut eu = 0.0f64;
    let mut eq = q.map(|_| 0.0f64);
    for g in 0..disc.n_nodes() {
        let x = disc.node_xy(g);
        for (c, v) in exact(x).iter().take(m).enumerate() {
            eu = eu.max((u[g * m + c] - v).abs());
        }
        if let (Some((qv, fq)), Some(e)) = (q, eq.as_mut()) {
            for (k, v) in fq(x).iter().take(2 * m).enumerate() {
                *e = e.max((qv[g * 2 * m + k] - v).abs());
            }
        }
    }
    (eu, eq)
}

/// Normalization of wall forces: `½ ρ∞ |v∞|^2 chord`, with drag measured
/// along the free-stream angle `alpha`. Pressure enters relative to `p_inf`,
/// which only matters for open bodies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ForceReference {
    pub rho_inf: f64,
    pub u_inf: f64,
    pub chord: f64,
    pub alpha: f64,
    pub p_inf: f64,
}

/// Drag and lift coefficients `(C_D, C_L)` from pressure and, for viscous
/// flow, viscous stresses on the faces tagged `wall_tags`. Face integrals use
/// `n_quad` Gauss points on the interpolated face data.
pub fn boundary_forces(
    disc: &Discretization<CompressibleFlow>,
    u: &[f64],
    q: Option<&[f64]>,
    wall_tags: &[usize],
    reference: ForceReference,
    n_quad: usize,
) -> Result<(f64, f64)> {
    let tags = disc.mesh.tags();
    if let Some(t) = wall_tags.iter().find(|t| !tags.contains(t)) {
        return Err(Error::Config(format!("wall tag {t} is not a boundary tag of the mesh")));
    }
    let viscous = disc.model.is_viscous();
    if viscous && q.is_none() {
        return Err(Error::invalid("viscous forces need the gradient field"));
    }
    let (p, np, m) = (disc.p(), disc.basis.n_nodes(), 4);
    let (xq, wq) = gauss_legendre(n_quad)?;
    let interp: Vec<Vec<f64>> = xq.iter().map(|&x| lagrange_values(&disc.basis.nodes, x)).collect();
    let gas = &disc.model.gas;
    let mut force = [0.0; 2];
    for face in disc.mesh.faces.iter().filter(|f| f.tag.is_some_and(|t| wall_tags.contains(&t))) {
        let (e, f) = (face.left.elem, face.left.local);
        let geo = &disc.geo[e];
        let base = e * np * np;
        let nodes: Vec<usize> = (0..np)
            .map(|k| {
                let (i, j) = face_node(p, f, k);
                base + i + np * j
            })
            .collect();
        for (phi, w) in interp.iter().zip(&wq) {
            let mut us = [0.0; 4];
            let mut qs = [0.0; 8];
            let mut n = [0.0; 2];
            for (k, &g) in nodes.iter().enumerate() {
                for c in 0..m {
                    us[c] += phi[k] * u[g * m + c];
                }
                if let Some(q) = q {
                    for c in 0..2 * m {
                        qs[c] += phi[k] * q[g * 2 * m + c];
                    }
                }
                n[0] += phi[k] * geo.normals[f][k][0];
                n[1] += phi[k] * geo.normals[f][k][1];
            }
            gas.check(&us)?;
            let pr = gas.pressure(&us);
            let mut fv = [0.0; 8];
            if viscous {
                gas.ns_viscous_flux(&us, &qs, &mut fv);
            }
            for d in 0..2 {
                // momentum flux p n + F_vis n; F_vis is minus the viscous stress
                let visc = fv[2 * (1 + d)] * n[0] + fv[2 * (1 + d) + 1] * n[1];
                force[d] += w * ((pr - reference.p_inf) * n[d] + visc);
            }
        }
    }
    let scale = 0.5 * reference.rho_inf * reference.u_inf * reference.u_inf * reference.chord;
    let (ca, sa) = (reference.alpha.cos(), reference.alpha.sin());
    Ok(((force[0] * ca + force[1] * sa) / scale, (-force[0] * sa + force[1] * ca) / scale))
}

/// `max |s / s∞ - 1|` over all nodes with `s = p / ρ^γ`.
pub fn entropy_error(u: &[f64], gas: &GasModel, free_stream: &[f64]) -> Result<f64> {
    gas.check(free_stream)?;
    let s_inf = gas.entropy(free_stream);
    let mut err = 0.0f64;
    for s in u.chunks_exact(4) {
        gas.check(s)?;
        err = err.max((gas.entropy(s) / s_inf - 1.0).abs());
    }
    Ok(err)
}

/// Writes `x,y,comp0,...` with one row per node and 17 significant digits.
pub fn dump_field<M: PhysicsModel>(disc: &Discretization<M>, u: &[f64], path: impl AsRef<Path>) -> Result<()> {
    let m = disc.ncomp();
    if u.len() != disc.n_dofs() {
        return Err(Error::invalid("field size does not match the discretization"));
    }
    let mut out = BufWriter::new(std::fs::File::create(path)?);
    let head: Vec<String> = (0..m).map(|c| format!("comp{c}")).collect();
    writeln!(out, "x,y,{}", head.join(","))?;
    for g in 0..disc.n_nodes() {
        let x = disc.node_xy(g);
        write!(out, "{:.16e},{:.16e}", x[0], x[1])?;
        for v in &u[g * m..(g + 1) * m] {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a file written by [`dump_field`]: node coordinates and values.
pub fn read_field(path: impl AsRef<Path>) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
    let file = std::io::BufReader::new(std::fs::File::open(path)?);
    let (mut xy, mut vals) = (Vec::new(), Vec::new());
    for (ln, line) in file.lines().enumerate().skip(1) {
        let line = line?;
        let nums = line
            .split(',')
            .map(str::parse::<f64>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Parse { line: ln + 1, msg: e.to_string() })?;
        if nums.len() < 2 {
            return Err(Error::Parse { line: ln + 1, msg: "expected x,y,...".into() });
        }
        xy.push([nums[0], nums[1]]);
        vals.extend_from_slice(&nums[2..]);
    }
    Ok((xy, vals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{BoundaryConditions, BoundaryKind, LdgParams};
    use crate::mesh::{annulus, annulus_projection, annulus_tags, rectangle};
    use crate::physics::{Diffusion, VortexParams};

    fn scalar_disc(p: usize) -> Discretization<Diffusion> {
        let mesh = rectangle(3, 2, (0.0, 1.0), (0.0, 1.0), true, true).unwrap();
        Discretization::build(mesh, p, Diffusion::heat(1.0), LdgParams::default(), BoundaryConditions::new(), None)
            .unwrap()
    }

    #[test]
    fn polynomial_interpolant_has_no_error() {
        let disc = scalar_disc(3);
        let f = |x: [f64; 2]| vec![x[0].powi(3) - 2.0 * x[0] * x[1] + 0.5];
        let u = disc.project(f);
        let (e, _) = error_norms(&disc, &u, f, None);
        assert!(e < 1e-12);
        let shifted: Vec<f64> = u.iter().map(|v| v + 0.25).collect();
        let grad = |x: [f64; 2]| vec![3.0 * x[0] * x[0] - 2.0 * x[1], -2.0 * x[0]];
        let q2: Vec<f64> = (0..disc.n_nodes()).flat_map(|g| grad(disc.node_xy(g))).collect();
        let (e, eq) = error_norms(&disc, &shifted, f, Some((&q2, &grad)));
        assert!((e - 0.25).abs() < 1e-14);
        assert!(eq.unwrap() < 1e-14);
    }

    fn cylinder_disc(p: usize) -> Discretization<CompressibleFlow> {
        let mesh = annulus(8, 3, 1.0, 4.0, 0.0, 2.0 * std::f64::consts::PI).unwrap();
        let proj = annulus_projection(1.0, 4.0);
        let fs = BoundaryKind::constant(vec![1.0, 0.3, 0.0, 2.0]);
        let bcs = BoundaryConditions::new()
            .with(annulus_tags::INNER, BoundaryKind::SlipWall)
            .with(annulus_tags::OUTER, BoundaryKind::Characteristic(fs));
        Discretization::build(mesh, p, CompressibleFlow::euler(1.4), LdgParams::default(), bcs, Some(&proj)).unwrap()
    }

    #[test]
    fn uniform_pressure_gives_no_force() {
        let disc = cylinder_disc(3);
        let u = disc.project(|_| vec![1.0, 0.0, 0.0, 2.5]);
        let r = ForceReference { rho_inf: 1.0, u_inf: 0.3, chord: 2.0, alpha: 0.0, p_inf: 0.0 };
        let (cd, cl) = boundary_forces(&disc, &u, None, &[annulus_tags::INNER], r, 6).unwrap();
        assert!(cd.abs() < 1e-11 && cl.abs() < 1e-11, "{cd} {cl}");
        let gauge = ForceReference { p_inf: 1.0, ..r };
        let (cd, cl) = boundary_forces(&disc, &u, None, &[annulus_tags::INNER], gauge, 6).unwrap();
        assert!(cd.abs() < 1e-11 && cl.abs() < 1e-11, "{cd} {cl}");
        assert!(matches!(boundary_forces(&disc, &u, None, &[9], r, 6), Err(Error::Config(_))));
    }

    #[test]
    fn linear_pressure_gives_buoyancy() {
        // p = 2 - y on a circle of radius 1 pushes up with force π
        let disc = cylinder_disc(4);
        let u = disc.project(|x| vec![1.0, 0.0, 0.0, (2.0 - x[1]) / 0.4]);
        let r = ForceReference { rho_inf: 1.0, u_inf: 1.0, chord: 2.0, alpha: 0.0, p_inf: 0.0 };
        let (cd, cl) = boundary_forces(&disc, &u, None, &[annulus_tags::INNER], r, 8).unwrap();
        assert!(cd.abs() < 1e-10);
        assert!((cl - std::f64::consts::PI).abs() < 1e-4, "{cl}");
    }

    #[test]
    fn entropy_of_vortex_is_uniform() {
        let v = VortexParams::default();
        let gas = GasModel::default();
        let mesh = rectangle(4, 3, (0.0, 20.0), (0.0, 15.0), true, true).unwrap();
        let disc = Discretization::build(
            mesh,
            3,
            CompressibleFlow::euler(1.4),
            LdgParams::default(),
            BoundaryConditions::new(),
            None,
        )
        .unwrap();
        let u = disc.project(|x| v.exact(x[0], x[1], 0.0).to_vec());
        assert!(entropy_error(&u, &gas, &v.free_stream()).unwrap() < 1e-12);
        let fs = v.free_stream();
        assert_eq!(entropy_error(&fs, &gas, &fs).unwrap(), 0.0);
        assert!(entropy_error(&[1.0, 0.0, 0.0, -1.0], &gas, &fs).is_err());
    }

    #[test]
    fn dump_round_trips_bitwise() {
        let disc = scalar_disc(2);
        let u = disc.project(|x| vec![(x[0] * 7.3).sin() / 3.0 + x[1] * 1e-9]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("u.csv");
        dump_field(&disc, &u, &path).unwrap();
        let (xy, vals) = read_field(&path).unwrap();
        assert_eq!(xy.len(), disc.mesh.n_elems() * 9);
        assert_eq!(vals.iter().map(|v| v.to_bits()).collect::<Vec<_>>(), u.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        for (g, x) in xy.iter().enumerate() {
            assert_eq!(*x, disc.node_xy(g));
        }
    }
}
