//! Built-in cases and the refinement x degree sweep.

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::sync::Arc;

use super::config::{Case, Integrator, RunConfig};
use super::functionals::{boundary_forces, dump_field, entropy_error, error_norms, ForceReference};
use super::report::ConvergenceReport;
use crate::discretization::{BoundaryConditions, BoundaryKind, Discretization, PointFn};
use crate::error::{Error, Result};
use crate::mesh::{annulus, annulus_projection, annulus_tags, perturb_interior, rectangle, QuadMesh};
use crate::physics::{CompressibleFlow, Diffusion, GasModel, PhysicsModel, PoissonManufactured, VortexParams};
use crate::time::{
    pseudo_transient_steady, rk4_integrate, solve_split_steady, write_stats_csv, DgSystem, DirkIntegrator,
};

/// Seed of the interior mesh perturbation.
const PERTURB_SEED: u64 = 20;

/// Cylinder radius and outer boundary radius.
const CYL_R: (f64, f64) = (1.0, 10.0);

/// Results of one `(p, level)` run.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelSummary {
    pub p: usize,
    pub n: usize,
    pub n_dofs: usize,
    pub error_u: f64,
    pub error_q: Option<f64>,
    /// `(C_D, C_L)` for the cylinder.
    pub forces: Option<(f64, f64)>,
    /// Time steps taken, or continuation steps for steady solves.
    pub steps: usize,
    pub newton_iterations: usize,
    /// Relative change of the total mass over a transient run.
    pub mass_drift: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOutput {
    pub report: ConvergenceReport,
    pub levels: Vec<LevelSummary>,
}

impl RunOutput {
    pub fn summary_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:.10e}"));
        let mut s = String::from("p,n,n_dofs,error_u,error_q,cd,cl,steps,newton_iterations,mass_drift\n");
        for l in &self.levels {
            s += &format!(
                "{},{},{},{:.10e},{},{},{},{},{},{}\n",
                l.p,
                l.n,
                l.n_dofs,
                l.error_u,
                opt(l.error_q),
                opt(l.forces.map(|f| f.0)),
                opt(l.forces.map(|f| f.1)),
                l.steps,
                l.newton_iterations,
                opt(l.mass_drift)
            );
        }
        s
    }
}

/// Base mesh of a case, before refinement.
pub fn base_mesh(cfg: &RunConfig) -> Result<QuadMesh> {
    let [nx, ny] = cfg.mesh_n;
    let mesh = match cfg.case {
        Case::Poisson => rectangle(nx, ny, (0.0, 1.0), (0.0, 1.0), false, false)?,
        Case::EulerVortex => rectangle(nx, ny, (0.0, 20.0), (0.0, 15.0), cfg.periodic, cfg.periodic)?,
        Case::EulerCylinder => annulus(nx, ny, CYL_R.0, CYL_R.1, 0.0, std::f64::consts::PI)?,
        Case::Custom => {
            let path = cfg.mesh_path.as_ref().ok_or_else(|| Error::Config("case custom needs mesh_path".into()))?;
            QuadMesh::load(path)?
        }
    };
    if cfg.perturb > 0.0 {
        perturb_interior(&mesh, cfg.perturb, PERTURB_SEED)
    } else {
        Ok(mesh)
    }
}

/// Mesh of refinement level `level` (0 for the base mesh). The cylinder is
/// regenerated at doubled resolution so that the grading and the curved
/// boundary stay exact.
pub fn level_mesh(cfg: &RunConfig, level: usize) -> Result<QuadMesh> {
    if cfg.case == Case::EulerCylinder {
        let k = 1 << level;
        return annulus(cfg.mesh_n[0] * k, cfg.mesh_n[1] * k, CYL_R.0, CYL_R.1, 0.0, std::f64::consts::PI);
    }
    let mut mesh = base_mesh(cfg)?;
    for _ in 0..level {
        mesh = mesh.refine_uniform()?;
    }
    Ok(mesh)
}

/// Runs the sweep, writes `report.csv`, `summary.csv` and field dumps into
/// the output directory and returns the results.
pub fn run_case(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output_dir)?;
    let mut out = RunOutput::default();
    for &p in &cfg.degrees {
        let mut eu = Vec::new();
        let mut eq = Vec::new();
        for level in 0..=cfg.refinements {
            let mesh = level_mesh(cfg, level)?;
            let s = match cfg.case {
                Case::Poisson | Case::Custom => run_poisson(cfg, mesh, p, level)?,
                Case::EulerVortex => run_vortex(cfg, mesh, p, level)?,
                Case::EulerCylinder => run_cylinder(cfg, mesh, p, level)?,
            };
            eu.push(s.error_u);
            if let Some(q) = s.error_q {
                eq.push(q);
            }
            out.levels.push(s);
        }
        let q = (eq.len() == eu.len()).then_some(eq.as_slice());
        out.report.push_degree(p, &eu, q);
    }
    out.report.write(cfg.output_dir.join("report.csv"))?;
    fs::write(cfg.output_dir.join("summary.csv"), out.summary_csv())?;
    Ok(out)
}

fn dump<M: PhysicsModel>(cfg: &RunConfig, disc: &Discretization<M>, u: &[f64], p: usize, level: usize) -> Result<()> {
    if cfg.dump_fields {
        dump_field(disc, u, cfg.output_dir.join(format!("field_p{p}_n{}.csv", level + 1)))?;
    }
    Ok(())
}

fn summary(p: usize, level: usize, n_dofs: usize, error_u: f64) -> LevelSummary {
    LevelSummary {
        p,
        n: level + 1,
        n_dofs,
        error_u,
        error_q: None,
        forces: None,
        steps: 0,
        newton_iterations: 0,
        mass_drift: None,
    }
}

fn run_poisson(cfg: &RunConfig, mesh: QuadMesh, p: usize, level: usize) -> Result<LevelSummary> {
    let ms = PoissonManufactured::default();
    let g: PointFn = Arc::new(move |x, _, out: &mut [f64]| out[0] = ms.u(x[0], x[1]));
    let bcs = BoundaryConditions::uniform(&mesh, BoundaryKind::Dirichlet(g));
    let disc = Discretization::build(mesh, p, Diffusion::poisson(ms), cfg.ldg, bcs, None)?;
    let u0 = vec![0.0; disc.n_dofs()];
    let (u, q, its) = match cfg.integrator {
        Integrator::SplitDirect => {
            let q0 = vec![0.0; disc.n_aux()];
            solve_split_steady(&disc, &u0, &q0, 0.0, cfg.newton.tol, cfg.newton.max_newton)?
        }
        _ => {
            let mut sys = DgSystem::new(&disc, cfg.jacobian, cfg.linear_solver);
            let (u, st) = pseudo_transient_steady(&mut sys, &u0, 0.0, &[], &cfg.newton)?;
            let q = disc.primal_gradient(&u, 0.0)?;
            (u, q, st.newton_iterations)
        }
    };
    let grad = move |x: [f64; 2]| ms.grad(x[0], x[1]).to_vec();
    let (e, eq) = error_norms(&disc, &u, |x| vec![ms.u(x[0], x[1])], Some((&q, &grad)));
    dump(cfg, &disc, &u, p, level)?;
    Ok(LevelSummary { error_q: eq, newton_iterations: its, ..summary(p, level, disc.n_dofs(), e) })
}

/// Vortex discretization on `mesh`: periodic, or characteristic boundaries
/// that take the exact solution as far-field state.
pub fn vortex_discretization(
    mesh: QuadMesh,
    p: usize,
    cfg: &RunConfig,
    v: VortexParams,
) -> Result<Discretization<CompressibleFlow>> {
    let far: PointFn = Arc::new(move |x, t, out: &mut [f64]| out.copy_from_slice(&v.exact(x[0], x[1], t)));
    let bcs = BoundaryConditions::uniform(&mesh, BoundaryKind::Characteristic(far));
    Discretization::build(mesh, p, CompressibleFlow::euler(v.gamma), cfg.ldg, bcs, None)
}

/// Smallest `area / longest face` over all elements.
fn min_size<M: PhysicsModel>(disc: &Discretization<M>) -> f64 {
    disc.geo.iter().map(|g| g.area / g.face_len.iter().fold(0.0f64, |a, &b| a.max(b))).fold(f64::INFINITY, f64::min)
}

fn run_vortex(cfg: &RunConfig, mesh: QuadMesh, p: usize, level: usize) -> Result<LevelSummary> {
    let v = VortexParams::default();
    let disc = vortex_discretization(mesh, p, cfg, v)?;
    let u0 = disc.project(|x| v.exact(x[0], x[1], 0.0).to_vec());
    let t_end = cfg.end_time.unwrap_or_else(|| v.end_time());
    let dt = match cfg.dt {
        Some(dt) => dt / (1 << level) as f64,
        None => cfg.cfl * min_size(&disc) / ((v.u_inf() + 1.0) * (2 * p + 1) as f64),
    };
    let (u, steps, its) = match cfg.integrator {
        Integrator::Rk4 => {
            let mut steps = 0;
            let u = rk4_integrate(|x, t| disc.residual_first_order(x, t), &u0, 0.0, t_end, dt, |k, _, _| steps = k)?;
            (u, steps, 0)
        }
        _ => {
            let mut sys = DgSystem::new(&disc, cfg.jacobian, cfg.linear_solver);
            let mut integ = DirkIntegrator::new(cfg.newton)?;
            let u = integ.integrate(&mut sys, &u0, 0.0, t_end, dt)?;
            let path = cfg.output_dir.join(format!("dirk_stats_p{p}_n{}.csv", level + 1));
            write_stats_csv(&integ.log, BufWriter::new(fs::File::create(path)?))?;
            let its = integ.log.iter().map(|r| r.newton_iters).sum();
            (u, integ.steps(), its)
        }
    };
    let e = density_error(&disc, &u, |x| v.exact(x[0], x[1], t_end)[0]);
    let m0 = disc.integrate(&u0)[0];
    let m1 = disc.integrate(&u)[0];
    dump(cfg, &disc, &u, p, level)?;
    Ok(LevelSummary {
        steps,
        newton_iterations: its,
        mass_drift: Some((m1 - m0) / m0),
        ..summary(p, level, disc.n_dofs(), e)
    })
}

/// Maximum nodal error in the density.
pub fn density_error<M: PhysicsModel>(disc: &Discretization<M>, u: &[f64], exact: impl Fn([f64; 2]) -> f64) -> f64 {
    let m = disc.ncomp();
    (0..disc.n_nodes()).map(|g| (u[g * m] - exact(disc.node_xy(g))).abs()).fold(0.0, f64::max)
}

/// Free-stream state of the cylinder case at Mach `mach` with unit sound
/// speed and density.
pub fn cylinder_free_stream(gas: &GasModel, mach: f64) -> [f64; 4] {
    gas.conservative(1.0, mach, 0.0, 1.0 / gas.gamma)
}

/// Half-cylinder discretization: slip walls on the body and the symmetry
/// plane, characteristic far field on the outer arc.
pub fn cylinder_discretization(mesh: QuadMesh, p: usize, cfg: &RunConfig) -> Result<Discretization<CompressibleFlow>> {
    let model = CompressibleFlow::euler(1.4);
    let fs = cylinder_free_stream(&model.gas, cfg.mach);
    let bcs = BoundaryConditions::new()
        .with(annulus_tags::INNER, BoundaryKind::SlipWall)
        .with(annulus_tags::SYMMETRY, BoundaryKind::SlipWall)
        .with(annulus_tags::OUTER, BoundaryKind::Characteristic(BoundaryKind::constant(fs.to_vec())));
    let proj = annulus_projection(CYL_R.0, CYL_R.1);
    Discretization::build(mesh, p, model, cfg.ldg, bcs, Some(&proj))
}

fn run_cylinder(cfg: &RunConfig, mesh: QuadMesh, p: usize, level: usize) -> Result<LevelSummary> {
    let disc = cylinder_discretization(mesh, p, cfg)?;
    let fs = cylinder_free_stream(&disc.model.gas, cfg.mach);
    let u0 = disc.project(|_| fs.to_vec());
    let mut sys = DgSystem::new(&disc, cfg.jacobian, cfg.linear_solver);
    let (u, st) = pseudo_transient_steady(&mut sys, &u0, 0.0, &cfg.dt_schedule(), &cfg.newton)?;
    let e = entropy_error(&u, &disc.model.gas, &fs)?;
    let reference = ForceReference {
        rho_inf: 1.0,
        u_inf: cfg.mach,
        chord: 2.0 * CYL_R.0,
        alpha: 0.0,
        p_inf: disc.model.gas.pressure(&fs),
    };
    let forces = boundary_forces(&disc, &u, None, &[annulus_tags::INNER], reference, disc.basis.n_quad())?;
    dump(cfg, &disc, &u, p, level)?;
    Ok(LevelSummary {
        forces: Some(forces),
        steps: st.continuation_steps,
        newton_iterations: st.newton_iterations,
        ..summary(p, level, disc.n_dofs(), e)
    })
}

/// Writes `p,avg_cols_per_block_row,nnz` of the first-order `K11` stencil on
/// `mesh` for each degree. `nnz` counts node blocks.
pub fn sparsity_table(mesh: &QuadMesh, degrees: &[usize]) -> Result<String> {
    let mut s = String::from("p,avg_cols_per_block_row,nnz\n");
    for &p in degrees {
        let fs = BoundaryKind::constant(vec![1.0, 0.5, 0.0, 2.5]);
        let bcs = BoundaryConditions::uniform(mesh, BoundaryKind::Characteristic(fs));
        let disc =
            Discretization::build(mesh.clone(), p, CompressibleFlow::euler(1.4), Default::default(), bcs, None)?;
        let pat = crate::sparse::NodePattern::line_dg(&disc);
        s += &format!("{p},{},{}\n", pat.avg_cols_per_row(), pat.nnz());
    }
    Ok(s)
}

/// Loads `input`, refines every element into four and writes `output`.
pub fn refine_mesh_file(input: impl AsRef<Path>, output: impl AsRef<Path>) -> Result<QuadMesh> {
    let mesh = QuadMesh::load(input)?.refine_uniform()?;
    mesh.write(output)?;
    Ok(mesh)
}
