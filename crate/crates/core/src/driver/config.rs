//! Run configuration in a flat `key = value` text format.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::discretization::LdgParams;
use crate::error::{Error, Result};
use crate::sparse::JacobianMode;
use crate::time::{geometric_schedule, LinearSolver, NewtonConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    /// Manufactured Poisson problem on `[0, 1]^2`.
    Poisson,
    /// Isentropic vortex on the 20 x 15 domain.
    EulerVortex,
    /// Steady inviscid flow around a half cylinder.
    EulerCylinder,
    /// Manufactured Poisson problem on the mesh in `mesh_path`.
    Custom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrator {
    Rk4,
    Dirk3,
    SteadyNewton,
    SplitDirect,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub case: Case,
    /// Polynomial degrees of the sweep.
    pub degrees: Vec<usize>,
    /// Uniform refinements of the base mesh; the sweep runs `refinements + 1`
    /// meshes.
    pub refinements: usize,
    /// Base mesh size in elements. For the cylinder these are the counts in
    /// the angular and radial directions.
    pub mesh_n: [usize; 2],
    /// Random interior vertex displacement, as a fraction of the local size.
    pub perturb: f64,
    /// Periodic instead of characteristic boundaries for the vortex.
    pub periodic: bool,
    pub ldg: LdgParams,
    pub integrator: Integrator,
    /// Time step on the base mesh. It is halved with each refinement.
    pub dt: Option<f64>,
    /// Explicit step bound `cfl * h / ((|v| + c) (2p + 1))` used when `dt` is
    /// not set.
    pub cfl: f64,
    /// Continuation schedule `dt0 * 2^k`, `k < dt_steps`.
    pub dt0: f64,
    pub dt_steps: usize,
    pub end_time: Option<f64>,
    pub newton: NewtonConfig,
    pub linear_solver: LinearSolver,
    pub jacobian: JacobianMode,
    pub mach: f64,
    pub mesh_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub dump_fields: bool,
}

impl RunConfig {
    /// Defaults for `case`.
    pub fn new(case: Case) -> Self {
        let (integrator, mesh_n, linear_solver) = match case {
            Case::Poisson | Case::Custom => (Integrator::SteadyNewton, [2, 2], LinearSolver::Direct),
            Case::EulerVortex => (Integrator::Rk4, [8, 6], LinearSolver::Gmres { precondition: true }),
            Case::EulerCylinder => (Integrator::SteadyNewton, [8, 4], LinearSolver::Direct),
        };
        Self {
            case,
            degrees: vec![2],
            refinements: 2,
            mesh_n,
            perturb: 0.0,
            periodic: false,
            ldg: LdgParams::default(),
            integrator,
            dt: None,
            cfl: 0.5,
            dt0: 0.1,
            dt_steps: 10,
            end_time: None,
            // steady solves use plain Newton with a fresh Jacobian per iteration
            newton: NewtonConfig { reuse_jacobian: case == Case::EulerVortex, ..NewtonConfig::default() },
            linear_solver,
            jacobian: JacobianMode::Analytic,
            mach: 0.3,
            mesh_path: None,
            output_dir: PathBuf::from("output"),
            dump_fields: true,
        }
    }

    pub fn dt_schedule(&self) -> Vec<f64> {
        geometric_schedule(self.dt0, self.dt_steps)
    }

    pub fn is_second_order(&self) -> bool {
        matches!(self.case, Case::Poisson | Case::Custom)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        text.parse()
    }

    /// Rejects inconsistent combinations.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.degrees.is_empty() || self.degrees.contains(&0) {
            return bad("p must list one or more degrees >= 1".into());
        }
        if self.mesh_n.contains(&0) {
            return bad("mesh sizes must be positive".into());
        }
        if !(0.0..0.5).contains(&self.perturb) {
            return bad(format!("perturb must lie in [0, 0.5), got {}", self.perturb));
        }
        self.ldg.validate().map_err(|e| Error::Config(e.to_string()))?;
        self.newton.validate().map_err(|e| Error::Config(e.to_string()))?;
        let allowed: &[Integrator] = match self.case {
            Case::Poisson | Case::Custom => &[Integrator::SteadyNewton, Integrator::SplitDirect],
            Case::EulerVortex => &[Integrator::Rk4, Integrator::Dirk3],
            Case::EulerCylinder => &[Integrator::SteadyNewton],
        };
        if !allowed.contains(&self.integrator) {
            return bad(format!("integrator {:?} does not apply to case {:?}", self.integrator, self.case));
        }
        if self.case == Case::Custom && self.mesh_path.is_none() {
            return bad("case custom needs mesh_path".into());
        }
        if self.ldg.c22 != 0.0 && self.integrator != Integrator::SplitDirect {
            return bad("c22 > 0 needs integrator split_direct".into());
        }
        if self.dt.is_some_and(|d| !(d > 0.0)) || !(self.cfl > 0.0) || !(self.dt0 > 0.0) {
            return bad("time steps must be positive".into());
        }
        if self.end_time.is_some_and(|t| !(t >= 0.0)) {
            return bad("end_time must be non-negative".into());
        }
        if !(self.mach > 0.0) {
            return bad("mach must be positive".into());
        }
        Ok(())
    }
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("{key}: cannot parse '{v}'")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got '{v}'"))),
    }
}

impl FromStr for RunConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", ln + 1)))?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if entries.insert(k.clone(), v).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key {k}", ln + 1)));
            }
        }
        let case = match entries.remove("case").as_deref() {
            Some("poisson") => Case::Poisson,
            Some("euler_vortex") => Case::EulerVortex,
            Some("euler_cylinder") => Case::EulerCylinder,
            Some("custom") => Case::Custom,
            Some(other) => return Err(Error::Config(format!("unknown case '{other}'"))),
            None => return Err(Error::Config("missing key: case".into())),
        };
        let mut cfg = RunConfig::new(case);
        for (k, v) in &entries {
            let v = v.as_str();
            match k.as_str() {
                "p" => cfg.degrees = v.split(',').map(|s| parse_value(k, s.trim())).collect::<Result<_>>()?,
                "refinements" => cfg.refinements = parse_value(k, v)?,
                "mesh_nx" => cfg.mesh_n[0] = parse_value(k, v)?,
                "mesh_ny" => cfg.mesh_n[1] = parse_value(k, v)?,
                "perturb" => cfg.perturb = parse_value(k, v)?,
                "periodic" => cfg.periodic = parse_bool(k, v)?,
                "c11" => cfg.ldg.c11 = parse_value(k, v)?,
                "c22" => cfg.ldg.c22 = parse_value(k, v)?,
                "c11_boundary" => cfg.ldg.c11_boundary = Some(parse_value(k, v)?),
                "integrator" => {
                    cfg.integrator = match v {
                        "rk4" => Integrator::Rk4,
                        "dirk3" => Integrator::Dirk3,
                        "steady_newton" => Integrator::SteadyNewton,
                        "split_direct" => Integrator::SplitDirect,
                        _ => return Err(Error::Config(format!("unknown integrator '{v}'"))),
                    }
                }
                "dt" => cfg.dt = Some(parse_value(k, v)?),
                "cfl" => cfg.cfl = parse_value(k, v)?,
                "dt0" => cfg.dt0 = parse_value(k, v)?,
                "dt_steps" => cfg.dt_steps = parse_value(k, v)?,
                "end_time" => cfg.end_time = Some(parse_value(k, v)?),
                "newton_tol" => cfg.newton.tol = parse_value(k, v)?,
                "newton_tol_floor" => cfg.newton.tol_floor = parse_value(k, v)?,
                "newton_tol_factor" => cfg.newton.tol_factor = parse_value(k, v)?,
                "max_newton" => cfg.newton.max_newton = parse_value(k, v)?,
                "gmres_iters" => cfg.newton.gmres_iters_per_step = parse_value(k, v)?,
                "recompute_threshold" => cfg.newton.recompute_threshold = parse_value(k, v)?,
                "reuse_jacobian" => cfg.newton.reuse_jacobian = parse_bool(k, v)?,
                "linear_solver" => {
                    cfg.linear_solver = match v {
                        "direct" => LinearSolver::Direct,
                        "gmres" => LinearSolver::Gmres { precondition: false },
                        "gmres_block_jacobi" => LinearSolver::Gmres { precondition: true },
                        _ => return Err(Error::Config(format!("unknown linear_solver '{v}'"))),
                    }
                }
                "jacobian" => {
                    cfg.jacobian = match v {
                        "analytic" => JacobianMode::Analytic,
                        "fd" => JacobianMode::FiniteDifference,
                        _ => return Err(Error::Config(format!("unknown jacobian mode '{v}'"))),
                    }
                }
                "mach" => cfg.mach = parse_value(k, v)?,
                "mesh_path" => cfg.mesh_path = Some(PathBuf::from(v)),
                "output_dir" => cfg.output_dir = PathBuf::from(v),
                "dump_fields" => cfg.dump_fields = parse_bool(k, v)?,
                _ => return Err(Error::Config(format!("unknown key '{k}'"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_keys_and_comments() {
        let cfg: RunConfig = "# sweep\ncase = poisson\np = 1, 2,3\nrefinements = 3  # four meshes\nc11 = 0.05\n\
                              c22 = 0.05\nintegrator = split_direct\noutput_dir = /tmp/x\n"
            .parse()
            .unwrap();
        assert_eq!(cfg.case, Case::Poisson);
        assert_eq!(cfg.degrees, vec![1, 2, 3]);
        assert_eq!(cfg.refinements, 3);
        assert_eq!(cfg.ldg.c22, 0.05);
        assert_eq!(cfg.integrator, Integrator::SplitDirect);
        assert_eq!(cfg.output_dir, PathBuf::from("/tmp/x"));
    }

    #[test]
    fn rejects_bad_input() {
        for text in [
            "p = 2\n",
            "case = poisson\ncase = poisson\n",
            "case = poisson\nfoo = 1\n",
            "case = poisson\np = two\n",
            "case = poisson\njust words\n",
            "case = euler_vortex\nintegrator = split_direct\n",
            "case = euler_cylinder\nintegrator = rk4\n",
            "case = custom\n",
            "case = poisson\nc22 = 0.1\n",
            "case = poisson\np = 0\n",
            "case = euler_vortex\ndt = -1\n",
        ] {
            assert!(matches!(text.parse::<RunConfig>(), Err(Error::Config(_))), "{text}");
        }
    }

    #[test]
    fn schedule_is_geometric() {
        let cfg: RunConfig = "case = euler_cylinder\ndt0 = 0.5\ndt_steps = 3\n".parse().unwrap();
        assert_eq!(cfg.dt_schedule(), vec![0.5, 1.0, 2.0]);
    }
}
