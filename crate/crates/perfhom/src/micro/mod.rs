//! Microscale solver: Rothe time stepping with Picard linearization and a
//! penalty operator for the constraint `u ≥ 0` on the hole boundaries.

mod apriori;
mod io;
mod penalty;
mod step;

pub use apriori::{apriori_monitor, AprioriReport};
pub use io::{read_trajectory, write_trajectory};
pub use penalty::{Constraint, Projection, ProjectionMode};
pub use step::{ExtraFlux, StepDiagnostics, StepProblem};

use crate::fem::{FemSpace, SparseMatrix, Weight};
use crate::mesh::{CellGeometry, PerforatedMesh, Tag};
use crate::model::{BoundarySource, CellCoefficient, ModelParams, VelocityField};
use crate::{Error, Result};

/// Regularization schedule of the δ → 0 limit mode.
pub const DELTA_SCHEDULE: [f64; 3] = [1e-1, 1e-2, 1e-3];

/// Initial state `u_0`.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialState {
    ConstantKappaD,
    Field(Vec<f64>),
}

/// Everything that defines one microscale run.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroConfig {
    pub epsilon: f64,
    pub t_final: f64,
    pub steps: usize,
    /// Penalty parameter; `f64::INFINITY` switches the penalty off.
    pub mu: f64,
    /// Regularization; zero runs the [`DELTA_SCHEDULE`].
    pub delta: f64,
    pub projection: ProjectionMode,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub params: ModelParams,
    pub source: BoundarySource,
    pub velocity: VelocityField,
    pub u0: InitialState,
    pub geometry: CellGeometry,
    pub coefficient: CellCoefficient,
}

impl Default for MicroConfig {
    fn default() -> Self {
        let params = ModelParams::default();
        MicroConfig {
            epsilon: 0.25,
            t_final: 0.5,
            steps: 50,
            mu: 1e-3,
            delta: 1e-2,
            projection: ProjectionMode::ExactJ,
            picard_tol: 1e-10,
            picard_max: 50,
            params,
            source: BoundarySource::new(1.0, &params),
            velocity: VelocityField::zero(),
            u0: InitialState::ConstantKappaD,
            geometry: CellGeometry::default(),
            coefficient: CellCoefficient::default(),
        }
    }
}

impl MicroConfig {
    pub fn h(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_final > 0.0) || self.steps == 0 {
            return Err(Error::Domain("T must be positive and N at least 1".into()));
        }
        if !(self.mu > 0.0) {
            return Err(Error::Domain(format!("mu = {} must be positive", self.mu)));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Domain(format!("delta = {} must be nonnegative", self.delta)));
        }
        if !(self.picard_tol > 0.0) || self.picard_max == 0 {
            return Err(Error::Domain("picard_tol must be positive and picard_max at least 1".into()));
        }
        if !(self.coefficient.min() > 0.0) {
            return Err(Error::Coercivity(0));
        }
        self.params.validate()?;
        self.source.check(&self.params)?;
        self.geometry.check()
    }
}

/// Time-indexed states of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Diagnostics of steps `1..=N`.
    pub diagnostics: Vec<StepDiagnostics>,
    pub mesh_id: u64,
}

impl Trajectory {
    pub fn steps(&self) -> usize {
        self.states.len() - 1
    }

    pub fn h(&self) -> f64 {
        if self.times.len() < 2 {
            0.0
        } else {
            self.times[1] - self.times[0]
        }
    }

    /// `h Σ_j ⟨B(u^j − κ_D), u^j − κ_D⟩`.
    pub fn violation_measure(&self) -> f64 {
        self.h() * self.diagnostics.iter().map(|d| d.violation).sum::<f64>()
    }

    pub fn min_value(&self) -> f64 {
        self.states.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn min_constrained(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.min_constrained).fold(f64::INFINITY, f64::min)
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory holds u0")
    }
}

/// `‖a − b‖_{L²(G_T)}` with the rectangle rule on steps `1..=N`.
pub fn l2_gt_difference(space: &FemSpace, a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.times != b.times {
        return Err(Error::GridMismatch(format!(
            "{} vs {} time levels",
            a.times.len(),
            b.times.len()
        )));
    }
    let mass = space.mass(Weight::Constant(1.0))?;
    let mut s = 0.0;
    for j in 1..a.states.len() {
        let d: Vec<f64> = a.states[j].iter().zip(&b.states[j]).map(|(x, y)| x - y).collect();
        s += a.h() * mass.quad_form(&d);
    }
    Ok(s.max(0.0).sqrt())
}

/// Coefficient `A(x/ε)` at the triangle centroids.
pub fn micro_coefficient(mesh: &PerforatedMesh, coeff: &CellCoefficient) -> Vec<f64> {
    let m = mesh.cells_per_side as f64;
    (0..mesh.mesh.n_triangles())
        .map(|t| {
            let c = mesh.mesh.centroid(t);
            let [cx, cy] = mesh.cell_index[t];
            coeff.eval([c[0] * m - cx as f64, c[1] * m - cy as f64])
        })
        .collect()
}

/// `J = M + S` on a mesh.
pub fn dual_map(space: &FemSpace) -> Result<SparseMatrix> {
    let mut j = space.mass(Weight::Constant(1.0))?;
    j.add_scaled(1.0, &space.stiffness(Weight::Constant(1.0))?);
    Ok(j)
}

/// Assembles the step operator of the microscale problem for regularization `delta`.
pub fn build_micro_problem<'m>(config: &MicroConfig, mesh: &'m PerforatedMesh, delta: f64) -> Result<StepProblem<'m>> {
    config.validate()?;
    if (mesh.epsilon - config.epsilon).abs() > 1e-12 || mesh.geometry != config.geometry {
        return Err(Error::Mesh("mesh does not match epsilon/geometry of the configuration".into()));
    }
    let space = FemSpace::new(&mesh.mesh);
    config.velocity.check(&space)?;
    let j = dual_map(&space)?;
    let free: Vec<bool> = mesh.dirichlet_mask().iter().map(|d| !d).collect();
    let gamma = mesh.gamma_mask();
    let constrained: Vec<usize> = (0..space.dim()).filter(|&i| gamma[i] && free[i]).collect();
    let source_matrix = space.boundary_mass(Tag::Gamma, Weight::Constant(1.0), config.epsilon)?;
    let constraint = Constraint::new(j, free, constrained, config.params.kappa_d)?;
    let eye = [[1.0, 0.0], [0.0, 1.0]];
    Ok(StepProblem {
        a_tri: micro_coefficient(mesh, &config.coefficient),
        space,
        params: config.params,
        delta,
        h: config.h(),
        mu: config.mu,
        mode: config.projection,
        tensor_pc: eye,
        tensor_dt: eye,
        velocity: config.velocity.clone(),
        source: config.source,
        source_matrix,
        constraint,
        picard_tol: config.picard_tol,
        picard_max: config.picard_max,
    })
}

/// Checks `u_0` and returns it with exact Dirichlet values.
pub fn initial_state(u0: &InitialState, kappa: f64, free: &[bool], constrained: &[usize]) -> Result<Vec<f64>> {
    match u0 {
        InitialState::ConstantKappaD => Ok(vec![kappa; free.len()]),
        InitialState::Field(v) => {
            if v.len() != free.len() {
                return Err(Error::Dimension {
                    expected: free.len(),
                    got: v.len(),
                });
            }
            let mut u = v.clone();
            for (i, x) in u.iter_mut().enumerate() {
                if !free[i] {
                    if (*x - kappa).abs() > 1e-12 {
                        return Err(Error::Domain(format!("u0 = {x} at Dirichlet node {i}, expected {kappa}")));
                    }
                    *x = kappa;
                }
            }
            if let Some(&i) = constrained.iter().find(|&&i| u[i] < 0.0) {
                return Err(Error::Domain(format!("u0 = {} < 0 at constrained node {i}", u[i])));
            }
            Ok(u)
        }
    }
}

/// Runs `N` Rothe steps from `u0`.
pub fn run_steps(problem: &StepProblem, u0: Vec<f64>, t_final: f64, steps: usize) -> Result<Trajectory> {
    let h = t_final / steps as f64;
    let mut times = vec![0.0];
    let mut states = vec![u0];
    let mut diagnostics = Vec::with_capacity(steps);
    for j in 1..=steps {
        let t = j as f64 * h;
        let (u, d) = problem.step(states.last().unwrap(), t, None)?;
        times.push(t);
        states.push(u);
        diagnostics.push(d);
    }
    Ok(Trajectory {
        times,
        states,
        diagnostics,
        mesh_id: problem.space.mesh.fingerprint(),
    })
}

/// One microscale time step.
pub fn micro_step(problem: &StepProblem, prev: &[f64], t: f64) -> Result<(Vec<f64>, StepDiagnostics)> {
    problem.step(prev, t, None)
}

/// Solves the microscale problem; with `delta = 0` the finest run of the
/// δ-schedule is returned (see [`delta_limit`] for the Cauchy report).
pub fn solve_micro(config: &MicroConfig, mesh: &PerforatedMesh) -> Result<(Trajectory, AprioriReport)> {
    if config.delta == 0.0 {
        let mut limit = delta_limit(config, mesh, &DELTA_SCHEDULE)?;
        let traj = limit.trajectories.pop().expect("non-empty schedule");
        let report = limit.reports.pop().expect("non-empty schedule");
        return Ok((traj, report));
    }
    let problem = build_micro_problem(config, mesh, config.delta)?;
    let u0 = initial_state(
        &config.u0,
        config.params.kappa_d,
        &problem.constraint.free,
        &problem.constraint.constrained,
    )?;
    let traj = run_steps(&problem, u0, config.t_final, config.steps)?;
    let report = apriori_monitor(&traj, &config.params, config.delta, &problem.space)?;
    Ok((traj, report))
}

/// Runs of a δ-schedule with the `L²(G_T)` differences of consecutive runs.
#[derive(Debug, Clone)]
pub struct DeltaLimit {
    pub deltas: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
    pub reports: Vec<AprioriReport>,
    pub cauchy: Vec<f64>,
}

pub fn delta_limit(config: &MicroConfig, mesh: &PerforatedMesh, deltas: &[f64]) -> Result<DeltaLimit> {
    if deltas.is_empty() || deltas.iter().any(|&d| !(d > 0.0)) {
        return Err(Error::Domain("delta schedule must be nonempty and positive".into()));
    }
    let mut out = DeltaLimit {
        deltas: deltas.to_vec(),
        trajectories: Vec::new(),
        reports: Vec::new(),
        cauchy: Vec::new(),
    };
    for &d in deltas {
        let cfg = MicroConfig {
            delta: d,
            ..config.clone()
        };
        let (t, r) = solve_micro(&cfg, mesh)?;
        out.trajectories.push(t);
        out.reports.push(r);
    }
    let space = FemSpace::new(&mesh.mesh);
    for w in out.trajectories.windows(2) {
        out.cauchy.push(l2_gt_difference(&space, &w[0], &w[1])?);
    }
    Ok(out)
}
