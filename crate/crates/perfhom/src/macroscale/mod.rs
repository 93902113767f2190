//! Homogenized obstacle problem on the solid square, with the optional
//! memory term of the two-coefficient model.

mod convolution;

pub use convolution::{convolution_flux, convolution_term, MacroKernel};

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::fem::{FemSpace, SparseMatrix, Weight};
use crate::homogenize::{shifted_kernels, EffectiveModel};
use crate::mesh::PerforatedMesh;
use crate::micro::{
    apriori_monitor, dual_map, initial_state, l2_gt_difference, AprioriReport, Constraint, InitialState, MicroConfig,
    ProjectionMode, StepProblem, Trajectory,
};
use crate::model::{ModelParams, VelocityField, VelocityMode};
use crate::{Error, Result};

/// Everything that defines one macroscale run.
#[derive(Debug, Clone)]
pub struct MacroConfig {
    pub divisions: usize,
    pub t_final: f64,
    pub steps: usize,
    pub mu: f64,
    pub delta: f64,
    pub projection: ProjectionMode,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub params: ModelParams,
    /// `H(z) = h_slope z` of the convective flux.
    pub h_slope: f64,
    pub u0: InitialState,
    pub effective: EffectiveModel,
    pub memory_mode: bool,
    pub outer_iters: usize,
}

impl MacroConfig {
    /// Macro configuration sharing time grid, penalty and data with a micro run.
    pub fn from_micro(micro: &MicroConfig, effective: EffectiveModel, divisions: usize) -> Self {
        MacroConfig {
            divisions,
            t_final: micro.t_final,
            steps: micro.steps,
            mu: micro.mu,
            delta: micro.delta,
            projection: micro.projection,
            picard_tol: micro.picard_tol,
            picard_max: micro.picard_max,
            params: micro.params,
            h_slope: micro.velocity.h_slope,
            u0: InitialState::ConstantKappaD,
            effective,
            memory_mode: false,
            outer_iters: 2,
        }
    }

    pub fn h(&self) -> f64 {
        self.t_final / self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if self.divisions == 0 {
            return Err(Error::Domain("macro divisions must be at least 1".into()));
        }
        if !(self.t_final > 0.0) || self.steps == 0 {
            return Err(Error::Domain("T must be positive and N at least 1".into()));
        }
        if !(self.mu > 0.0) || !(self.delta > 0.0) {
            return Err(Error::Domain("macro runs need mu > 0 and delta > 0".into()));
        }
        if !(self.picard_tol > 0.0) || self.picard_max == 0 {
            return Err(Error::Domain("picard_tol must be positive and picard_max at least 1".into()));
        }
        if self.memory_mode && self.outer_iters == 0 {
            return Err(Error::Domain("memory mode needs outer_iters >= 1".into()));
        }
        for t in [&self.effective.a_hom, &self.effective.b_hom] {
            if !t.is_spd() {
                return Err(Error::Domain(format!("effective tensor {} is not positive definite", t.label)));
            }
        }
        self.params.validate()?;
        self.effective.sources.source.check(&self.params)?;
        Ok(())
    }
}

/// Diagonal (nodal quadrature) mass matrix.
fn lumped_mass(space: &FemSpace) -> Result<SparseMatrix> {
    let m = space.mass(Weight::Constant(1.0))?;
    let trip: Vec<(usize, usize, f64)> = (0..m.dim()).map(|i| (i, i, m.row(i).map(|(_, v)| v).sum())).collect();
    Ok(SparseMatrix::from_triplets(m.dim(), &trip))
}

/// Step operator of the homogenized problem: unit coefficient, the
/// effective tensors, volume sink `c_Γ f` and the obstacle at every free node.
pub fn build_macro_problem<'m>(config: &MacroConfig, mesh: &'m PerforatedMesh) -> Result<StepProblem<'m>> {
    config.validate()?;
    if !mesh.mesh.gamma_edges.is_empty() {
        return Err(Error::Mesh("the macro problem needs a solid mesh".into()));
    }
    let space = FemSpace::new(&mesh.mesh);
    let free: Vec<bool> = mesh.dirichlet_mask().iter().map(|d| !d).collect();
    let constrained: Vec<usize> = (0..space.dim()).filter(|&i| free[i]).collect();
    let constraint = Constraint::new(dual_map(&space)?, free, constrained, config.params.kappa_d)?;
    let sources = &config.effective.sources;
    let velocity = if sources.q_mean == [0.0, 0.0] {
        VelocityField::zero()
    } else {
        VelocityField {
            mode: VelocityMode::Tabulated(vec![sources.q_mean; mesh.mesh.n_triangles()]),
            h_slope: config.h_slope,
        }
    };
    let source_matrix = lumped_mass(&space)?.scaled(sources.c_gamma);
    let params = ModelParams {
        g: sources.g,
        ..config.params
    };
    Ok(StepProblem {
        a_tri: vec![1.0; mesh.mesh.n_triangles()],
        space,
        params,
        delta: config.delta,
        h: config.h(),
        mu: config.mu,
        mode: config.projection,
        tensor_pc: config.effective.b_hom.entries,
        tensor_dt: config.effective.a_hom.entries,
        velocity,
        source: sources.source,
        source_matrix,
        constraint,
        picard_tol: config.picard_tol,
        picard_max: config.picard_max,
    })
}

fn check_mesh(config: &MacroConfig, mesh: &PerforatedMesh) -> Result<()> {
    if mesh.geometry.divisions != config.divisions {
        return Err(Error::Mesh(format!(
            "macro mesh has {} divisions, configuration asks for {}",
            mesh.geometry.divisions, config.divisions
        )));
    }
    Ok(())
}

/// Rothe steps with an optional memory kernel; the convolution term is
/// evaluated implicitly inside the Picard loop.
pub fn run_macro(config: &MacroConfig, mesh: &PerforatedMesh, kernel: Option<&MacroKernel>) -> Result<Trajectory> {
    check_mesh(config, mesh)?;
    let problem = build_macro_problem(config, mesh)?;
    let u0 = initial_state(
        &config.u0,
        config.params.kappa_d,
        &problem.constraint.free,
        &problem.constraint.constrained,
    )?;
    let h = config.h();
    let mut times = vec![0.0];
    let mut states = vec![u0];
    let mut diagnostics = Vec::with_capacity(config.steps);
    for j in 1..=config.steps {
        let t = j as f64 * h;
        let (u, d) = match kernel {
            None => problem.step(states.last().unwrap(), t, None)?,
            Some(k) => {
                let hist = &states;
                let g = |u: &[f64]| -> Result<Vec<[f64; 2]>> {
                    let mut levels: Vec<&[f64]> = hist.iter().map(|s| s.as_slice()).collect();
                    levels.push(u);
                    convolution_flux(&problem.space, k, &levels)
                };
                problem.step(states.last().unwrap(), t, Some(&g))?
            }
        };
        times.push(t);
        states.push(u);
        diagnostics.push(d);
    }
    Ok(Trajectory {
        times,
        states,
        diagnostics,
        mesh_id: mesh.mesh.fingerprint(),
    })
}

/// Solves the homogenized problem without memory term.
pub fn solve_macro(config: &MacroConfig, mesh: &PerforatedMesh) -> Result<(Trajectory, AprioriReport)> {
    let traj = run_macro(config, mesh, None)?;
    let report = apriori_monitor(&traj, &config.params, config.delta, &FemSpace::new(&mesh.mesh))?;
    Ok((traj, report))
}

/// Result of the outer kernel/solution coupling.
#[derive(Debug, Clone)]
pub struct MemoryRun {
    pub trajectory: Trajectory,
    pub report: AprioriReport,
    /// `L²(G_T)` difference between consecutive outer sweeps.
    pub sweep_differences: Vec<f64>,
    pub kernel: MacroKernel,
}

/// Kernel tables for every node of a trajectory (negative values clamped to 0).
/// Nodes with bitwise equal histories share one table.
pub fn kernels_from_history(config: &MacroConfig, states: &[Vec<f64>]) -> Result<MacroKernel> {
    let n_nodes = states[0].len();
    let Some(mc) = config.effective.memory.as_ref() else {
        // Equal coefficients: χ ≡ 0 and the kernel vanishes.
        return Ok(MacroKernel::constant(n_nodes, config.steps, config.h(), [[0.0; 2]; 2]));
    };
    let histories: Vec<Vec<f64>> = (0..n_nodes)
        .map(|i| states.iter().map(|s| s[i].max(0.0)).collect())
        .collect();
    let mut unique: HashMap<Vec<u64>, usize> = HashMap::new();
    let mut reps = Vec::new();
    let slot: Vec<usize> = histories
        .iter()
        .map(|hist| {
            let key: Vec<u64> = hist.iter().map(|x| x.to_bits()).collect();
            *unique.entry(key).or_insert_with(|| {
                reps.push(hist.clone());
                reps.len() - 1
            })
        })
        .collect();
    let tables = reps
        .par_iter()
        .map(|hist| shifted_kernels(mc, hist, &config.params, config.delta, config.h()).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    Ok(MacroKernel {
        steps: config.steps,
        h: config.h(),
        nodes: slot.iter().map(|&s| Arc::clone(&tables[s])).collect(),
    })
}

/// Outer coupling: solve with the kernel of the previous sweep (initially
/// of the constant `u_0` history), then recompute the kernel.
pub fn solve_macro_memory(config: &MacroConfig, mesh: &PerforatedMesh) -> Result<MemoryRun> {
    check_mesh(config, mesh)?;
    let space = FemSpace::new(&mesh.mesh);
    let problem = build_macro_problem(config, mesh)?;
    let u0 = initial_state(
        &config.u0,
        config.params.kappa_d,
        &problem.constraint.free,
        &problem.constraint.constrained,
    )?;
    let mut history = vec![u0; config.steps + 1];
    let mut previous: Option<Trajectory> = None;
    let mut sweep_differences = Vec::new();
    let mut kernel = None;
    for _ in 0..config.outer_iters.max(1) {
        let k = kernels_from_history(config, &history)?;
        let traj = run_macro(config, mesh, Some(&k))?;
        if let Some(p) = &previous {
            sweep_differences.push(l2_gt_difference(&space, p, &traj)?);
        }
        history = traj.states.clone();
        previous = Some(traj);
        kernel = Some(k);
    }
    let trajectory = previous.expect("at least one sweep");
    let report = apriori_monitor(&trajectory, &config.params, config.delta, &space)?;
    Ok(MemoryRun {
        trajectory,
        report,
        sweep_differences,
        kernel: kernel.expect("at least one sweep"),
    })
}
