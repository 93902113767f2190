use std::path::PathBuf;
use std::time::Instant;

use rayon::prelude::*;

use super::ReportTable;
use crate::fem::{extend_into_holes, FemSpace, PointLocator, Weight};
use crate::homogenize::{reconstruct_corrector, CorrectorSet, EffectiveModel};
use crate::macroscale::{solve_macro, MacroConfig};
use crate::mesh::{build_cell_mesh, build_perforated_mesh, build_solid_mesh, PerforatedMesh, Tag, TriMesh};
use crate::micro::{delta_limit, dual_map, solve_micro, AprioriReport, MicroConfig, Trajectory, DELTA_SCHEDULE};
use crate::{Error, Result};

/// Schedules of the three limit passages and the base configuration.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub epsilons: Vec<f64>,
    pub deltas: Vec<f64>,
    pub mus: Vec<f64>,
    pub base: MicroConfig,
    pub macro_divisions: usize,
    pub out_dir: Option<PathBuf>,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            epsilons: vec![0.25, 0.125, 0.0625],
            deltas: DELTA_SCHEDULE.to_vec(),
            mus: vec![1e-1, 1e-2, 1e-3, 1e-4],
            base: MicroConfig::default(),
            macro_divisions: 64,
            out_dir: None,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, list) in [("epsilons", &self.epsilons), ("deltas", &self.deltas), ("mus", &self.mus)] {
            if list.is_empty() {
                return Err(Error::Domain(format!("sweep list `{name}` is empty")));
            }
            if list.windows(2).any(|w| !(w[1] < w[0])) {
                return Err(Error::Domain(format!("sweep list `{name}` is not strictly decreasing")));
            }
        }
        if self.macro_divisions == 0 {
            return Err(Error::Domain("macro divisions must be at least 1".into()));
        }
        Ok(())
    }

    /// Regularization used by the macro solve (the finest schedule value when
    /// the micro runs take the δ-limit).
    pub fn macro_delta(&self) -> f64 {
        if self.base.delta > 0.0 {
            self.base.delta
        } else {
            *DELTA_SCHEDULE.last().unwrap()
        }
    }
}

/// `ε ‖u^ε‖²_{L²((0,T)×Γ^ε)}` against `(|Γ|/|Y|) ‖u‖²_{L²(G_T)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoScale {
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

pub fn boundary_two_scale_check(
    micro: &Trajectory,
    micro_mesh: &PerforatedMesh,
    macro_traj: &Trajectory,
    macro_mesh: &TriMesh,
) -> Result<TwoScale> {
    if micro.times != macro_traj.times {
        return Err(Error::GridMismatch(format!(
            "micro has {} levels, macro {}",
            micro.times.len(),
            macro_traj.times.len()
        )));
    }
    let eps = micro_mesh.epsilon;
    let h = micro.h();
    let micro_space = FemSpace::new(&micro_mesh.mesh);
    let gamma = micro_space.boundary_mass(Tag::Gamma, Weight::Constant(1.0), eps)?;
    let macro_space = FemSpace::new(macro_mesh);
    let mass = macro_space.mass(Weight::Constant(1.0))?;
    let gamma_len = micro_mesh.mesh.boundary_length(Tag::Gamma) * eps;
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for j in 1..micro.states.len() {
        lhs += h * gamma.quad_form(&micro.states[j]);
        rhs += h * gamma_len * mass.quad_form(&macro_traj.states[j]);
    }
    let gap = if rhs > 0.0 {
        (lhs - rhs).abs() / rhs
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(TwoScale { lhs, rhs, gap })
}

/// Errors of one micro run against the macro solution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceErrors {
    /// `‖ū^ε − u‖_{L²(G_T)}` with the harmonic extension `ū^ε`.
    pub l2: f64,
    /// `‖u^ε − (u + ε Σ ∂_j u ω^j)‖_{L²(0,T;H¹(G^ε))}`.
    pub h1_corrected: f64,
}

pub fn convergence_errors(
    micro: &Trajectory,
    micro_mesh: &PerforatedMesh,
    macro_traj: &Trajectory,
    macro_mesh: &TriMesh,
    correctors: &CorrectorSet,
    cell: &crate::mesh::CellMesh,
) -> Result<ConvergenceErrors> {
    if micro.times != macro_traj.times {
        return Err(Error::GridMismatch(format!(
            "micro has {} levels, macro {}",
            micro.times.len(),
            macro_traj.times.len()
        )));
    }
    let h = micro.h();
    let filled = micro_mesh.filled_mesh()?;
    let filled_mass = FemSpace::new(&filled).mass(Weight::Constant(1.0))?;
    let locator = PointLocator::new(macro_mesh);
    let micro_space = FemSpace::new(&micro_mesh.mesh);
    let j_micro = dual_map(&micro_space)?;
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    for j in 1..micro.states.len() {
        let ext = extend_into_holes(micro_mesh, &micro.states[j])?;
        let u = locator.transfer(&macro_traj.states[j], &filled)?;
        let d: Vec<f64> = ext.values.iter().zip(&u).map(|(a, b)| a - b).collect();
        l2 += h * filled_mass.quad_form(&d);
        let w = reconstruct_corrector(macro_mesh, &macro_traj.states[j], correctors, cell, micro_mesh)?;
        let d: Vec<f64> = micro.states[j].iter().zip(&w).map(|(a, b)| a - b).collect();
        h1 += h * j_micro.quad_form(&d);
    }
    Ok(ConvergenceErrors {
        l2: l2.max(0.0).sqrt(),
        h1_corrected: h1.max(0.0).sqrt(),
    })
}

/// Column names of the convergence table.
pub fn convergence_columns() -> Vec<&'static str> {
    let mut c = vec!["l2_error", "h1_corrected_error", "two_scale_lhs", "two_scale_rhs", "two_scale_gap"];
    c.extend(AprioriReport::default_names());
    c.extend(["violation", "min_value"]);
    c
}

/// Tables of a convergence sweep; run times are kept apart so that the
/// result table is reproducible bit for bit.
#[derive(Debug, Clone)]
pub struct ConvergenceSweep {
    pub table: ReportTable,
    pub timings: ReportTable,
    pub effective: EffectiveModel,
    pub macro_report: AprioriReport,
}

/// Solves the macro problem once and every micro problem of the ε list.
pub fn run_convergence_sweep(spec: &SweepSpec) -> Result<ConvergenceSweep> {
    spec.validate()?;
    let base = &spec.base;
    let cell = build_cell_mesh(&base.geometry)?;
    let effective = EffectiveModel::assemble(&cell, &base.coefficient, None, [0.0; 2], &base.source, &base.params)?;
    let macro_mesh = build_solid_mesh(spec.macro_divisions)?;
    let mut macro_cfg = MacroConfig::from_micro(base, effective.clone(), spec.macro_divisions);
    macro_cfg.delta = spec.macro_delta();
    let start = Instant::now();
    let (macro_traj, macro_report) = solve_macro(&macro_cfg, &macro_mesh)?;
    let macro_time = start.elapsed().as_secs_f64();

    let rows = spec
        .epsilons
        .par_iter()
        .map(|&eps| -> Result<(Vec<f64>, [f64; 2])> {
            let start = Instant::now();
            let cfg = MicroConfig {
                epsilon: eps,
                ..base.clone()
            };
            let mesh = build_perforated_mesh(&cfg.geometry, eps)?;
            let (traj, report) = solve_micro(&cfg, &mesh)?;
            let solve_time = start.elapsed().as_secs_f64();
            let err = convergence_errors(&traj, &mesh, &macro_traj, &macro_mesh.mesh, &effective.correctors, &cell)?;
            let two = boundary_two_scale_check(&traj, &mesh, &macro_traj, &macro_mesh.mesh)?;
            let mut row = vec![err.l2, err.h1_corrected, two.lhs, two.rhs, two.gap];
            row.extend(report.entries().iter().map(|(_, v)| v));
            row.extend([traj.violation_measure(), traj.min_value()]);
            Ok((row, [solve_time, start.elapsed().as_secs_f64()]))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = ReportTable::new("epsilon", &convergence_columns());
    let mut timings = ReportTable::new("epsilon", &["micro_solve_s", "row_total_s"]);
    timings.push("macro", vec![macro_time, macro_time])?;
    for (&eps, (row, t)) in spec.epsilons.iter().zip(rows) {
        table.push(format!("{eps}"), row)?;
        timings.push(format!("{eps}"), t.to_vec())?;
    }
    Ok(ConvergenceSweep {
        table,
        timings,
        effective,
        macro_report,
    })
}

/// Violation measures along the μ list and the δ-limit report.
#[derive(Debug, Clone)]
pub struct PenaltyDeltaSweep {
    pub penalty: ReportTable,
    pub delta: ReportTable,
    pub cauchy: ReportTable,
}

pub fn run_penalty_and_delta_sweeps(spec: &SweepSpec) -> Result<PenaltyDeltaSweep> {
    spec.validate()?;
    let base = &spec.base;
    let mesh = build_perforated_mesh(&base.geometry, base.epsilon)?;
    let delta = spec.macro_delta();

    let runs = spec
        .mus
        .par_iter()
        .map(|&mu| {
            let cfg = MicroConfig {
                mu,
                delta,
                ..base.clone()
            };
            solve_micro(&cfg, &mesh).map(|(t, _)| t)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut penalty = ReportTable::new(
        "mu",
        &["violation", "violation_over_mu", "min_value", "min_constrained", "max_picard_iters"],
    );
    for (&mu, t) in spec.mus.iter().zip(&runs) {
        let v = t.violation_measure();
        let iters = t.diagnostics.iter().map(|d| d.picard_iters).max().unwrap_or(0);
        penalty.push(
            format!("{mu}"),
            vec![v, v / mu, t.min_value(), t.min_constrained(), iters as f64],
        )?;
    }

    let limit = delta_limit(base, &mesh, &spec.deltas)?;
    let mut cols = AprioriReport::default_names().to_vec();
    cols.push("min_value");
    let mut dtable = ReportTable::new("delta", &cols);
    for (&d, r) in limit.deltas.iter().zip(&limit.reports) {
        let mut row: Vec<f64> = r.entries().iter().map(|(_, v)| *v).collect();
        row.push(r.min_value);
        dtable.push(format!("{d}"), row)?;
    }
    let mut cauchy = ReportTable::new("delta_pair", &["l2_gt_difference"]);
    for (w, c) in limit.deltas.windows(2).zip(&limit.cauchy) {
        cauchy.push(format!("{}/{}", w[0], w[1]), vec![*c])?;
    }
    Ok(PenaltyDeltaSweep {
        penalty,
        delta: dtable,
        cauchy,
    })
}
