use std::collections::BTreeSet;

use super::penalty::{Constraint, ProjectionMode};
use crate::fem::{FemSpace, SparseMatrix, Weight};
use crate::model::{eval_f, BoundarySource, ModelParams, VelocityField};
use crate::{Error, Result};

/// Per-step solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepDiagnostics {
    pub picard_iters: usize,
    /// Last Picard increment in the `J` norm.
    pub increment: f64,
    /// `⟨B(u − κ_D), u − κ_D⟩`.
    pub violation: f64,
    /// Smallest value over the constrained nodes.
    pub min_constrained: f64,
}

/// Extra flux `G` entering the weak form as `⟨G, ∇ζ⟩`, evaluated at the
/// current Picard iterate.
pub type ExtraFlux<'a> = &'a dyn Fn(&[f64]) -> Result<Vec<[f64; 2]>>;

/// One Rothe time step of
/// `b_δ(u)_t − ∇·(a k_δ(u)[T_pc P_δ(u)∇u + T_dt ∂_t∇u]) + ∇·F(u) + (1/μ)B(u − κ_D) + s(u) = 0`.
///
/// The micro problem uses the scalar coefficient `a = A(x/ε)`, unit tensors
/// and the boundary source `ε f` on Γ; the macro problem uses `a ≡ 1`, the
/// effective tensors and the homogenized volume source.
pub struct StepProblem<'m> {
    pub space: FemSpace<'m>,
    pub params: ModelParams,
    pub delta: f64,
    pub h: f64,
    pub mu: f64,
    pub mode: ProjectionMode,
    pub a_tri: Vec<f64>,
    pub tensor_pc: [[f64; 2]; 2],
    pub tensor_dt: [[f64; 2]; 2],
    pub velocity: VelocityField,
    pub source: BoundarySource,
    /// Maps nodal values of `f_0 f_1(u)` to the source load.
    pub source_matrix: SparseMatrix,
    pub constraint: Constraint,
    pub picard_tol: f64,
    pub picard_max: usize,
}

impl StepProblem<'_> {
    pub fn kappa(&self) -> f64 {
        self.params.kappa_d
    }

    /// Advances `prev` (values of u) to time `t`.
    pub fn step(&self, prev: &[f64], t: f64, extra: Option<ExtraFlux>) -> Result<(Vec<f64>, StepDiagnostics)> {
        let n = self.space.dim();
        if prev.len() != n {
            return Err(Error::Dimension { expected: n, got: prev.len() });
        }
        let kappa = self.kappa();
        let free = &self.constraint.free;
        let w_prev: Vec<f64> = prev.iter().zip(free).map(|(&u, &f)| if f { u - kappa } else { 0.0 }).collect();

        // Data lagged to the previous step.
        let flux = eval_f(&self.velocity, &self.params, self.delta, &self.space, prev)?;
        let mut base = self.space.flux_load(&flux)?;
        let fvals: Vec<f64> = prev.iter().map(|&u| self.source.eval(t, u)).collect();
        let sink = self.source_matrix.mul(&fvals);
        for (b, s) in base.iter_mut().zip(&sink) {
            *b -= s;
        }

        let mut w = w_prev.clone();
        let mut active = BTreeSet::new();
        let mut increment = f64::INFINITY;
        let mut iters = 0;
        while iters < self.picard_max {
            iters += 1;
            let u: Vec<f64> = w.iter().map(|x| x + kappa).collect();
            let (a, mut rhs) = self.linearize(&u, &w_prev)?;
            for (r, b) in rhs.iter_mut().zip(&base) {
                *r += b;
            }
            if let Some(g) = extra {
                let load = self.space.flux_load(&g(&u)?)?;
                for (r, l) in rhs.iter_mut().zip(&load) {
                    *r -= l;
                }
            }
            let mut next = w.clone();
            self.constraint
                .solve_penalized(&a, &rhs, self.mu, self.mode, &mut next, &mut active)?;
            let d: Vec<f64> = next.iter().zip(&w).map(|(a, b)| a - b).collect();
            increment = self.constraint.j.quad_form(&d).max(0.0).sqrt();
            w = next;
            if increment <= self.picard_tol {
                break;
            }
        }
        if increment > self.picard_tol {
            return Err(Error::PicardDivergence { iters, increment });
        }

        let violation = if self.constraint.constrained.is_empty() {
            0.0
        } else {
            self.constraint.violation(&w, self.mode)?
        };
        let u: Vec<f64> = w.iter().map(|x| x + kappa).collect();
        let min_constrained = self
            .constraint
            .constrained
            .iter()
            .map(|&i| u[i])
            .fold(f64::INFINITY, f64::min);
        Ok((
            u,
            StepDiagnostics {
                picard_iters: iters,
                increment,
                violation,
                min_constrained,
            },
        ))
    }

    /// Matrix and history part of the right-hand side with coefficients
    /// frozen at `u`.
    fn linearize(&self, u: &[f64], w_prev: &[f64]) -> Result<(SparseMatrix, Vec<f64>)> {
        let (p, d, h) = (&self.params, self.delta, self.h);
        let db: Vec<[f64; 3]> = self
            .space
            .at_quadrature(u)
            .iter()
            .map(|q| q.map(|x| p.db_delta(d, x) / h))
            .collect();
        let centroid = self.space.at_centroids(u);
        let c_pc: Vec<f64> = centroid.iter().zip(&self.a_tri).map(|(&x, a)| a * p.k_pc_delta(d, x)).collect();
        let c_dt: Vec<f64> = centroid.iter().zip(&self.a_tri).map(|(&x, a)| a * p.k_delta(d, x) / h).collect();

        let mass = self.space.mass(Weight::Quadrature(&db))?;
        let s_dt = self.space.stiffness_tensor(Weight::PerTriangle(&c_dt), self.tensor_dt)?;
        let mut a = self.space.stiffness_tensor(Weight::PerTriangle(&c_pc), self.tensor_pc)?;
        let mut rhs = mass.mul(w_prev);
        for (r, s) in rhs.iter_mut().zip(s_dt.mul(w_prev)) {
            *r += s;
        }
        a.add_scaled(1.0, &mass);
        a.add_scaled(1.0, &s_dt);
        Ok((a, rhs))
    }
}
