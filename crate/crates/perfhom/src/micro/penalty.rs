use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

use crate::fem::{dense_cholesky_solve, dense_lu_solve, pcg_masked, SparseMatrix, PCG_TOL};
use crate::{Error, Result};

/// Discrete projection used by the penalty operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionMode {
    /// Projection in the metric of `J = M + S`.
    ExactJ,
    /// Nodal clamping; cheap, but the penalty is not guaranteed monotone.
    NodalClamp,
}

impl ProjectionMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "exact_J" | "exact_j" => Ok(ProjectionMode::ExactJ),
            "nodal_clamp" => Ok(ProjectionMode::NodalClamp),
            other => Err(Error::Domain(format!("unknown projection mode `{other}`"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProjectionMode::ExactJ => "exact_J",
            ProjectionMode::NodalClamp => "nodal_clamp",
        }
    }
}

/// Result of a projection onto the shifted constraint set.
#[derive(Debug, Clone)]
pub struct Projection {
    pub value: Vec<f64>,
    /// Active nodes with their multipliers (`J(Pw − w) = Σ λ_i e_i`); empty
    /// for the clamp mode.
    pub active: Vec<(usize, f64)>,
    pub iterations: usize,
    pub kkt_residual: f64,
}

/// The shifted set `{w : w_i ≥ −κ_D on constrained nodes, w = 0 on fixed
/// nodes}` together with the metric `J`.
#[derive(Debug)]
pub struct Constraint {
    pub j: SparseMatrix,
    /// False on Dirichlet nodes.
    pub free: Vec<bool>,
    pub constrained: Vec<usize>,
    pub kappa: f64,
    jinv: RefCell<HashMap<usize, Vec<f64>>>,
}

/// Tolerance below which a bound is treated as violated.
const ACTIVE_TOL: f64 = 1e-13;

impl Constraint {
    pub fn new(j: SparseMatrix, free: Vec<bool>, constrained: Vec<usize>, kappa: f64) -> Result<Self> {
        if free.len() != j.dim() {
            return Err(Error::Dimension {
                expected: j.dim(),
                got: free.len(),
            });
        }
        if let Some(&i) = constrained.iter().find(|&&i| i >= j.dim() || !free[i]) {
            return Err(Error::Domain(format!("constrained node {i} is fixed or out of range")));
        }
        Ok(Constraint {
            j,
            free,
            constrained,
            kappa,
            jinv: RefCell::new(HashMap::new()),
        })
    }

    pub fn dim(&self) -> usize {
        self.j.dim()
    }

    fn unit(&self, i: usize) -> Vec<f64> {
        let mut e = vec![0.0; self.dim()];
        e[i] = 1.0;
        e
    }

    /// Column `J_ff⁻¹ e_i`, cached.
    fn jinv_column(&self, i: usize) -> Result<Vec<f64>> {
        if let Some(c) = self.jinv.borrow().get(&i) {
            return Ok(c.clone());
        }
        let mut x = vec![0.0; self.dim()];
        pcg_masked(&self.j, &self.unit(i), &self.free, &mut x, PCG_TOL)?;
        self.jinv.borrow_mut().insert(i, x.clone());
        Ok(x)
    }

    pub fn is_feasible(&self, w: &[f64]) -> bool {
        self.constrained.iter().all(|&i| w[i] >= -self.kappa)
            && (0..self.dim()).all(|i| self.free[i] || w[i] == 0.0)
    }

    /// `P_K w` in the given mode.
    pub fn project(&self, w: &[f64], mode: ProjectionMode) -> Result<Projection> {
        if w.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: w.len(),
            });
        }
        match mode {
            ProjectionMode::NodalClamp => {
                let mut v = w.to_vec();
                for (i, x) in v.iter_mut().enumerate() {
                    if !self.free[i] {
                        *x = 0.0;
                    }
                }
                for &i in &self.constrained {
                    v[i] = v[i].max(-self.kappa);
                }
                Ok(Projection {
                    value: v,
                    active: Vec::new(),
                    iterations: 1,
                    kkt_residual: 0.0,
                })
            }
            ProjectionMode::ExactJ => self.project_exact(w),
        }
    }

    fn project_exact(&self, w: &[f64]) -> Result<Projection> {
        let kappa = self.kappa;
        // Unconstrained minimizer with the fixed nodes set to zero.
        let base = if (0..self.dim()).all(|i| self.free[i] || w[i] == 0.0) {
            w.to_vec()
        } else {
            let jw = self.j.mul(w);
            let mut x: Vec<f64> = w.iter().zip(&self.free).map(|(&v, &f)| if f { v } else { 0.0 }).collect();
            pcg_masked(&self.j, &jw, &self.free, &mut x, PCG_TOL)?;
            x
        };
        let mut active: BTreeSet<usize> =
            self.constrained.iter().copied().filter(|&i| base[i] < -kappa - ACTIVE_TOL).collect();
        let cap = self.constrained.len() + 2;
        for it in 1..=cap {
            let idx: Vec<usize> = active.iter().copied().collect();
            let cols: Vec<Vec<f64>> = idx.iter().map(|&i| self.jinv_column(i)).collect::<Result<_>>()?;
            let g: Vec<Vec<f64>> = idx.iter().map(|&r| cols.iter().map(|c| c[r]).collect()).collect();
            let rhs: Vec<f64> = idx.iter().map(|&i| -kappa - base[i]).collect();
            let lambda = if idx.is_empty() { Vec::new() } else { dense_cholesky_solve(&g, &rhs)? };
            let mut v = base.clone();
            for (l, c) in lambda.iter().zip(&cols) {
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi += l * ci;
                }
            }
            let mut next: BTreeSet<usize> = BTreeSet::new();
            for (k, &i) in idx.iter().enumerate() {
                if lambda[k] > 0.0 {
                    next.insert(i);
                }
            }
            for &i in &self.constrained {
                if !active.contains(&i) && v[i] < -kappa - ACTIVE_TOL {
                    next.insert(i);
                }
            }
            if next == active {
                for &i in &idx {
                    v[i] = -kappa;
                }
                let mut kkt: f64 = 0.0;
                for &i in &self.constrained {
                    kkt = kkt.max(-kappa - v[i]);
                }
                for &l in &lambda {
                    kkt = kkt.max(-l);
                }
                return Ok(Projection {
                    value: v,
                    active: idx.into_iter().zip(lambda).collect(),
                    iterations: it,
                    kkt_residual: kkt.max(0.0),
                });
            }
            active = next;
        }
        Err(Error::Convergence(cap))
    }

    /// `B w = J(w − P_K w)`.
    pub fn penalty_apply(&self, w: &[f64], mode: ProjectionMode) -> Result<Vec<f64>> {
        let p = self.project(w, mode)?;
        let d: Vec<f64> = w.iter().zip(&p.value).map(|(a, b)| a - b).collect();
        Ok(self.j.mul(&d))
    }

    /// `⟨B w, w⟩`.
    pub fn violation(&self, w: &[f64], mode: ProjectionMode) -> Result<f64> {
        let b = self.penalty_apply(w, mode)?;
        Ok(b.iter().zip(w).map(|(x, y)| x * y).sum::<f64>().max(0.0))
    }

    /// Solves `A w + (1/μ) B w = rhs` with `w = 0` on fixed nodes.
    ///
    /// `active` is the starting guess for the active set and is updated with
    /// the final one. `w` is the initial guess for the unconstrained part.
    pub fn solve_penalized(
        &self,
        a: &SparseMatrix,
        rhs: &[f64],
        mu: f64,
        mode: ProjectionMode,
        w: &mut Vec<f64>,
        active: &mut BTreeSet<usize>,
    ) -> Result<()> {
        let n = self.dim();
        for (i, x) in w.iter_mut().enumerate() {
            if !self.free[i] {
                *x = 0.0;
            }
        }
        pcg_masked(a, rhs, &self.free, w, PCG_TOL)?;
        if mu.is_infinite() || self.constrained.is_empty() {
            active.clear();
            return Ok(());
        }
        let w0 = w.clone();
        let kappa = self.kappa;
        let mut columns: HashMap<usize, Vec<f64>> = HashMap::new();
        let column = |i: usize, columns: &mut HashMap<usize, Vec<f64>>| -> Result<Vec<f64>> {
            if let Some(c) = columns.get(&i) {
                return Ok(c.clone());
            }
            let b = match mode {
                ProjectionMode::ExactJ => self.unit(i),
                ProjectionMode::NodalClamp => {
                    let mut b = vec![0.0; n];
                    for (j, v) in self.j.row(i) {
                        b[j] = v;
                    }
                    b
                }
            };
            let mut x = vec![0.0; n];
            pcg_masked(a, &b, &self.free, &mut x, PCG_TOL)?;
            columns.insert(i, x.clone());
            Ok(x)
        };

        let cap = self.constrained.len() + 2;
        for _ in 0..cap {
            let idx: Vec<usize> = active.iter().copied().collect();
            let mut cur = w0.clone();
            let mut coef = Vec::new();
            if !idx.is_empty() {
                let cols: Vec<Vec<f64>> =
                    idx.iter().map(|&i| column(i, &mut columns)).collect::<Result<_>>()?;
                match mode {
                    ProjectionMode::ExactJ => {
                        // (Eᵀ A⁻¹ E + μ Eᵀ J⁻¹ E) ν = −κ − Eᵀ A⁻¹ rhs
                        let z: Vec<Vec<f64>> =
                            idx.iter().map(|&i| self.jinv_column(i)).collect::<Result<_>>()?;
                        let m: Vec<Vec<f64>> = idx
                            .iter()
                            .map(|&r| {
                                cols.iter().zip(&z).map(|(c, zc)| c[r] + mu * zc[r]).collect()
                            })
                            .collect();
                        let sym: Vec<Vec<f64>> = (0..idx.len())
                            .map(|r| (0..idx.len()).map(|c| 0.5 * (m[r][c] + m[c][r])).collect())
                            .collect();
                        let b: Vec<f64> = idx.iter().map(|&i| -kappa - w0[i]).collect();
                        let nu = dense_cholesky_solve(&sym, &b)?;
                        for (l, c) in nu.iter().zip(&cols) {
                            for (x, y) in cur.iter_mut().zip(c) {
                                *x += l * y;
                            }
                        }
                        coef = nu;
                    }
                    ProjectionMode::NodalClamp => {
                        // (I + (1/μ) Eᵀ A⁻¹ J E) d = Eᵀ A⁻¹ rhs + κ
                        let m: Vec<Vec<f64>> = idx
                            .iter()
                            .enumerate()
                            .map(|(r, &ri)| {
                                cols.iter()
                                    .enumerate()
                                    .map(|(c, col)| (r == c) as u8 as f64 + col[ri] / mu)
                                    .collect()
                            })
                            .collect();
                        let b: Vec<f64> = idx.iter().map(|&i| w0[i] + kappa).collect();
                        let d = dense_lu_solve(&m, &b)?;
                        for (l, c) in d.iter().zip(&cols) {
                            for (x, y) in cur.iter_mut().zip(c) {
                                *x -= l / mu * y;
                            }
                        }
                        coef = d.iter().map(|x| -x).collect();
                    }
                }
            }
            let next: BTreeSet<usize> = match mode {
                ProjectionMode::ExactJ => {
                    // Projection of `cur`: v = cur + μ J⁻¹ E ν.
                    let mut v = cur.clone();
                    for (k, &i) in idx.iter().enumerate() {
                        let z = self.jinv_column(i)?;
                        for (x, y) in v.iter_mut().zip(&z) {
                            *x += mu * coef[k] * y;
                        }
                    }
                    let mut s: BTreeSet<usize> =
                        idx.iter().zip(&coef).filter(|(_, &c)| c > 0.0).map(|(&i, _)| i).collect();
                    for &i in &self.constrained {
                        if !active.contains(&i) && v[i] < -kappa - ACTIVE_TOL {
                            s.insert(i);
                        }
                    }
                    s
                }
                ProjectionMode::NodalClamp => self
                    .constrained
                    .iter()
                    .copied()
                    .filter(|&i| cur[i] < -kappa - ACTIVE_TOL || (active.contains(&i) && cur[i] < -kappa))
                    .collect(),
            };
            *w = cur;
            if next == *active {
                return Ok(());
            }
            *active = next;
        }
        Err(Error::Convergence(cap))
    }
}
