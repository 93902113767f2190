use super::Trajectory;
use crate::fem::{FemSpace, GAUSS3};
use crate::model::{exponent_p, ModelParams};
use crate::{Error, Result};

/// Discrete counterparts of the a priori quantities of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriReport {
    /// `sup_t ∫ (u + δ)^{1+α−β}`.
    pub sup_inverse_moment: f64,
    /// `sup_t ‖∇u‖_{L²}`.
    pub sup_grad_l2: f64,
    /// `sup_t ‖b_δ(u)‖_{L²}`.
    pub sup_b_l2: f64,
    /// `∫_0^T ‖√P_{c,δ}(u) ∇u‖²`.
    pub int_pc_grad: f64,
    /// `∫_0^T ‖√k_δ(u) ∂_t∇u‖²`.
    pub int_k_dt_grad: f64,
    /// `∫_0^T ‖√b′_δ(u) ∂_t u‖²`.
    pub int_db_dt: f64,
    /// `∫_0^T ‖∇∂_t u‖_{L^p}^p`.
    pub int_dt_grad_lp: f64,
    pub p: f64,
    /// False when the exponent condition fails and `p = 2` is used instead.
    pub p_admissible: bool,
    pub min_value: f64,
    pub min_constrained: f64,
}

impl AprioriReport {
    /// The bounded quantities, in CSV column order.
    pub fn entries(&self) -> [(&'static str, f64); 7] {
        [
            ("sup_inverse_moment", self.sup_inverse_moment),
            ("sup_grad_l2", self.sup_grad_l2),
            ("sup_b_l2", self.sup_b_l2),
            ("int_pc_grad", self.int_pc_grad),
            ("int_k_dt_grad", self.int_k_dt_grad),
            ("int_db_dt", self.int_db_dt),
            ("int_dt_grad_lp", self.int_dt_grad_lp),
        ]
    }

    pub fn csv_header() -> String {
        let names: Vec<&str> = Self::default_names().to_vec();
        format!("{},p,min_value,min_constrained", names.join(","))
    }

    pub fn default_names() -> [&'static str; 7] {
        [
            "sup_inverse_moment",
            "sup_grad_l2",
            "sup_b_l2",
            "int_pc_grad",
            "int_k_dt_grad",
            "int_db_dt",
            "int_dt_grad_lp",
        ]
    }

    pub fn csv_row(&self) -> String {
        let mut cells: Vec<String> = self.entries().iter().map(|(_, v)| format!("{v:.16e}")).collect();
        cells.push(format!("{:.16e}", self.p));
        cells.push(format!("{:.16e}", self.min_value));
        cells.push(format!("{:.16e}", self.min_constrained));
        cells.join(",")
    }
}

/// `∫ g(u)` with the 3-point Gauss rule.
fn gauss_integral(space: &FemSpace, u: &[f64], g: impl Fn(f64) -> f64) -> f64 {
    space
        .mesh
        .triangles
        .iter()
        .zip(&space.mesh.areas)
        .map(|(t, a)| {
            a / 3.0
                * GAUSS3
                    .iter()
                    .map(|l| g(l[0] * u[t[0]] + l[1] * u[t[1]] + l[2] * u[t[2]]))
                    .sum::<f64>()
        })
        .sum()
}

/// Evaluates the a priori quantities on a trajectory; time derivatives are
/// backward differences.
pub fn apriori_monitor(traj: &Trajectory, params: &ModelParams, delta: f64, space: &FemSpace) -> Result<AprioriReport> {
    let n = space.dim();
    if let Some(s) = traj.states.iter().find(|s| s.len() != n) {
        return Err(Error::Dimension { expected: n, got: s.len() });
    }
    let (p, p_admissible) = match exponent_p(params.alpha, params.beta, params.lambda, 2, params.q1) {
        Ok(e) => (e.p_f64(), true),
        Err(_) => (2.0, false),
    };
    let h = traj.h();
    let moment_exp = 1.0 + params.alpha - params.beta;
    let mesh = space.mesh;

    let mut r = AprioriReport {
        sup_inverse_moment: 0.0,
        sup_grad_l2: 0.0,
        sup_b_l2: 0.0,
        int_pc_grad: 0.0,
        int_k_dt_grad: 0.0,
        int_db_dt: 0.0,
        int_dt_grad_lp: 0.0,
        p,
        p_admissible,
        min_value: traj.min_value(),
        min_constrained: traj.min_constrained(),
    };
    for (j, u) in traj.states.iter().enumerate() {
        let moment = gauss_integral(space, u, |x| (x.max(0.0) + delta).powf(moment_exp));
        let b2 = gauss_integral(space, u, |x| params.b_delta(delta, x).powi(2));
        let uc = space.at_centroids(u);
        let mut grad2 = 0.0;
        let mut pc_grad = 0.0;
        for t in 0..mesh.n_triangles() {
            let g = space.field_gradient(t, u);
            let g2 = g[0] * g[0] + g[1] * g[1];
            grad2 += mesh.areas[t] * g2;
            if g2 > 0.0 {
                pc_grad += mesh.areas[t] * params.pc_delta(delta, uc[t]) * g2;
            }
        }
        r.sup_inverse_moment = r.sup_inverse_moment.max(moment);
        r.sup_b_l2 = r.sup_b_l2.max(b2.sqrt());
        r.sup_grad_l2 = r.sup_grad_l2.max(grad2.sqrt());
        if j == 0 {
            continue;
        }
        r.int_pc_grad += h * pc_grad;

        let prev = &traj.states[j - 1];
        let dt: Vec<f64> = u.iter().zip(prev).map(|(a, b)| (a - b) / h).collect();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let a = mesh.areas[t];
            let g = space.field_gradient(t, &dt);
            let g2 = g[0] * g[0] + g[1] * g[1];
            if g2 > 0.0 {
                r.int_k_dt_grad += h * a * params.k_delta(delta, uc[t]) * g2;
                r.int_dt_grad_lp += h * a * g2.sqrt().powf(p);
            }
            for l in &GAUSS3 {
                let uq = l[0] * u[tri[0]] + l[1] * u[tri[1]] + l[2] * u[tri[2]];
                let dq = l[0] * dt[tri[0]] + l[1] * dt[tri[1]] + l[2] * dt[tri[2]];
                if dq != 0.0 {
                    r.int_db_dt += h * a / 3.0 * params.db_delta(delta, uq) * dq * dq;
                }
            }
        }
    }
    Ok(r)
}
