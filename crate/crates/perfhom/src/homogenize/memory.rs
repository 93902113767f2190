use std::io::Write;

use super::{cell_coefficient, solve_cell_elliptic, solve_periodic, CorrectorSet, PeriodicMap};
use crate::fem::{FemSpace, SparseMatrix, Weight};
use crate::mesh::CellMesh;
use crate::model::{CellCoefficient, ModelParams};
use crate::{Error, Result};

/// Cell data of the two-coefficient model: correctors `ω` (for `A`) and
/// `ϑ` (for `B`) and the reduced periodic stiffness matrices.
#[derive(Debug, Clone)]
pub struct MemoryCell {
    pub cell: CellMesh,
    pub coeff_a: Vec<f64>,
    pub coeff_b: Vec<f64>,
    pub omega: CorrectorSet,
    pub theta: CorrectorSet,
    map: PeriodicMap,
    s_a: SparseMatrix,
    s_b: SparseMatrix,
}

impl MemoryCell {
    pub fn new(cell: &CellMesh, a: &CellCoefficient, b: &CellCoefficient) -> Result<Self> {
        let coeff_a = cell_coefficient(cell, a);
        let coeff_b = cell_coefficient(cell, b);
        Self::from_values(cell, coeff_a, coeff_b)
    }

    pub fn from_values(cell: &CellMesh, coeff_a: Vec<f64>, coeff_b: Vec<f64>) -> Result<Self> {
        let omega = solve_cell_elliptic(cell, &coeff_a, "A")?;
        let theta = solve_cell_elliptic(cell, &coeff_b, "B")?;
        let space = FemSpace::new(&cell.mesh);
        let map = PeriodicMap::new(cell);
        let s_a = map.reduce_matrix(&space.stiffness(Weight::PerTriangle(&coeff_a))?);
        let s_b = map.reduce_matrix(&space.stiffness(Weight::PerTriangle(&coeff_b))?);
        Ok(MemoryCell {
            cell: cell.clone(),
            coeff_a,
            coeff_b,
            omega,
            theta,
            map,
            s_a,
            s_b,
        })
    }

    /// `χ^j(0) = ω^j − ϑ^j`.
    pub fn initial_chi(&self) -> [Vec<f64>; 2] {
        [0, 1].map(|j| {
            self.omega.omega[j]
                .iter()
                .zip(&self.theta.omega[j])
                .map(|(a, b)| a - b)
                .collect()
        })
    }
}

/// `χ¹, χ²` at the time levels of a `u` history.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiTrajectory {
    pub h: f64,
    /// `chi[m][j]` is `χ^j` at level `m`.
    pub chi: Vec<[Vec<f64>; 2]>,
    pub residual: f64,
}

fn check_history(u_history: &[f64]) -> Result<()> {
    match u_history.iter().find(|&&u| !(u >= 0.0)) {
        Some(u) => Err(Error::Domain(format!("u history value {u} is negative"))),
        None => Ok(()),
    }
}

/// Rothe steps of the memory cell problem,
/// `(A/h + B P_c(u_m + δ)) ∇χ_m = (A/h) ∇χ_{m−1}` in the weak periodic sense,
/// for `m = 1..u_history.len()−1`. The scalar `k(u_m + δ)` cancels.
pub fn solve_cell_memory(
    mc: &MemoryCell,
    u_history: &[f64],
    params: &ModelParams,
    delta: f64,
    h: f64,
) -> Result<ChiTrajectory> {
    check_history(u_history)?;
    if !(delta > 0.0) || !(h > 0.0) {
        return Err(Error::Domain("memory cell problem needs delta > 0 and h > 0".into()));
    }
    let space = FemSpace::new(&mc.cell.mesh);
    let area = mc.cell.area();
    let mut chi = vec![mc.initial_chi()];
    let mut residual: f64 = 0.0;
    let sa_h = mc.s_a.scaled(1.0 / h);
    for &u in &u_history[1..] {
        let mut a = sa_h.clone();
        a.add_scaled(params.pc_delta(delta, u), &mc.s_b);
        let prev = chi.last().unwrap();
        let mut next = [Vec::new(), Vec::new()];
        for j in 0..2 {
            let b = sa_h.mul(&mc.map.reduce_vector_values(&prev[j]));
            if b.iter().all(|&x| x == 0.0) {
                next[j] = vec![0.0; prev[j].len()];
                continue;
            }
            let (v, r) = solve_periodic(&space, &mc.map, &a, &b, area)?;
            next[j] = v;
            residual = residual.max(r);
        }
        chi.push(next);
    }
    Ok(ChiTrajectory { h, chi, residual })
}

/// Per-time `K_hom` at one macro point.
#[derive(Debug, Clone, PartialEq)]
pub struct MemoryKernel {
    pub times: Vec<f64>,
    pub values: Vec<[[f64; 2]; 2]>,
    pub chi: ChiTrajectory,
}

impl MemoryKernel {
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().flatten().flatten().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `K^{ij}(t_m) = ⨍ k(u_m + δ) [A ∂_t ∂_i χ^j + B P_c(u_m + δ) ∂_i χ^j]` with
/// backward differences; level 0 reuses the first difference.
pub fn memory_kernel(
    mc: &MemoryCell,
    chi: &ChiTrajectory,
    u_history: &[f64],
    params: &ModelParams,
    delta: f64,
) -> Result<MemoryKernel> {
    if chi.chi.len() != u_history.len() {
        return Err(Error::Dimension {
            expected: u_history.len(),
            got: chi.chi.len(),
        });
    }
    let mesh = &mc.cell.mesh;
    let space = FemSpace::new(mesh);
    let area = mc.cell.area();
    let levels = chi.chi.len();
    let mut values = Vec::with_capacity(levels);
    for (m, &u) in u_history.iter().enumerate() {
        let (k, pc) = (params.k_delta(delta, u), params.pc_delta(delta, u));
        let (lo, hi) = match (m, levels) {
            (_, 1) => (0, 0),
            (0, _) => (0, 1),
            _ => (m - 1, m),
        };
        let mut kk = [[0.0; 2]; 2];
        for j in 0..2 {
            let cur = &chi.chi[m][j];
            if cur.iter().all(|&x| x == 0.0) && chi.chi[lo][j] == chi.chi[hi][j] {
                continue;
            }
            for t in 0..mesh.n_triangles() {
                let g = space.field_gradient(t, cur);
                let g_hi = space.field_gradient(t, &chi.chi[hi][j]);
                let g_lo = space.field_gradient(t, &chi.chi[lo][j]);
                let at = mesh.areas[t];
                for i in 0..2 {
                    let dt = if hi == lo { 0.0 } else { (g_hi[i] - g_lo[i]) / chi.h };
                    kk[i][j] += at * k * (mc.coeff_a[t] * dt + mc.coeff_b[t] * pc * g[i]);
                }
            }
        }
        values.push(kk.map(|r| r.map(|x| x / area)));
    }
    Ok(MemoryKernel {
        times: (0..levels).map(|m| m as f64 * chi.h).collect(),
        values,
        chi: chi.clone(),
    })
}

/// Kernels for every shift `s = t_m`: entry `[m][l]` is `K_hom(t_l; s)`
/// computed from `u(t_{l+m})`, clamped at the last level.
pub fn shifted_kernels(
    mc: &MemoryCell,
    u_history: &[f64],
    params: &ModelParams,
    delta: f64,
    h: f64,
) -> Result<Vec<Vec<[[f64; 2]; 2]>>> {
    let n = u_history.len();
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        let shifted: Vec<f64> = (0..n - m).map(|l| u_history[(l + m).min(n - 1)]).collect();
        let chi = solve_cell_memory(mc, &shifted, params, delta, h)?;
        out.push(memory_kernel(mc, &chi, &shifted, params, delta)?.values);
    }
    Ok(out)
}

/// Kernels along a δ-schedule and the sup-norm differences of consecutive ones.
pub fn memory_delta_limit(
    mc: &MemoryCell,
    u_history: &[f64],
    params: &ModelParams,
    deltas: &[f64],
    h: f64,
) -> Result<(Vec<MemoryKernel>, Vec<f64>)> {
    let kernels = deltas
        .iter()
        .map(|&d| {
            let chi = solve_cell_memory(mc, u_history, params, d, h)?;
            memory_kernel(mc, &chi, u_history, params, d)
        })
        .collect::<Result<Vec<_>>>()?;
    let cauchy = kernels
        .windows(2)
        .map(|w| {
            w[0].values
                .iter()
                .zip(&w[1].values)
                .flat_map(|(a, b)| (0..4).map(move |k| (a[k / 2][k % 2] - b[k / 2][k % 2]).abs()))
                .fold(0.0, f64::max)
        })
        .collect();
    Ok((kernels, cauchy))
}

/// Writes `node,t,K11,K12,K21,K22` rows.
pub fn write_kernel_csv<W: Write>(mut w: W, kernels: &[(usize, &MemoryKernel)]) -> Result<()> {
    writeln!(w, "node,t,K11,K12,K21,K22")?;
    for (node, k) in kernels {
        for (t, v) in k.times.iter().zip(&k.values) {
            writeln!(
                w,
                "{node},{t:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                v[0][0], v[0][1], v[1][0], v[1][1]
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::dense_masked_solve;
    use crate::mesh::{build_cell_mesh, CellGeometry};

    fn layered() -> CellCoefficient {
        CellCoefficient::Layered {
            mean: 1.0,
            amplitude: 0.5,
        }
    }

    #[test]
    fn equal_coefficients_give_zero_kernel() {
        let cell = build_cell_mesh(&CellGeometry::default()).unwrap();
        let mc = MemoryCell::new(&cell, &layered(), &layered()).unwrap();
        let p = ModelParams::default();
        let u = vec![0.9, 0.8, 0.7, 0.6];
        let chi = solve_cell_memory(&mc, &u, &p, 1e-2, 0.1).unwrap();
        assert!(chi.chi.iter().flatten().flatten().all(|&x| x == 0.0));
        let k = memory_kernel(&mc, &chi, &u, &p, 1e-2).unwrap();
        assert!(k.sup_norm() <= 1e-8);
    }

    #[test]
    fn chi_energy_decays_for_constant_history() {
        let cell = build_cell_mesh(&CellGeometry::default()).unwrap();
        let mc = MemoryCell::new(&cell, &CellCoefficient::Constant(1.0), &layered()).unwrap();
        let p = ModelParams::default();
        let u = vec![0.8; 6];
        let chi = solve_cell_memory(&mc, &u, &p, 1e-2, 0.05).unwrap();
        let space = FemSpace::new(&cell.mesh);
        let sb = space.stiffness(Weight::PerTriangle(&mc.coeff_b)).unwrap();
        let energy: Vec<f64> = chi.chi.iter().map(|c| sb.quad_form(&c[0])).collect();
        assert!(energy[0] > 0.0);
        for w in energy.windows(2) {
            assert!(w[1] < w[0]);
        }
        for c in &chi.chi {
            assert!((space.integral(&c[0]) / cell.area()).abs() < 1e-10);
        }
        assert!(chi.residual < 1e-10);
    }

    #[test]
    fn one_step_matches_dense_solve() {
        let cell = build_cell_mesh(&CellGeometry::solid(2)).unwrap();
        let mc = MemoryCell::new(&cell, &CellCoefficient::Constant(1.0), &layered()).unwrap();
        let p = ModelParams::default();
        let (u, delta, h) = ([0.5, 0.5], 0.1, 0.2);
        let chi = solve_cell_memory(&mc, &u, &p, delta, h).unwrap();

        let mut a = mc.s_a.scaled(1.0 / h);
        a.add_scaled(p.pc_delta(delta, 0.5), &mc.s_b);
        let space = FemSpace::new(&cell.mesh);
        for j in 0..2 {
            let b = mc.s_a.scaled(1.0 / h).mul(&mc.map.reduce_vector_values(&chi.chi[0][j]));
            let mut free = vec![true; mc.map.dim];
            free[0] = false;
            let mut x = vec![0.0; mc.map.dim];
            dense_masked_solve(&a, &b, &free, &mut x).unwrap();
            let mut v = mc.map.expand(&x);
            let mean = space.integral(&v) / cell.area();
            v.iter_mut().for_each(|y| *y -= mean);
            for (p, q) in v.iter().zip(&chi.chi[1][j]) {
                assert!((p - q).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn frozen_chi_reduces_to_elliptic_term() {
        let cell = build_cell_mesh(&CellGeometry::default()).unwrap();
        let mc = MemoryCell::new(&cell, &CellCoefficient::Constant(1.0), &layered()).unwrap();
        let p = ModelParams::default();
        let c0 = mc.initial_chi();
        let chi = ChiTrajectory {
            h: 0.1,
            chi: vec![c0.clone(), c0.clone(), c0.clone()],
            residual: 0.0,
        };
        let u = [0.7; 3];
        let k = memory_kernel(&mc, &chi, &u, &p, 1e-2).unwrap();
        let space = FemSpace::new(&cell.mesh);
        let (kv, pc) = (p.k_delta(1e-2, 0.7), p.pc_delta(1e-2, 0.7));
        for i in 0..2 {
            for j in 0..2 {
                let direct: f64 = (0..cell.mesh.n_triangles())
                    .map(|t| cell.mesh.areas[t] * mc.coeff_b[t] * space.field_gradient(t, &c0[j])[i])
                    .sum::<f64>()
                    * kv
                    * pc
                    / cell.area();
                for v in &k.values {
                    assert!((v[i][j] - direct).abs() <= 1e-12 * direct.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn negative_history_is_rejected() {
        let cell = build_cell_mesh(&CellGeometry::default()).unwrap();
        let mc = MemoryCell::new(&cell, &CellCoefficient::Constant(1.0), &layered()).unwrap();
        let r = solve_cell_memory(&mc, &[0.5, -0.1], &ModelParams::default(), 1e-2, 0.1);
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn kernel_csv_has_header_and_rows() {
        let cell = build_cell_mesh(&CellGeometry::default()).unwrap();
        let mc = MemoryCell::new(&cell, &CellCoefficient::Constant(1.0), &layered()).unwrap();
        let p = ModelParams::default();
        let u = [0.9, 0.9];
        let chi = solve_cell_memory(&mc, &u, &p, 1e-2, 0.1).unwrap();
        let k = memory_kernel(&mc, &chi, &u, &p, 1e-2).unwrap();
        let mut buf = Vec::new();
        write_kernel_csv(&mut buf, &[(3, &k)]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().count(), 3);
        assert!(s.lines().nth(1).unwrap().starts_with("3,0.0000000000000000e0,"));
    }
}
