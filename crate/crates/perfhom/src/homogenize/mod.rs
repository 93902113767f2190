//! Unit-cell problems and the effective macroscopic model.

mod memory;

pub use memory::{
    memory_delta_limit, memory_kernel, shifted_kernels, solve_cell_memory, write_kernel_csv, ChiTrajectory,
    MemoryCell, MemoryKernel,
};

use crate::fem::{pcg_masked, FemSpace, PointLocator, SparseMatrix, Weight};
use crate::mesh::{CellMesh, PerforatedMesh, TriMesh};
use crate::model::{BoundarySource, CellCoefficient, ModelParams};
use crate::{Error, Result};

/// Relative PCG tolerance of the cell solves.
const CELL_TOL: f64 = 1e-14;

/// Unknown numbering after periodic identification.
#[derive(Debug, Clone)]
pub struct PeriodicMap {
    /// Reduced unknown of every vertex.
    pub index: Vec<usize>,
    pub dim: usize,
}

impl PeriodicMap {
    pub fn new(cell: &CellMesh) -> Self {
        let master = cell.periodic_master();
        let mut slot = vec![usize::MAX; master.len()];
        let mut dim = 0;
        for &m in &master {
            if slot[m] == usize::MAX {
                slot[m] = dim;
                dim += 1;
            }
        }
        PeriodicMap {
            index: master.iter().map(|&m| slot[m]).collect(),
            dim,
        }
    }

    pub fn reduce_matrix(&self, a: &SparseMatrix) -> SparseMatrix {
        let mut trip = Vec::with_capacity(a.nnz());
        for i in 0..a.dim() {
            for (j, v) in a.row(i) {
                trip.push((self.index[i], self.index[j], v));
            }
        }
        SparseMatrix::from_triplets(self.dim, &trip)
    }

    pub fn reduce_vector(&self, v: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.dim];
        for (i, x) in v.iter().enumerate() {
            r[self.index[i]] += x;
        }
        r
    }

    /// Restriction of a periodic vertex field to reduced unknowns.
    pub fn reduce_vector_values(&self, v: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; self.dim];
        for (i, &x) in v.iter().enumerate() {
            r[self.index[i]] = x;
        }
        r
    }

    pub fn expand(&self, r: &[f64]) -> Vec<f64> {
        self.index.iter().map(|&k| r[k]).collect()
    }
}

/// Solves the singular periodic system `a x = b` with the first unknown
/// pinned, expands to vertices and shifts to zero mean. Returns the field and
/// the max-norm residual of the reduced system.
pub(crate) fn solve_periodic(
    space: &FemSpace,
    map: &PeriodicMap,
    a: &SparseMatrix,
    b: &[f64],
    area: f64,
) -> Result<(Vec<f64>, f64)> {
    let mut free = vec![true; map.dim];
    free[0] = false;
    let mut x = vec![0.0; map.dim];
    pcg_masked(a, b, &free, &mut x, CELL_TOL)?;
    let r = a.mul(&x);
    let residual = r.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    let mut v = map.expand(&x);
    let mean = space.integral(&v) / area;
    for y in &mut v {
        *y -= mean;
    }
    Ok((v, residual))
}

/// Coefficient values at the centroids of the cell triangles.
pub fn cell_coefficient(cell: &CellMesh, coeff: &CellCoefficient) -> Vec<f64> {
    (0..cell.mesh.n_triangles()).map(|t| coeff.eval(cell.mesh.centroid(t))).collect()
}

fn check_coefficient(mesh: &TriMesh, coeff: &[f64]) -> Result<()> {
    if coeff.len() != mesh.n_triangles() {
        return Err(Error::Dimension {
            expected: mesh.n_triangles(),
            got: coeff.len(),
        });
    }
    match coeff.iter().position(|&c| !(c > 0.0 && c.is_finite())) {
        Some(t) => Err(Error::Coercivity(t)),
        None => Ok(()),
    }
}

/// Elliptic correctors `ω¹, ω²` of one coefficient field.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectorSet {
    pub omega: [Vec<f64>; 2],
    /// Name of the coefficient (`A` or `B`).
    pub label: String,
    /// Max-norm residual of the two reduced systems.
    pub residual: f64,
    pub mesh_id: u64,
}

impl CorrectorSet {
    /// `∫_{Y*} ω^j / |Y*|`.
    pub fn mean(&self, cell: &CellMesh, j: usize) -> f64 {
        FemSpace::new(&cell.mesh).integral(&self.omega[j]) / cell.area()
    }
}

/// Solves `div(c (∇ω^j + e_j)) = 0` in `Y*`, zero conormal flux on Γ,
/// periodic, zero mean.
pub fn solve_cell_elliptic(cell: &CellMesh, coeff: &[f64], label: &str) -> Result<CorrectorSet> {
    check_coefficient(&cell.mesh, coeff)?;
    let space = FemSpace::new(&cell.mesh);
    let map = PeriodicMap::new(cell);
    let k = map.reduce_matrix(&space.stiffness(Weight::PerTriangle(coeff))?);
    let area = cell.area();
    let mut omega = [Vec::new(), Vec::new()];
    let mut residual: f64 = 0.0;
    for (j, om) in omega.iter_mut().enumerate() {
        let flux: Vec<[f64; 2]> = coeff
            .iter()
            .map(|&c| if j == 0 { [-c, 0.0] } else { [0.0, -c] })
            .collect();
        let b = map.reduce_vector(&space.flux_load(&flux)?);
        let (v, r) = solve_periodic(&space, &map, &k, &b, area)?;
        *om = v;
        residual = residual.max(r);
    }
    Ok(CorrectorSet {
        omega,
        label: label.to_string(),
        residual,
        mesh_id: cell.mesh.fingerprint(),
    })
}

/// A 2×2 effective tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveTensor {
    pub entries: [[f64; 2]; 2],
    pub label: String,
}

impl EffectiveTensor {
    pub fn identity(label: &str) -> Self {
        EffectiveTensor {
            entries: [[1.0, 0.0], [0.0, 1.0]],
            label: label.to_string(),
        }
    }

    pub fn asymmetry(&self) -> f64 {
        (self.entries[0][1] - self.entries[1][0]).abs()
    }

    /// Eigenvalues of the symmetric part, ascending.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.entries[0][0];
        let d = self.entries[1][1];
        let b = 0.5 * (self.entries[0][1] + self.entries[1][0]);
        let m = 0.5 * (a + d);
        let r = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [m - r, m + r]
    }

    pub fn is_spd(&self) -> bool {
        self.eigenvalues()[0] > 0.0
    }
}

/// `A_hom^{ij} = ⨍_{Y*} c (δ_ij + ∂_i ω^j)`.
pub fn effective_tensor(correctors: &CorrectorSet, coeff: &[f64], cell: &CellMesh) -> Result<EffectiveTensor> {
    check_coefficient(&cell.mesh, coeff)?;
    let n = cell.mesh.n_vertices();
    for om in &correctors.omega {
        if om.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: om.len(),
            });
        }
    }
    let space = FemSpace::new(&cell.mesh);
    let mut e = [[0.0; 2]; 2];
    for (t, &c) in coeff.iter().enumerate() {
        let a = cell.mesh.areas[t];
        for j in 0..2 {
            let g = space.field_gradient(t, &correctors.omega[j]);
            for i in 0..2 {
                e[i][j] += a * c * (if i == j { 1.0 } else { 0.0 } + g[i]);
            }
        }
    }
    let area = cell.area();
    Ok(EffectiveTensor {
        entries: e.map(|r| r.map(|x| x / area)),
        label: correctors.label.clone(),
    })
}

/// `∫_{Y*} c |∇ω^j + e_j|²`, which equals `A_hom^{jj} |Y*|`.
pub fn cell_energy(cell: &CellMesh, coeff: &[f64], omega: &[f64], j: usize) -> f64 {
    let space = FemSpace::new(&cell.mesh);
    coeff
        .iter()
        .enumerate()
        .map(|(t, &c)| {
            let mut g = space.field_gradient(t, omega);
            g[j] += 1.0;
            cell.mesh.areas[t] * c * (g[0] * g[0] + g[1] * g[1])
        })
        .sum()
}

/// Coefficients of `F_hom(u) = q_mean H(u) + k(u) g` and
/// `f_hom(t, u) = c_Γ f_0 f_1(u)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogenizedSources {
    pub q_mean: [f64; 2],
    pub g: [f64; 2],
    /// `|Γ| / |Y*|`.
    pub c_gamma: f64,
    /// Mean of `f_0` over Γ.
    pub f0_mean: f64,
    pub source: BoundarySource,
}

impl HomogenizedSources {
    pub fn f_hom(&self, t: f64, u: f64) -> f64 {
        self.c_gamma * self.source.eval(t, u)
    }
}

/// The boundary source `f_0 f_1` on Γ becomes the volume density
/// `(1/|Y*|) ∫_Γ f dγ`.
pub fn homogenized_sources(
    cell: &CellMesh,
    q_mean: [f64; 2],
    source: &BoundarySource,
    params: &ModelParams,
) -> HomogenizedSources {
    HomogenizedSources {
        q_mean,
        g: params.g,
        c_gamma: cell.gamma_length() / cell.area(),
        f0_mean: source.f0_level,
        source: *source,
    }
}

/// First-order corrected field `u(x) + ε Σ_j ∂_j u(x) ω^j(x/ε)` at the
/// vertices of `target`. `u` lives on `macro_mesh`.
pub fn reconstruct_corrector(
    macro_mesh: &TriMesh,
    u: &[f64],
    correctors: &CorrectorSet,
    cell: &CellMesh,
    target: &PerforatedMesh,
) -> Result<Vec<f64>> {
    if u.len() != macro_mesh.n_vertices() {
        return Err(Error::Dimension {
            expected: macro_mesh.n_vertices(),
            got: u.len(),
        });
    }
    let macro_loc = PointLocator::new(macro_mesh);
    let cell_loc = PointLocator::new(&cell.mesh);
    let macro_space = FemSpace::new(macro_mesh);
    let eps = target.epsilon;
    target
        .mesh
        .vertices
        .iter()
        .map(|&x| {
            let (t, l) = macro_loc.locate(x).ok_or(Error::Interpolation(x[0], x[1]))?;
            let tri = macro_mesh.triangles[t];
            let ux = l[0] * u[tri[0]] + l[1] * u[tri[1]] + l[2] * u[tri[2]];
            let grad = macro_space.field_gradient(t, u);
            let y = [x[0] / eps - (x[0] / eps).floor(), x[1] / eps - (x[1] / eps).floor()];
            let mut corr = 0.0;
            for (j, g) in grad.iter().enumerate() {
                if *g != 0.0 {
                    corr += g * cell_loc.interpolate(&correctors.omega[j], y)?;
                }
            }
            Ok(ux + eps * corr)
        })
        .collect()
}

/// Effective tensors, sources and (optionally) the memory cell problem.
#[derive(Debug, Clone)]
pub struct EffectiveModel {
    pub a_hom: EffectiveTensor,
    pub b_hom: EffectiveTensor,
    pub sources: HomogenizedSources,
    pub correctors: CorrectorSet,
    /// Present when the two coefficients differ.
    pub memory: Option<MemoryCell>,
}

impl EffectiveModel {
    /// Solves the cell problems for `A` and, if given, a second coefficient `B`.
    pub fn assemble(
        cell: &CellMesh,
        coeff_a: &CellCoefficient,
        coeff_b: Option<&CellCoefficient>,
        q_mean: [f64; 2],
        source: &BoundarySource,
        params: &ModelParams,
    ) -> Result<Self> {
        let a = cell_coefficient(cell, coeff_a);
        let omega = solve_cell_elliptic(cell, &a, "A")?;
        let a_hom = effective_tensor(&omega, &a, cell)?;
        let sources = homogenized_sources(cell, q_mean, source, params);
        let (b_hom, memory) = match coeff_b {
            Some(cb) if cb != coeff_a => {
                let mem = MemoryCell::new(cell, coeff_a, cb)?;
                let b = cell_coefficient(cell, cb);
                (effective_tensor(&mem.theta, &b, cell)?, Some(mem))
            }
            _ => {
                let mut b = a_hom.clone();
                b.label = "B".into();
                (b, None)
            }
        };
        Ok(EffectiveModel {
            a_hom,
            b_hom,
            sources,
            correctors: omega,
            memory,
        })
    }

    /// `A_hom = B_hom = I`, no sources.
    pub fn identity(cell: &CellMesh, params: &ModelParams) -> Self {
        let n = cell.mesh.n_vertices();
        EffectiveModel {
            a_hom: EffectiveTensor::identity("A"),
            b_hom: EffectiveTensor::identity("B"),
            sources: homogenized_sources(cell, [0.0; 2], &BoundarySource::zero(params), params),
            correctors: CorrectorSet {
                omega: [vec![0.0; n], vec![0.0; n]],
                label: "A".into(),
                residual: 0.0,
                mesh_id: cell.mesh.fingerprint(),
            },
            memory: None,
        }
    }

    /// Both tensors as `name,i,j,value` CSV rows.
    pub fn tensor_csv(&self) -> String {
        let mut s = String::from("tensor,i,j,value\n");
        for t in [&self.a_hom, &self.b_hom] {
            for i in 0..2 {
                for j in 0..2 {
                    s.push_str(&format!("{},{},{},{:.16e}\n", t.label, i + 1, j + 1, t.entries[i][j]));
                }
            }
        }
        s
    }
}
