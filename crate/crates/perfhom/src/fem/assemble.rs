use super::{Pattern, SparseMatrix};
use crate::mesh::{Tag, TriMesh};
use crate::{Error, Result};

/// Barycentric coordinates of the 3-point Gauss rule (weights `|T|/3`).
pub const GAUSS3: [[f64; 3]; 3] = [
    [2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0],
    [1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0],
    [1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0],
];

/// Coefficient of a bilinear form.
#[derive(Debug, Clone, Copy)]
pub enum Weight<'a> {
    Constant(f64),
    /// One value per triangle.
    PerTriangle(&'a [f64]),
    /// P1 nodal field.
    PerVertex(&'a [f64]),
    /// Values at the three [`GAUSS3`] points of every triangle.
    Quadrature(&'a [[f64; 3]]),
}

impl Weight<'_> {
    fn check(&self, mesh: &TriMesh) -> Result<()> {
        let (expected, got) = match self {
            Weight::Constant(_) => return Ok(()),
            Weight::PerTriangle(w) => (mesh.n_triangles(), w.len()),
            Weight::PerVertex(w) => (mesh.n_vertices(), w.len()),
            Weight::Quadrature(w) => (mesh.n_triangles(), w.len()),
        };
        if expected != got {
            return Err(Error::Dimension { expected, got });
        }
        Ok(())
    }

    /// Value used by the midpoint rule on triangle `t`.
    fn midpoint(&self, mesh: &TriMesh, t: usize) -> f64 {
        match self {
            Weight::Constant(c) => *c,
            Weight::PerTriangle(w) => w[t],
            Weight::PerVertex(w) => {
                let [a, b, c] = mesh.triangles[t];
                (w[a] + w[b] + w[c]) / 3.0
            }
            Weight::Quadrature(w) => (w[t][0] + w[t][1] + w[t][2]) / 3.0,
        }
    }
}

/// P1 assembly on one mesh with a cached sparsity pattern and gradients.
#[derive(Debug, Clone)]
pub struct FemSpace<'m> {
    pub mesh: &'m TriMesh,
    pub pattern: Pattern,
    grads: Vec<[[f64; 2]; 3]>,
}

impl<'m> FemSpace<'m> {
    pub fn new(mesh: &'m TriMesh) -> Self {
        let grads = (0..mesh.n_triangles()).map(|t| mesh.gradients(t)).collect();
        FemSpace {
            mesh,
            pattern: Pattern::new(mesh),
            grads,
        }
    }

    pub fn dim(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn grads(&self, t: usize) -> &[[f64; 2]; 3] {
        &self.grads[t]
    }

    /// Constant gradient of a P1 field on triangle `t`.
    pub fn field_gradient(&self, t: usize, v: &[f64]) -> [f64; 2] {
        let g = &self.grads[t];
        let tri = self.mesh.triangles[t];
        let mut out = [0.0; 2];
        for k in 0..3 {
            out[0] += v[tri[k]] * g[k][0];
            out[1] += v[tri[k]] * g[k][1];
        }
        out
    }

    /// Values of a P1 field at the Gauss points of every triangle.
    pub fn at_quadrature(&self, v: &[f64]) -> Vec<[f64; 3]> {
        self.mesh
            .triangles
            .iter()
            .map(|t| {
                GAUSS3.map(|l| l[0] * v[t[0]] + l[1] * v[t[1]] + l[2] * v[t[2]])
            })
            .collect()
    }

    /// Values of a P1 field at triangle centroids.
    pub fn at_centroids(&self, v: &[f64]) -> Vec<f64> {
        self.mesh
            .triangles
            .iter()
            .map(|t| (v[t[0]] + v[t[1]] + v[t[2]]) / 3.0)
            .collect()
    }

    /// Weighted P1 mass matrix `∫ w φ_i φ_j`.
    ///
    /// Constant, per-triangle and nodal weights are integrated exactly;
    /// quadrature-point weights use the 3-point Gauss rule.
    pub fn mass(&self, weight: Weight) -> Result<SparseMatrix> {
        weight.check(self.mesh)?;
        let mut m = self.pattern.zeros();
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let area = self.mesh.areas[t];
            let local = match weight {
                Weight::Constant(_) | Weight::PerTriangle(_) => {
                    let c = weight.midpoint(self.mesh, t) * area / 12.0;
                    [[2.0 * c, c, c], [c, 2.0 * c, c], [c, c, 2.0 * c]]
                }
                Weight::PerVertex(w) => {
                    let wk = tri.map(|i| w[i]);
                    let mut l = [[0.0; 3]; 3];
                    for a in 0..3 {
                        for b in 0..3 {
                            let mut s = 0.0;
                            for (k, &wv) in wk.iter().enumerate() {
                                let coincide = (k == a) as u8 + (k == b) as u8 + (a == b) as u8;
                                s += wv
                                    * match coincide {
                                        3 => 1.0 / 10.0,
                                        1 => 1.0 / 30.0,
                                        _ => 1.0 / 60.0,
                                    };
                            }
                            l[a][b] = area * s;
                        }
                    }
                    l
                }
                Weight::Quadrature(w) => {
                    let mut l = [[0.0; 3]; 3];
                    for (q, lam) in GAUSS3.iter().enumerate() {
                        let c = w[t][q] * area / 3.0;
                        for a in 0..3 {
                            for b in 0..3 {
                                l[a][b] += c * lam[a] * lam[b];
                            }
                        }
                    }
                    l
                }
            };
            let slots = self.pattern.tri_slots(t);
            for a in 0..3 {
                for b in 0..3 {
                    m.values[slots[3 * a + b]] += local[a][b];
                }
            }
        }
        Ok(m)
    }

    /// P1 stiffness `∫ c ∇φ_j·∇φ_i` with the coefficient taken at the
    /// triangle midpoint.
    pub fn stiffness(&self, coeff: Weight) -> Result<SparseMatrix> {
        self.stiffness_tensor(coeff, [[1.0, 0.0], [0.0, 1.0]])
    }

    /// Stiffness `∫ c T∇φ_j·∇φ_i` with a constant symmetric 2×2 tensor `T`.
    pub fn stiffness_tensor(&self, coeff: Weight, tensor: [[f64; 2]; 2]) -> Result<SparseMatrix> {
        coeff.check(self.mesh)?;
        let mut m = self.pattern.zeros();
        for t in 0..self.mesh.n_triangles() {
            let c = coeff.midpoint(self.mesh, t) * self.mesh.areas[t];
            if c == 0.0 {
                continue;
            }
            let g = &self.grads[t];
            let slots = self.pattern.tri_slots(t);
            for a in 0..3 {
                let tg = [
                    tensor[0][0] * g[a][0] + tensor[0][1] * g[a][1],
                    tensor[1][0] * g[a][0] + tensor[1][1] * g[a][1],
                ];
                for b in 0..3 {
                    m.values[slots[3 * b + a]] += c * (tg[0] * g[b][0] + tg[1] * g[b][1]);
                }
            }
        }
        Ok(m)
    }

    /// 1-D P1 mass on the edges carrying `tag`, multiplied by `scale`.
    pub fn boundary_mass(&self, tag: Tag, weight: Weight, scale: f64) -> Result<SparseMatrix> {
        let edges = self.mesh.edges(tag);
        let w_edge = |e: usize, k: usize| -> f64 {
            match weight {
                Weight::Constant(c) => c,
                Weight::PerVertex(w) => w[edges[e][k]],
                _ => unreachable!("checked below"),
            }
        };
        match weight {
            Weight::Constant(_) => {}
            Weight::PerVertex(w) if w.len() == self.dim() => {}
            Weight::PerVertex(w) => {
                return Err(Error::Dimension {
                    expected: self.dim(),
                    got: w.len(),
                })
            }
            _ => return Err(Error::Mesh("boundary weights must be constant or nodal".into())),
        }
        let mut m = self.pattern.zeros();
        for (k, e) in edges.iter().enumerate() {
            let l = self.mesh.edge_length(*e) * scale;
            let (wa, wb) = (w_edge(k, 0), w_edge(k, 1));
            let local = [
                [l * (wa / 4.0 + wb / 12.0), l * (wa + wb) / 12.0],
                [l * (wa + wb) / 12.0, l * (wa / 12.0 + wb / 4.0)],
            ];
            for a in 0..2 {
                for b in 0..2 {
                    let s = m.slot(e[a], e[b]).expect("boundary edge belongs to a triangle");
                    m.values[s] += local[a][b];
                }
            }
        }
        Ok(m)
    }

    /// Load vector `∫ F·∇φ_i` for a per-triangle constant vector field.
    pub fn flux_load(&self, flux: &[[f64; 2]]) -> Result<Vec<f64>> {
        if flux.len() != self.mesh.n_triangles() {
            return Err(Error::Dimension {
                expected: self.mesh.n_triangles(),
                got: flux.len(),
            });
        }
        let mut load = vec![0.0; self.dim()];
        for (t, tri) in self.mesh.triangles.iter().enumerate() {
            let g = &self.grads[t];
            let a = self.mesh.areas[t];
            for k in 0..3 {
                load[tri[k]] += a * (flux[t][0] * g[k][0] + flux[t][1] * g[k][1]);
            }
        }
        Ok(load)
    }

    /// `∫ v` for a P1 field.
    pub fn integral(&self, v: &[f64]) -> f64 {
        self.mesh
            .triangles
            .iter()
            .zip(&self.mesh.areas)
            .map(|(t, a)| a * (v[t[0]] + v[t[1]] + v[t[2]]) / 3.0)
            .sum()
    }
}

/// Mass matrix on a mesh (one-off convenience wrapper).
pub fn assemble_mass(mesh: &TriMesh, weight: Weight) -> Result<SparseMatrix> {
    FemSpace::new(mesh).mass(weight)
}

/// Stiffness matrix on a mesh (one-off convenience wrapper).
pub fn assemble_stiffness(mesh: &TriMesh, coeff: Weight) -> Result<SparseMatrix> {
    FemSpace::new(mesh).stiffness(coeff)
}

/// Boundary mass on the edges with the given tag name.
pub fn assemble_boundary_mass(mesh: &TriMesh, tag: &str, weight: Weight, scale: f64) -> Result<SparseMatrix> {
    FemSpace::new(mesh).boundary_mass(Tag::parse(tag)?, weight, scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_solid_mesh;

    fn reference() -> TriMesh {
        TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            Vec::new(),
            vec![[0, 1]],
        )
    }

    fn close(a: &[Vec<f64>], b: &[[f64; 3]; 3], tol: f64) -> bool {
        (0..3).all(|i| (0..3).all(|j| (a[i][j] - b[i][j]).abs() <= tol))
    }

    #[test]
    fn reference_mass() {
        let m = assemble_mass(&reference(), Weight::Constant(1.0)).unwrap().to_dense();
        let e = 1.0 / 24.0;
        assert!(close(&m, &[[2.0 * e, e, e], [e, 2.0 * e, e], [e, e, 2.0 * e]], 1e-15));
    }

    #[test]
    fn zero_weight_gives_zero() {
        let m = assemble_mass(&reference(), Weight::Constant(0.0)).unwrap();
        assert!(m.values.iter().all(|&v| v == 0.0));
        let b = assemble_boundary_mass(&reference(), "outer", Weight::Constant(0.0), 1.0).unwrap();
        assert!(b.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reference_stiffness_and_linearity() {
        let k1 = assemble_stiffness(&reference(), Weight::Constant(1.0)).unwrap();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        assert!(close(&k1.to_dense(), &expected, 1e-15));
        let k2 = assemble_stiffness(&reference(), Weight::Constant(2.0)).unwrap();
        for (a, b) in k1.values.iter().zip(&k2.values) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn constants_are_in_the_stiffness_kernel() {
        let mesh = build_solid_mesh(2).unwrap();
        let k = assemble_stiffness(&mesh.mesh, Weight::Constant(1.0)).unwrap();
        let r = k.mul(&vec![3.0; mesh.mesh.n_vertices()]);
        assert!(r.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn unit_edge_boundary_mass() {
        let b = assemble_boundary_mass(&reference(), "outer", Weight::Constant(1.0), 1.0).unwrap();
        assert!((b.get(0, 0) - 2.0 / 6.0).abs() < 1e-15);
        assert!((b.get(0, 1) - 1.0 / 6.0).abs() < 1e-15);
        assert!(matches!(
            assemble_boundary_mass(&reference(), "wall", Weight::Constant(1.0), 1.0),
            Err(Error::Tag(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let w = vec![1.0; 2];
        assert!(matches!(
            assemble_mass(&reference(), Weight::PerVertex(&w)),
            Err(Error::Dimension { .. })
        ));
    }
}
