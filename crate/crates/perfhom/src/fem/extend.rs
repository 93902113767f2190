use super::{pcg_masked, FemSpace, Weight, PCG_TOL};
use crate::mesh::{PerforatedMesh, TriMesh};
use crate::{Error, Result};

/// A field extended into the holes, living on [`PerforatedMesh::filled_mesh`].
#[derive(Debug, Clone)]
pub struct Extension {
    pub mesh: TriMesh,
    pub values: Vec<f64>,
    /// `‖∇ext‖_{L²(G)} / ‖∇v‖_{L²(G^ε)}`; `None` when the denominator vanishes.
    pub gradient_ratio: Option<f64>,
}

/// Discrete harmonic extension of `v` into every hole.
///
/// Values on `G^ε` are kept; the fill vertices solve the Laplace equation
/// on the fill triangles with the hole-boundary trace as Dirichlet data.
pub fn extend_into_holes(mesh: &PerforatedMesh, v: &[f64]) -> Result<Extension> {
    let n = mesh.mesh.n_vertices();
    if v.len() != n {
        return Err(Error::Dimension { expected: n, got: v.len() });
    }
    let filled = mesh.filled_mesh()?;
    let total = filled.n_vertices();
    let mut values = v.to_vec();
    values.resize(total, 0.0);

    let space = FemSpace::new(&filled);
    let on_fill: Vec<f64> = (0..filled.n_triangles())
        .map(|t| if t >= mesh.mesh.n_triangles() { 1.0 } else { 0.0 })
        .collect();
    if total > n {
        let k = space.stiffness(Weight::PerTriangle(&on_fill))?;
        let free: Vec<bool> = (0..total).map(|i| i >= n).collect();
        let rhs = vec![0.0; total];
        pcg_masked(&k, &rhs, &free, &mut values, PCG_TOL * 1e-2)?;
    }

    let full = space.stiffness(Weight::Constant(1.0))?.quad_form(&values);
    let inner = FemSpace::new(&mesh.mesh).stiffness(Weight::Constant(1.0))?.quad_form(v);
    let gradient_ratio = (inner > 0.0).then(|| (full / inner).max(0.0).sqrt());
    Ok(Extension {
        mesh: filled,
        values,
        gradient_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_perforated_mesh, CellGeometry};

    #[test]
    fn constants_and_linears_are_reproduced() {
        let m = build_perforated_mesh(&CellGeometry::default(), 0.5).unwrap();
        let c = vec![0.7; m.mesh.n_vertices()];
        let e = extend_into_holes(&m, &c).unwrap();
        assert!(e.values.iter().all(|x| (x - 0.7).abs() < 1e-12));

        let x: Vec<f64> = m.mesh.vertices.iter().map(|p| p[0]).collect();
        let e = extend_into_holes(&m, &x).unwrap();
        for (p, val) in e.mesh.vertices.iter().zip(&e.values) {
            assert!((p[0] - val).abs() < 1e-10);
        }
        assert!((e.gradient_ratio.unwrap() - 1.0 / m.mesh.total_area().sqrt()).abs() < 1e-9);
    }

    #[test]
    fn missing_fill_is_a_mesh_error() {
        let mut m = build_perforated_mesh(&CellGeometry::default(), 1.0).unwrap();
        m.fill = None;
        let v = vec![0.0; m.mesh.n_vertices()];
        assert!(matches!(extend_into_holes(&m, &v), Err(Error::Mesh(_))));
    }
}
