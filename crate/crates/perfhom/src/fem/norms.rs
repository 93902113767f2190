use super::FemSpace;
use crate::mesh::Tag;
use crate::{Error, Result};

/// Norms of one P1 field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormReport {
    pub l2: f64,
    pub h1_semi: f64,
    /// `‖∇v‖_{L^p}`.
    pub lp_grad: f64,
    pub p: f64,
    /// `scale · ∫_Γ |v|²` (not square-rooted).
    pub boundary_l2_gamma: f64,
}

/// Computes the norms of `v`; `gamma_scale` is ε on perforated meshes and 1
/// on the cell.
///
/// The L² and H¹ parts are exact for P1 fields; the gradient is constant per
/// triangle so the L^p part is exact too.
pub fn compute_norms(space: &FemSpace, v: &[f64], p: f64, gamma_scale: f64) -> Result<NormReport> {
    if v.len() != space.dim() {
        return Err(Error::Dimension {
            expected: space.dim(),
            got: v.len(),
        });
    }
    if !(p > 1.0 && p <= 2.0) {
        return Err(Error::Domain(format!("exponent p = {p} is outside (1, 2]")));
    }
    let mesh = space.mesh;
    let mut l2 = 0.0;
    let mut h1 = 0.0;
    let mut lp = 0.0;
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let a = mesh.areas[t];
        let [x, y, z] = tri.map(|i| v[i]);
        l2 += a / 6.0 * (x * x + y * y + z * z + x * y + y * z + z * x);
        let g = space.field_gradient(t, v);
        let g2 = g[0] * g[0] + g[1] * g[1];
        h1 += a * g2;
        lp += a * g2.sqrt().powf(p);
    }
    let mut gamma = 0.0;
    for e in mesh.edges(Tag::Gamma) {
        let (x, y) = (v[e[0]], v[e[1]]);
        gamma += mesh.edge_length(*e) / 3.0 * (x * x + x * y + y * y);
    }
    Ok(NormReport {
        l2: l2.max(0.0).sqrt(),
        h1_semi: h1.sqrt(),
        lp_grad: lp.powf(1.0 / p),
        p,
        boundary_l2_gamma: gamma_scale * gamma,
    })
}

/// `∫ w |v|²` with a nodal weight, integrated exactly (cubic integrand).
pub fn weighted_l2_squared(space: &FemSpace, w: &[f64], v: &[f64]) -> f64 {
    let mut s = 0.0;
    for (t, tri) in space.mesh.triangles.iter().enumerate() {
        let wk = tri.map(|i| w[i]);
        let vk = tri.map(|i| v[i]);
        let mut local = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                for (k, &wv) in wk.iter().enumerate() {
                    let c = (k == a) as u8 + (k == b) as u8 + (a == b) as u8;
                    let f = match c {
                        3 => 1.0 / 10.0,
                        1 => 1.0 / 30.0,
                        _ => 1.0 / 60.0,
                    };
                    local += wv * vk[a] * vk[b] * f;
                }
            }
        }
        s += space.mesh.areas[t] * local;
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_solid_mesh;

    #[test]
    fn constant_and_linear_fields() {
        let m = build_solid_mesh(4).unwrap();
        let space = FemSpace::new(&m.mesh);
        let c = vec![-2.5; space.dim()];
        let r = compute_norms(&space, &c, 2.0, 1.0).unwrap();
        assert!((r.l2 - 2.5).abs() < 1e-12 && r.h1_semi.abs() < 1e-12);

        let x: Vec<f64> = m.mesh.vertices.iter().map(|p| p[0]).collect();
        let r = compute_norms(&space, &x, 1.5, 1.0).unwrap();
        assert!((r.h1_semi - 1.0).abs() < 1e-12);
        assert!((r.lp_grad - 1.0).abs() < 1e-12);
        assert!((r.l2 - (1.0f64 / 3.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn exponent_out_of_range() {
        let m = build_solid_mesh(2).unwrap();
        let space = FemSpace::new(&m.mesh);
        let v = vec![0.0; space.dim()];
        assert!(compute_norms(&space, &v, 2.5, 1.0).is_err());
    }
}
