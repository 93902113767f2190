use std::io::Write;
use std::sync::Arc;

use crate::fem::FemSpace;
use crate::{Error, Result};

type Table = Vec<Vec<[[f64; 2]; 2]>>;

/// `K_hom` per macro node: `nodes[i][m][l]` is the kernel at lag `t_l` for
/// the shift `s = t_m`.
#[derive(Debug, Clone)]
pub struct MacroKernel {
    pub steps: usize,
    pub h: f64,
    pub nodes: Vec<Arc<Table>>,
}

impl MacroKernel {
    /// The same matrix at every node, shift and lag.
    pub fn constant(n_nodes: usize, steps: usize, h: f64, k: [[f64; 2]; 2]) -> Self {
        let table: Table = (0..=steps).map(|m| vec![k; steps - m + 1]).collect();
        let shared = Arc::new(table);
        MacroKernel {
            steps,
            h,
            nodes: vec![shared; n_nodes],
        }
    }

    pub fn sup_norm(&self) -> f64 {
        self.nodes
            .iter()
            .flat_map(|t| t.iter().flatten().flatten().flatten())
            .fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `node,t,K11,K12,K21,K22` rows of the kernel at shift 0 for every node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "node,t,K11,K12,K21,K22")?;
        for (i, table) in self.nodes.iter().enumerate() {
            for (l, k) in table[0].iter().enumerate() {
                writeln!(
                    w,
                    "{i},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                    l as f64 * self.h,
                    k[0][0],
                    k[0][1],
                    k[1][0],
                    k[1][1]
                )?;
            }
        }
        Ok(())
    }

    /// Vertex average over a triangle.
    fn on_triangle(&self, tri: &[usize; 3], shift: usize, lag: usize) -> [[f64; 2]; 2] {
        let mut k = [[0.0; 2]; 2];
        for &v in tri {
            let kv = self.nodes[v][shift][lag];
            for i in 0..2 {
                for j in 0..2 {
                    k[i][j] += kv[i][j] / 3.0;
                }
            }
        }
        k
    }
}

/// Per-triangle flux `∫_0^{t_j} K(t_j − s) ∂_s∇u ds` for the history
/// `levels = [u^0, …, u^j]`: on each interval `∂_s∇u` is the backward
/// difference and the kernel is averaged over the two interval ends.
pub fn convolution_flux(space: &FemSpace, kernel: &MacroKernel, levels: &[&[f64]]) -> Result<Vec<[f64; 2]>> {
    let mesh = space.mesh;
    let j = levels.len().saturating_sub(1);
    if j > kernel.steps {
        return Err(Error::GridMismatch(format!(
            "history has {j} steps, kernel only {}",
            kernel.steps
        )));
    }
    if kernel.nodes.len() != space.dim() {
        return Err(Error::Dimension {
            expected: space.dim(),
            got: kernel.nodes.len(),
        });
    }
    if let Some(l) = levels.iter().find(|l| l.len() != space.dim()) {
        return Err(Error::Dimension {
            expected: space.dim(),
            got: l.len(),
        });
    }
    let mut flux = vec![[0.0; 2]; mesh.n_triangles()];
    for (t, tri) in mesh.triangles.iter().enumerate() {
        for m in 1..=j {
            let a = space.field_gradient(t, levels[m]);
            let b = space.field_gradient(t, levels[m - 1]);
            let du = [a[0] - b[0], a[1] - b[1]];
            if du == [0.0, 0.0] {
                continue;
            }
            let k1 = kernel.on_triangle(tri, m, j - m);
            let k0 = kernel.on_triangle(tri, m - 1, j - m + 1);
            for i in 0..2 {
                for c in 0..2 {
                    flux[t][i] += 0.5 * (k1[i][c] + k0[i][c]) * du[c];
                }
            }
        }
    }
    Ok(flux)
}

/// Load `⟨∫_0^{t_j} K(t_j − s) ∂_s∇u ds, ∇φ_i⟩` for the last level of `history`.
pub fn convolution_term(space: &FemSpace, kernel: &MacroKernel, history: &[Vec<f64>]) -> Result<Vec<f64>> {
    let levels: Vec<&[f64]> = history.iter().map(|v| v.as_slice()).collect();
    space.flux_load(&convolution_flux(space, kernel, &levels)?)
}
