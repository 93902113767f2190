use crate::mesh::TriMesh;
use crate::{Error, Result};

/// Barycentric slack accepted on triangle edges.
const BARY_TOL: f64 = 1e-10;

/// Bucket grid for point location in a triangulation.
#[derive(Debug, Clone)]
pub struct PointLocator<'m> {
    mesh: &'m TriMesh,
    lo: [f64; 2],
    size: [f64; 2],
    cells: usize,
    buckets: Vec<Vec<usize>>,
}

impl<'m> PointLocator<'m> {
    pub fn new(mesh: &'m TriMesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for v in &mesh.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let cells = ((mesh.n_triangles() as f64).sqrt().ceil() as usize).max(1);
        let size = [(hi[0] - lo[0]).max(1e-300), (hi[1] - lo[1]).max(1e-300)];
        let mut loc = PointLocator {
            mesh,
            lo,
            size,
            cells,
            buckets: vec![Vec::new(); cells * cells],
        };
        for (t, tri) in mesh.triangles.iter().enumerate() {
            let mut a = [usize::MAX; 2];
            let mut b = [0usize; 2];
            for &i in tri {
                let c = loc.bucket_of(mesh.vertices[i]);
                for k in 0..2 {
                    a[k] = a[k].min(c[k]);
                    b[k] = b[k].max(c[k]);
                }
            }
            for j in a[1]..=b[1] {
                for i in a[0]..=b[0] {
                    loc.buckets[j * cells + i].push(t);
                }
            }
        }
        loc
    }

    fn bucket_of(&self, p: [f64; 2]) -> [usize; 2] {
        let mut c = [0; 2];
        for k in 0..2 {
            let s = ((p[k] - self.lo[k]) / self.size[k] * self.cells as f64).floor();
            c[k] = s.clamp(0.0, (self.cells - 1) as f64) as usize;
        }
        c
    }

    pub fn barycentric(&self, t: usize, p: [f64; 2]) -> [f64; 3] {
        let [a, b, c] = self.mesh.triangles[t].map(|i| self.mesh.vertices[i]);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        [1.0 - l1 - l2, l1, l2]
    }

    /// Triangle containing `p` and its barycentric coordinates. Among
    /// several candidates (points on edges) the lowest triangle index wins.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let c = self.bucket_of(p);
        let mut best: Option<(usize, [f64; 3])> = None;
        for &t in &self.buckets[c[1] * self.cells + c[0]] {
            let l = self.barycentric(t, p);
            if l.iter().all(|&x| x >= -BARY_TOL) && best.is_none_or(|(b, _)| t < b) {
                best = Some((t, l));
            }
        }
        best
    }

    /// P1 interpolation of nodal `values` at `p`.
    pub fn interpolate(&self, values: &[f64], p: [f64; 2]) -> Result<f64> {
        let (t, l) = self.locate(p).ok_or(Error::Interpolation(p[0], p[1]))?;
        let tri = self.mesh.triangles[t];
        Ok(l[0] * values[tri[0]] + l[1] * values[tri[1]] + l[2] * values[tri[2]])
    }

    /// Interpolates `values` at every vertex of `target`.
    pub fn transfer(&self, values: &[f64], target: &TriMesh) -> Result<Vec<f64>> {
        if values.len() != self.mesh.n_vertices() {
            return Err(Error::Dimension {
                expected: self.mesh.n_vertices(),
                got: values.len(),
            });
        }
        target.vertices.iter().map(|&p| self.interpolate(values, p)).collect()
    }
}
