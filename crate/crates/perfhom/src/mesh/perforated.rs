use std::collections::HashMap;

use super::{build_cell_mesh, CellGeometry, HoleFill, PerforatedMesh, TriMesh};
use crate::{Error, Result};

/// Tiles the unit square with `1/ε × 1/ε` scaled copies of the cell mesh.
///
/// Grid vertices on shared cell faces are merged, so the result is
/// conforming. The hole interiors are triangulated as a fan around each hole
/// center and kept as a companion for [`crate::fem::extend_into_holes`].
pub fn build_perforated_mesh(geom: &CellGeometry, epsilon: f64) -> Result<PerforatedMesh> {
    let cells = cells_per_side(epsilon)?;
    let cell = build_cell_mesh(geom)?;
    let n = geom.divisions;
    let big_n = cells * n;
    let mf = cells as f64;

    let mut grid_map: HashMap<[usize; 2], usize> = HashMap::new();
    let mut vertices: Vec<[f64; 2]> = Vec::new();
    let mut triangles = Vec::with_capacity(cells * cells * cell.mesh.n_triangles());
    let mut cell_index = Vec::with_capacity(triangles.capacity());
    let mut gamma_edges = Vec::new();
    let mut holes = Vec::new();
    let mut fill = HoleFill {
        vertices: Vec::new(),
        triangles: Vec::new(),
    };
    let mut fill_centers = Vec::new();

    for cy in 0..cells {
        for cx in 0..cells {
            let local: Vec<usize> = cell
                .grid_index
                .iter()
                .zip(&cell.mesh.vertices)
                .map(|(gi, y)| match gi {
                    Some([i, j]) => {
                        let key = [cx * n + i, cy * n + j];
                        *grid_map.entry(key).or_insert_with(|| {
                            vertices.push([
                                key[0] as f64 / big_n as f64,
                                key[1] as f64 / big_n as f64,
                            ]);
                            vertices.len() - 1
                        })
                    }
                    None => {
                        vertices.push([(cx as f64 + y[0]) / mf, (cy as f64 + y[1]) / mf]);
                        vertices.len() - 1
                    }
                })
                .collect();
            for t in &cell.mesh.triangles {
                triangles.push(t.map(|i| local[i]));
                cell_index.push([cx, cy]);
            }
            for e in &cell.mesh.gamma_edges {
                gamma_edges.push(e.map(|i| local[i]));
            }
            if !cell.hole_loop.is_empty() {
                let lp: Vec<usize> = cell.hole_loop.iter().map(|&i| local[i]).collect();
                let c = geom.hole_center;
                fill_centers.push((lp.clone(), [(cx as f64 + c[0]) / mf, (cy as f64 + c[1]) / mf]));
                holes.push(lp);
            }
        }
    }

    let nv = vertices.len();
    for (k, (lp, center)) in fill_centers.into_iter().enumerate() {
        fill.vertices.push(center);
        let c = nv + k;
        for m in 0..lp.len() {
            fill.triangles.push([lp[m], lp[(m + 1) % lp.len()], c]);
        }
    }

    let mut outer_edges = Vec::with_capacity(4 * big_n);
    let g = |i: usize, j: usize| grid_map[&[i, j]];
    for k in 0..big_n {
        outer_edges.push([g(k, 0), g(k + 1, 0)]);
    }
    for k in 0..big_n {
        outer_edges.push([g(big_n, k), g(big_n, k + 1)]);
    }
    for k in (0..big_n).rev() {
        outer_edges.push([g(k + 1, big_n), g(k, big_n)]);
    }
    for k in (0..big_n).rev() {
        outer_edges.push([g(0, k + 1), g(0, k)]);
    }

    Ok(PerforatedMesh {
        geometry: *geom,
        mesh: TriMesh::new(vertices, triangles, gamma_edges, outer_edges),
        epsilon,
        cells_per_side: cells,
        cell_index,
        holes,
        fill: Some(fill),
    })
}

/// Structured mesh of the solid unit square with `divisions` per side.
pub fn build_solid_mesh(divisions: usize) -> Result<PerforatedMesh> {
    build_perforated_mesh(&CellGeometry::solid(divisions), 1.0)
}

fn cells_per_side(epsilon: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::Geometry(format!("epsilon = {epsilon} must lie in (0, 1]")));
    }
    let m = (1.0 / epsilon).round();
    if (m * epsilon - 1.0).abs() > 1e-12 {
        return Err(Error::Geometry(format!("1/epsilon = {} is not an integer", 1.0 / epsilon)));
    }
    Ok(m as usize)
}
