use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::{signed_area, CellGeometry, CellMesh, PeriodicPair, TriMesh};
use crate::{Error, Result};

/// Largest number of pieces a polygon edge is split into on Γ.
const MAX_SPLIT: usize = 8;

/// Builds the triangulation of `Y*` for one cell.
///
/// Grid squares within half a grid width of the hole are removed and the
/// ring between the remaining staircase boundary and the hole polygon is
/// triangulated by merging both loops by edge-midpoint angle. Γ carries the
/// polygon corners and, on fine grids, extra collinear points.
pub fn build_cell_mesh(geom: &CellGeometry) -> Result<CellMesh> {
    geom.check()?;
    let n = geom.divisions;
    let h = 1.0 / n as f64;

    let removed = removed_squares(geom);
    for j in 0..n {
        for i in 0..n {
            if removed[j * n + i] && (i == 0 || j == 0 || i == n - 1 || j == n - 1) {
                return Err(Error::Mesh(format!(
                    "{n} divisions are too coarse to resolve a hole of radius {}",
                    geom.hole_radius
                )));
            }
        }
    }

    // Grid vertices used by kept squares, numbered row by row.
    let mut used = vec![false; (n + 1) * (n + 1)];
    for j in 0..n {
        for i in 0..n {
            if !removed[j * n + i] {
                for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                    used[(j + dj) * (n + 1) + i + di] = true;
                }
            }
        }
    }
    let mut grid_to_vertex = vec![usize::MAX; (n + 1) * (n + 1)];
    let mut vertices = Vec::new();
    let mut grid_index = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            if used[j * (n + 1) + i] {
                grid_to_vertex[j * (n + 1) + i] = vertices.len();
                vertices.push([i as f64 / n as f64, j as f64 / n as f64]);
                grid_index.push(Some([i, j]));
            }
        }
    }
    let gv = |i: usize, j: usize| grid_to_vertex[j * (n + 1) + i];

    let mut triangles = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if removed[j * n + i] {
                continue;
            }
            let (a, b, c, d) = (gv(i, j), gv(i + 1, j), gv(i + 1, j + 1), gv(i, j + 1));
            if (i + j) % 2 == 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }

    let mut gamma_edges = Vec::new();
    let mut hole_loop = Vec::new();
    if geom.has_hole() {
        let outer = staircase_loop(&removed, n)?
            .into_iter()
            .map(|(i, j)| gv(i, j))
            .collect::<Vec<_>>();
        // Polygon edges much longer than the grid width give inverted ring
        // triangles; split them into collinear pieces until the merge works.
        let first = vertices.len();
        let mut split = 1;
        let ring = loop {
            vertices.truncate(first);
            grid_index.truncate(first);
            hole_loop.clear();
            for k in 0..geom.hole_segments {
                let (a, b) = (geom.polygon_vertex(k), geom.polygon_vertex(k + 1));
                for m in 0..split {
                    let t = m as f64 / split as f64;
                    vertices.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                    grid_index.push(None);
                    hole_loop.push(vertices.len() - 1);
                }
            }
            match merge_loops(&vertices, geom.hole_center, &hole_loop, &outer) {
                Ok(r) => break r,
                Err(e) if split >= MAX_SPLIT => return Err(e),
                Err(_) => split += 1,
            }
        };
        triangles.extend(ring);
        for k in 0..hole_loop.len() {
            gamma_edges.push([hole_loop[k], hole_loop[(k + 1) % hole_loop.len()]]);
        }
    }

    let mesh = TriMesh::new(vertices, triangles, gamma_edges, Vec::new());
    let min_area = 1e-9 * h * h;
    if let Some((t, a)) = mesh
        .areas
        .iter()
        .enumerate()
        .find(|(_, &a)| a <= min_area)
    {
        return Err(Error::Mesh(format!("triangle {t} is degenerate (area {a:e})")));
    }

    let mut periodic_pairs = Vec::new();
    for k in 0..=n {
        // x = 1 onto x = 0, then y = 1 onto y = 0.
        periodic_pairs.push(PeriodicPair {
            slave: gv(n, k),
            master: gv(0, k),
            shift: [1.0, 0.0],
        });
    }
    for k in 0..=n {
        periodic_pairs.push(PeriodicPair {
            slave: gv(k, n),
            master: gv(k, 0),
            shift: [0.0, 1.0],
        });
    }

    Ok(CellMesh {
        geometry: *geom,
        mesh,
        periodic_pairs,
        grid_index,
        hole_loop,
    })
}

fn removed_squares(geom: &CellGeometry) -> Vec<bool> {
    let n = geom.divisions;
    let h = 1.0 / n as f64;
    let mut removed = vec![false; n * n];
    if !geom.has_hole() {
        return removed;
    }
    let reach = geom.hole_radius + 0.5 * h;
    let [cx, cy] = geom.hole_center;
    for j in 0..n {
        for i in 0..n {
            let (x0, x1) = (i as f64 * h, (i + 1) as f64 * h);
            let (y0, y1) = (j as f64 * h, (j + 1) as f64 * h);
            let dx = (x0 - cx).max(0.0).max(cx - x1);
            let dy = (y0 - cy).max(0.0).max(cy - y1);
            removed[j * n + i] = dx.hypot(dy) < reach;
        }
    }
    removed
}

/// Counter-clockwise boundary loop (grid coordinates) of the removed squares.
fn staircase_loop(removed: &[bool], n: usize) -> Result<Vec<(usize, usize)>> {
    let is_removed = |i: isize, j: isize| {
        i >= 0 && j >= 0 && (i as usize) < n && (j as usize) < n && removed[j as usize * n + i as usize]
    };
    let mut next: BTreeMap<(usize, usize), (usize, usize)> = BTreeMap::new();
    let mut add = |from: (usize, usize), to: (usize, usize)| -> Result<()> {
        if next.insert(from, to).is_some() {
            return Err(Error::Mesh("removed region pinches at a grid point".into()));
        }
        Ok(())
    };
    for j in 0..n {
        for i in 0..n {
            if !removed[j * n + i] {
                continue;
            }
            let (ii, jj) = (i as isize, j as isize);
            if !is_removed(ii, jj - 1) {
                add((i, j), (i + 1, j))?;
            }
            if !is_removed(ii + 1, jj) {
                add((i + 1, j), (i + 1, j + 1))?;
            }
            if !is_removed(ii, jj + 1) {
                add((i + 1, j + 1), (i, j + 1))?;
            }
            if !is_removed(ii - 1, jj) {
                add((i, j + 1), (i, j))?;
            }
        }
    }
    let Some((&start, _)) = next.iter().next() else {
        return Err(Error::Mesh("hole does not remove any grid square".into()));
    };
    let mut lp = vec![start];
    let mut cur = next[&start];
    while cur != start {
        lp.push(cur);
        cur = *next
            .get(&cur)
            .ok_or_else(|| Error::Mesh("open staircase boundary".into()))?;
        if lp.len() > next.len() {
            return Err(Error::Mesh("staircase boundary does not close".into()));
        }
    }
    if lp.len() != next.len() {
        return Err(Error::Mesh("removed region is not simply connected".into()));
    }
    Ok(lp)
}

/// Edge midpoint angles of a closed loop, unwrapped and starting from the
/// edge with the smallest angle in `[0, 2π)`. Returns the rotated loop and
/// the angles of its edges `(lp[k], lp[k+1])`.
fn loop_angles(vertices: &[[f64; 2]], center: [f64; 2], lp: &[usize]) -> Result<(Vec<usize>, Vec<f64>)> {
    let m = lp.len();
    let raw: Vec<f64> = (0..m)
        .map(|k| {
            let a = vertices[lp[k]];
            let b = vertices[lp[(k + 1) % m]];
            let mid = [0.5 * (a[0] + b[0]) - center[0], 0.5 * (a[1] + b[1]) - center[1]];
            mid[1].atan2(mid[0]).rem_euclid(2.0 * PI)
        })
        .collect();
    let start = (0..m)
        .min_by(|&a, &b| raw[a].total_cmp(&raw[b]))
        .expect("loop is not empty");
    let rotated: Vec<usize> = (0..m).map(|k| lp[(start + k) % m]).collect();
    let mut angles = Vec::with_capacity(m);
    angles.push(raw[start]);
    for k in 1..m {
        let prev = angles[k - 1];
        let mut step = raw[(start + k) % m] - raw[(start + k - 1) % m];
        if step <= -PI {
            step += 2.0 * PI;
        } else if step > PI {
            step -= 2.0 * PI;
        }
        if step <= 0.0 {
            return Err(Error::Mesh("hole ring is not angularly monotone".into()));
        }
        angles.push(prev + step);
    }
    Ok((rotated, angles))
}

/// Triangulates the ring between two counter-clockwise loops around `center`.
///
/// Edges of both loops are visited in order of midpoint angle; every edge is
/// joined to the current vertex of the other loop. The rule only depends on
/// the angular order, so it commutes with the symmetries of the geometry.
fn merge_loops(
    vertices: &[[f64; 2]],
    center: [f64; 2],
    inner: &[usize],
    outer: &[usize],
) -> Result<Vec<[usize; 3]>> {
    let (inner, ai) = loop_angles(vertices, center, inner)?;
    let (outer, ao) = loop_angles(vertices, center, outer)?;
    let (ni, no) = (inner.len(), outer.len());
    let mut tris = Vec::with_capacity(ni + no);
    let (mut ki, mut ko) = (0, 0);
    while ki < ni || ko < no {
        let take_inner = ko == no || (ki < ni && ai[ki] < ao[ko]);
        if take_inner {
            let (a, b) = (inner[ki], inner[(ki + 1) % ni]);
            tris.push([a, outer[ko % no], b]);
            ki += 1;
        } else {
            let (p, q) = (outer[ko], outer[(ko + 1) % no]);
            tris.push([p, q, inner[ki % ni]]);
            ko += 1;
        }
    }
    for t in &tris {
        if signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]) <= 0.0 {
            return Err(Error::Mesh(format!("ring triangle {t:?} is inverted")));
        }
    }
    Ok(tris)
}
