use std::io::{BufRead, Write};

use super::{Tag, TriMesh};
use crate::{Error, Result};

/// Writes the line-oriented `mesh2d` text format.
pub fn write_mesh<W: Write>(mesh: &TriMesh, mut w: W) -> Result<()> {
    let ne = mesh.gamma_edges.len() + mesh.outer_edges.len();
    writeln!(w, "mesh2d {} {} {}", mesh.n_vertices(), mesh.n_triangles(), ne)?;
    for v in &mesh.vertices {
        writeln!(w, "v {:.16e} {:.16e}", v[0], v[1])?;
    }
    for t in &mesh.triangles {
        writeln!(w, "t {} {} {}", t[0], t[1], t[2])?;
    }
    for tag in [Tag::Gamma, Tag::Outer] {
        for e in mesh.edges(tag) {
            writeln!(w, "e {} {} {}", e[0], e[1], tag.name())?;
        }
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("bad {what}")))
}

/// Reads a mesh written by [`write_mesh`].
pub fn read_mesh<R: BufRead>(r: R) -> Result<TriMesh> {
    let mut lines = r.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header = header?;
    let mut tok = header.split_whitespace();
    if tok.next() != Some("mesh2d") {
        return Err(parse_err(1, "expected `mesh2d` header"));
    }
    let nv: usize = field(tok.next(), 1, "vertex count")?;
    let nt: usize = field(tok.next(), 1, "triangle count")?;
    let ne: usize = field(tok.next(), 1, "edge count")?;

    let (mut vertices, mut triangles) = (Vec::with_capacity(nv), Vec::with_capacity(nt));
    let (mut gamma, mut outer) = (Vec::new(), Vec::new());
    for (k, line) in lines {
        let line = line?;
        let no = k + 1;
        let mut tok = line.split_whitespace();
        match tok.next() {
            None => continue,
            Some("v") => vertices.push([field(tok.next(), no, "x")?, field(tok.next(), no, "y")?]),
            Some("t") => {
                let t: [usize; 3] = [
                    field(tok.next(), no, "index")?,
                    field(tok.next(), no, "index")?,
                    field(tok.next(), no, "index")?,
                ];
                if t.iter().any(|&i| i >= nv) {
                    return Err(parse_err(no, "vertex index out of range"));
                }
                triangles.push(t);
            }
            Some("e") => {
                let e: [usize; 2] = [field(tok.next(), no, "index")?, field(tok.next(), no, "index")?];
                if e.iter().any(|&i| i >= nv) {
                    return Err(parse_err(no, "vertex index out of range"));
                }
                let tag = tok.next().ok_or_else(|| parse_err(no, "missing tag"))?;
                match Tag::parse(tag)? {
                    Tag::Gamma => gamma.push(e),
                    Tag::Outer => outer.push(e),
                }
            }
            Some(other) => return Err(parse_err(no, format!("unknown record `{other}`"))),
        }
    }
    if vertices.len() != nv || triangles.len() != nt || gamma.len() + outer.len() != ne {
        return Err(parse_err(1, "record counts do not match the header"));
    }
    Ok(TriMesh::new(vertices, triangles, gamma, outer))
}

/// Legacy VTK ASCII unstructured grid with optional point data.
pub fn write_vtk<W: Write>(mesh: &TriMesh, point_data: &[(&str, &[f64])], mut w: W) -> Result<()> {
    writeln!(w, "# vtk DataFile Version 3.0")?;
    writeln!(w, "perfhom mesh")?;
    writeln!(w, "ASCII")?;
    writeln!(w, "DATASET UNSTRUCTURED_GRID")?;
    writeln!(w, "POINTS {} double", mesh.n_vertices())?;
    for v in &mesh.vertices {
        writeln!(w, "{:.16e} {:.16e} 0", v[0], v[1])?;
    }
    writeln!(w, "CELLS {} {}", mesh.n_triangles(), 4 * mesh.n_triangles())?;
    for t in &mesh.triangles {
        writeln!(w, "3 {} {} {}", t[0], t[1], t[2])?;
    }
    writeln!(w, "CELL_TYPES {}", mesh.n_triangles())?;
    for _ in &mesh.triangles {
        writeln!(w, "5")?;
    }
    if !point_data.is_empty() {
        writeln!(w, "POINT_DATA {}", mesh.n_vertices())?;
        for (name, values) in point_data {
            if values.len() != mesh.n_vertices() {
                return Err(Error::Dimension {
                    expected: mesh.n_vertices(),
                    got: values.len(),
                });
            }
            writeln!(w, "SCALARS {name} double 1")?;
            writeln!(w, "LOOKUP_TABLE default")?;
            for x in *values {
                writeln!(w, "{x:.16e}")?;
            }
        }
    }
    Ok(())
}
