use std::io::{BufRead, Write};

use crate::mesh::TriMesh;
use crate::{Error, Result};

/// Per-vertex values tied to one mesh by its fingerprint.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField {
    pub values: Vec<f64>,
    pub mesh_id: u64,
}

impl NodalField {
    pub fn new(mesh: &TriMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_vertices() {
            return Err(Error::Dimension {
                expected: mesh.n_vertices(),
                got: values.len(),
            });
        }
        Ok(NodalField {
            values,
            mesh_id: mesh.fingerprint(),
        })
    }

    pub fn constant(mesh: &TriMesh, c: f64) -> Self {
        NodalField {
            values: vec![c; mesh.n_vertices()],
            mesh_id: mesh.fingerprint(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn lives_on(&self, mesh: &TriMesh) -> bool {
        self.mesh_id == mesh.fingerprint()
    }
}

/// Writes `field <n>` followed by one value per line.
pub fn write_field<W: Write>(values: &[f64], mut w: W) -> Result<()> {
    writeln!(w, "field {}", values.len())?;
    for v in values {
        writeln!(w, "{v:.16e}")?;
    }
    Ok(())
}

/// Reads a field written by [`write_field`].
pub fn read_field<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse {
        line: 1,
        message: "empty file".into(),
    })??;
    let n: usize = header
        .strip_prefix("field ")
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "expected `field <n>` header".into(),
        })?;
    let mut values = Vec::with_capacity(n);
    for (k, line) in lines.enumerate() {
        let line = line?;
        let s = line.trim();
        if s.is_empty() {
            continue;
        }
        values.push(s.parse().map_err(|_| Error::Parse {
            line: k + 2,
            message: format!("bad value `{s}`"),
        })?);
    }
    if values.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: values.len(),
        });
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let v = vec![0.1, -1.0 / 3.0, 1e-300, 7.0];
        let mut buf = Vec::new();
        write_field(&v, &mut buf).unwrap();
        assert_eq!(read_field(buf.as_slice()).unwrap(), v);
    }

    #[test]
    fn count_mismatch() {
        assert!(matches!(
            read_field("field 3\n1\n2\n".as_bytes()),
            Err(Error::Dimension { expected: 3, got: 2 })
        ));
    }
}
