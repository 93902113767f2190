use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{StepDiagnostics, Trajectory};
use crate::fem::{read_field, write_field};
use crate::{Error, Result};

fn state_name(j: usize) -> String {
    format!("state_{j:05}.field")
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|source| Error::Read {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes one field file per time level and a `manifest.txt` with one
/// `step <j> <t_j> <picard_iters> <violation> <min_gamma_value>` line per step.
pub fn write_trajectory(dir: &Path, traj: &Trajectory) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (j, s) in traj.states.iter().enumerate() {
        let mut w = create(&dir.join(state_name(j)))?;
        write_field(s, &mut w)?;
        w.flush()?;
    }
    let mut m = create(&dir.join("manifest.txt"))?;
    writeln!(m, "# mesh {:016x}", traj.mesh_id)?;
    for (j, t) in traj.times.iter().enumerate() {
        let d = if j == 0 {
            StepDiagnostics {
                min_constrained: f64::NAN,
                ..StepDiagnostics::default()
            }
        } else {
            traj.diagnostics[j - 1]
        };
        writeln!(
            m,
            "step {j} {t:.16e} {} {:.16e} {:.16e}",
            d.picard_iters, d.violation, d.min_constrained
        )?;
    }
    m.flush()?;
    Ok(())
}

/// Reads a directory written by [`write_trajectory`]. Picard increments are
/// not persisted and read back as zero.
pub fn read_trajectory(dir: &Path) -> Result<Trajectory> {
    let manifest = open(&dir.join("manifest.txt"))?;
    let mut mesh_id = 0;
    let mut times = Vec::new();
    let mut diagnostics = Vec::new();
    for (k, line) in manifest.lines().enumerate() {
        let line = line?;
        let bad = |m: &str| Error::Parse {
            line: k + 1,
            message: m.to_string(),
        };
        if let Some(id) = line.strip_prefix("# mesh ") {
            mesh_id = u64::from_str_radix(id.trim(), 16).map_err(|_| bad("bad mesh id"))?;
            continue;
        }
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.is_empty() {
            continue;
        }
        if tok.len() != 6 || tok[0] != "step" {
            return Err(bad("expected `step <j> <t> <iters> <violation> <min>`"));
        }
        let j: usize = tok[1].parse().map_err(|_| bad("bad step index"))?;
        if j != times.len() {
            return Err(bad("steps out of order"));
        }
        times.push(tok[2].parse().map_err(|_| bad("bad time"))?);
        if j > 0 {
            diagnostics.push(StepDiagnostics {
                picard_iters: tok[3].parse().map_err(|_| bad("bad iteration count"))?,
                increment: 0.0,
                violation: tok[4].parse().map_err(|_| bad("bad violation"))?,
                min_constrained: tok[5].parse().map_err(|_| bad("bad minimum"))?,
            });
        }
    }
    let states = (0..times.len())
        .map(|j| read_field(open(&dir.join(state_name(j)))?))
        .collect::<Result<Vec<_>>>()?;
    Ok(Trajectory {
        times,
        states,
        diagnostics,
        mesh_id,
    })
}
