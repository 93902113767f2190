use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::{Error, Result};

/// Numeric table with one labelled row per sweep value.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportTable {
    pub key: String,
    pub columns: Vec<String>,
    pub rows: Vec<(String, Vec<f64>)>,
}

impl ReportTable {
    pub fn new(key: &str, columns: &[&str]) -> Self {
        ReportTable {
            key: key.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl Into<String>, values: Vec<f64>) -> Result<()> {
        if values.len() != self.columns.len() {
            return Err(Error::Dimension {
                expected: self.columns.len(),
                got: values.len(),
            });
        }
        self.rows.push((label.into(), values));
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|(_, v)| v[k]).collect())
    }

    /// Comma-separated with a header row and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = format!("{},{}\n", self.key, self.columns.join(","));
        for (label, vals) in &self.rows {
            s.push_str(label);
            for v in vals {
                s.push_str(&format!(",{v:.16e}"));
            }
            s.push('\n');
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path).map_err(|source| Error::Read {
            path: path.to_path_buf(),
            source,
        })?);
        w.write_all(self.to_csv().as_bytes())?;
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trips_values() {
        let mut t = ReportTable::new("eps", &["a", "b"]);
        t.push("0.25", vec![0.1, 1.0 / 3.0]).unwrap();
        assert!(t.push("x", vec![1.0]).is_err());
        let csv = t.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("eps,a,b"));
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row[2].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(t.column("b"), Some(vec![1.0 / 3.0]));
    }
}
