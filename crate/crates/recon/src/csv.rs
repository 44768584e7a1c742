//! CSV output: a `# config: {json}` line, a header, then data rows.
//! Floats use 17 significant digits so files reproduce bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{HarnessError, Result};

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
    /// Free text; must not contain commas or line breaks.
    Text(String),
    /// A quantity that does not apply to this row.
    Empty,
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Float(v) => f.write_str(&fmt_f64(*v)),
            Cell::Text(t) => f.write_str(t),
            Cell::Empty => Ok(()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub config_json: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# config: {}", self.config_json);
        let _ = writeln!(s, "{}", self.header.join(","));
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.header.len());
            let cells: Vec<String> = row.iter().map(Cell::to_string).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| HarnessError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().trim_start_matches('-').replace('.', "");
            assert_eq!(mantissa.len(), 17);
        }
    }

    #[test]
    fn renders_rows() {
        let t = Table {
            config_json: "{\"d\":2}".into(),
            header: vec!["n", "x", "y"],
            rows: vec![vec![3usize.into(), 0.5.into(), Cell::Empty]],
        };
        assert_eq!(t.render(), "# config: {\"d\":2}\nn,x,y\n3,5.0000000000000000e-1,\n");
    }
}
