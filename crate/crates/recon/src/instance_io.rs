//! Plain-text files for direction lists and complete instances.
//!
//! Both formats are line oriented. Blank lines and lines starting with `#`
//! are ignored, and numbers are separated by whitespace or commas. Writers
//! emit 17 significant digits, so a write/read round trip is exact.
//!
//! Direction list (one unit vector per line):
//!
//! ```text
//! # three directions in R^2
//! 1 0
//! 0.6, 0.8
//! -1 0
//! ```
//!
//! Instance:
//!
//! ```text
//! dim 2
//! delta 1
//! signal 0.5 -0.25
//! m 0.6 0.8 0.125 0.225
//! ```
//!
//! Each `m` line holds the direction `φ_n`, then the noise `ε_n`, then the
//! observed value `q_n = ⟨x, φ_n⟩ + ε_n`.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use recon_core::measurement::{Instance, Measurement};
use recon_core::sphere::UnitVector;

use crate::csv::fmt_f64;
use crate::error::{HarnessError, Result};

/// Listed directions may be off unit length by this much; they are then
/// renormalized.
pub const DIRECTION_NORM_TOL: f64 = 1e-9;

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn numbers(fields: &[&str], path: &Path, line: usize) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| HarnessError::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("not a finite number: `{f}`"),
            })
        })
        .collect()
}

fn split_fields(line: &str) -> Vec<&str> {
    line.split(|c: char| c.is_whitespace() || c == ',').filter(|f| !f.is_empty()).collect()
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))
}

pub fn parse_directions(text: &str, path: &Path) -> Result<Vec<UnitVector>> {
    let mut out: Vec<UnitVector> = Vec::new();
    for (line, content) in content_lines(text) {
        let err = |message: String| HarnessError::Parse { path: path.to_path_buf(), line, message };
        let v = numbers(&split_fields(content), path, line)?;
        if let Some(first) = out.first() {
            if v.len() != first.dim() {
                return Err(err(format!("expected {} coordinates, found {}", first.dim(), v.len())));
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > DIRECTION_NORM_TOL {
            return Err(err(format!("direction has norm {norm}, expected 1")));
        }
        // keep the listed coordinates when they are unit to rounding so writes round-trip
        let u = if (norm - 1.0).abs() <= 4.0 * f64::EPSILON { UnitVector::new(v) } else { UnitVector::normalize(v) };
        out.push(u.map_err(|e| err(e.to_string()))?);
    }
    if out.is_empty() {
        return Err(HarnessError::Parse { path: path.to_path_buf(), line: 0, message: "no directions".into() });
    }
    Ok(out)
}

pub fn read_directions(path: &Path) -> Result<Vec<UnitVector>> {
    parse_directions(&read_text(path)?, path)
}

pub fn format_directions(dirs: &[UnitVector]) -> String {
    let mut s = String::new();
    for u in dirs {
        let row: Vec<String> = u.as_slice().iter().map(|&x| fmt_f64(x)).collect();
        let _ = writeln!(s, "{}", row.join(" "));
    }
    s
}

pub fn format_instance(instance: &Instance) -> String {
    let join = |xs: &[f64]| xs.iter().map(|&x| fmt_f64(x)).collect::<Vec<_>>().join(" ");
    let mut s = String::new();
    let _ = writeln!(s, "dim {}", instance.dim());
    let _ = writeln!(s, "delta {}", fmt_f64(instance.delta()));
    let _ = writeln!(s, "signal {}", join(instance.signal()));
    for m in instance.measurements() {
        let _ = writeln!(s, "m {} {} {}", join(m.direction.as_slice()), fmt_f64(m.noise), fmt_f64(m.value));
    }
    s
}

pub fn write_instance(path: &Path, instance: &Instance) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))?;
    f.write_all(format_instance(instance).as_bytes()).map_err(|e| HarnessError::io(path, e))
}

pub fn parse_instance(text: &str, path: &Path) -> Result<Instance> {
    let mut dim: Option<usize> = None;
    let mut delta: Option<f64> = None;
    let mut signal: Option<Vec<f64>> = None;
    let mut measurements = Vec::new();
    let mut last_line = 0;
    for (line, content) in content_lines(text) {
        last_line = line;
        let err = |message: String| HarnessError::Parse { path: path.to_path_buf(), line, message };
        let fields = split_fields(content);
        let (key, rest) = fields.split_first().expect("content lines are non-empty");
        match *key {
            "dim" => {
                let [v] = rest else { return Err(err("`dim` takes one value".into())) };
                dim = Some(v.parse().map_err(|_| err(format!("bad dimension `{v}`")))?);
            }
            "delta" => {
                let v = numbers(rest, path, line)?;
                let [v] = v[..] else { return Err(err("`delta` takes one value".into())) };
                delta = Some(v);
            }
            "signal" | "m" => {
                let d = dim.ok_or_else(|| err(format!("`{key}` before `dim`")))?;
                let v = numbers(rest, path, line)?;
                if *key == "signal" {
                    if v.len() != d {
                        return Err(err(format!("signal needs {d} values, found {}", v.len())));
                    }
                    signal = Some(v);
                } else {
                    if v.len() != d + 2 {
                        return Err(err(format!("measurement needs {} values, found {}", d + 2, v.len())));
                    }
                    let direction = UnitVector::new(v[..d].to_vec()).map_err(|e| err(e.to_string()))?;
                    measurements.push(Measurement { direction, noise: v[d], value: v[d + 1] });
                }
            }
            other => return Err(err(format!("unknown record `{other}`"))),
        }
    }
    let missing = |what: &str| HarnessError::Parse {
        path: path.to_path_buf(),
        line: last_line,
        message: format!("missing `{what}` record"),
    };
    let delta = delta.ok_or_else(|| missing("delta"))?;
    let signal = signal.ok_or_else(|| missing("signal"))?;
    Instance::new(signal, delta, measurements)
        .map_err(|e| HarnessError::Parse { path: path.to_path_buf(), line: last_line, message: e.to_string() })
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    parse_instance(&read_text(path)?, path)
}
