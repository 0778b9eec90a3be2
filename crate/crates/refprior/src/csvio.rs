//! CSV formatting helpers shared by every exported artifact.
//!
//! All floating-point output uses '.' as the decimal separator regardless of
//! locale and carries 17 significant digits, enough for exact f64 round-trips,
//! so identical runs produce byte-identical files.

use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Format a float with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Write one CSV row of floats.
pub fn write_row<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let cells: Vec<String> = values.iter().map(|v| fmt_f64(*v)).collect();
    writeln!(w, "{}", cells.join(","))?;
    Ok(())
}

/// Read a CSV of floats written by this crate: one header row, then data rows.
/// Returns the rows; every row must have the same width as the header.
pub fn read_rows(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Argument(format!("{}: empty CSV", path.display())))?;
    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::with_capacity(names.len());
        for cell in line.split(',') {
            let v: f64 = cell.trim().parse().map_err(|_| {
                Error::Argument(format!("{}: bad number {:?} on line {}", path.display(), cell, i + 2))
            })?;
            row.push(v);
        }
        if row.len() != names.len() {
            return Err(Error::Argument(format!(
                "{}: line {} has {} cells, header has {}",
                path.display(),
                i + 2,
                row.len(),
                names.len()
            )));
        }
        rows.push(row);
    }
    Ok((names, rows))
}
